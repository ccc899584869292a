#pragma once

#include "ahlfors/common.hpp"
#include "ahlfors/space.hpp"

#include <Eigen/Sparse>

#include <memory>
#include <optional>
#include <vector>

namespace ahlfors {

/// h = 1 on [0, 1/2], 0 on [2, inf), quintic smoothstep in between
/// (C^2 with vanishing first and second derivatives at both ends).
struct BumpProfile {
  static constexpr double plateau = 0.5;
  static constexpr double cutoff = 2.0;
  static double value(double r);
  static double derivative(double r);
};

/// Logarithmically spaced scales with trapezoid weights for integrals dt/t.
class ScaleGrid {
 public:
  ScaleGrid() = default;
  /// t_min e^{k eps}, k = 0..count-1.
  ScaleGrid(double t_min, double log_step, std::size_t count);

  /// Covers [t_min, t_max] with at least points_per_decade scales per decade;
  /// t_max is hit exactly.
  static ScaleGrid log_spaced(double t_min, double t_max, double points_per_decade);
  /// Step ln(2)/steps_per_octave, so that v = 2^m lands on the grid.
  static ScaleGrid octave_aligned(double t_min, double t_max, int steps_per_octave);

  std::size_t size() const { return t_.size(); }
  double t(std::size_t k) const { return t_[k]; }
  const std::vector<double>& values() const { return t_; }
  double log_step() const { return eps_; }
  double t_min() const { return t_.front(); }
  double t_max() const { return t_.back(); }
  double trapezoid_weight(std::size_t k) const;
  /// Grid index of t (relative tolerance 1e-9), if present.
  std::optional<std::size_t> index_of(double t) const;

 private:
  std::vector<double> t_;
  double eps_ = 0.0;
};

/// Default grid: from min(resolution, min_separation)/4 up to a scale past
/// twice the diameter, where every sampled s(., ., t) is the constant 1/m(X).
ScaleGrid default_scale_grid(const MetricMeasureSpace& space, double points_per_decade = 12.0);

/// One symmetric kernel matrix on the sample, dense or sparse by density.
class ScaleKernel {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  ScaleKernel() = default;
  explicit ScaleKernel(Matrix dense);
  explicit ScaleKernel(Sparse sparse);

  bool is_dense() const { return dense_; }
  std::size_t size() const;
  std::size_t nonzeros() const;
  double coeff(std::size_t i, std::size_t j) const;
  /// Row i as a dense vector.
  Vector row(std::size_t i) const;
  /// K v.
  Vector apply(const Vector& v) const;
  /// acc += c K.
  void add_to(Matrix& acc, double c) const;
  double max_abs() const;
  double max_asymmetry() const;
  Matrix to_dense() const;
  const Matrix& dense() const { return dense_mat_; }
  const Sparse& sparse() const { return sparse_mat_; }

  /// a*A + b*B.
  static ScaleKernel combine(const ScaleKernel& A, double a, const ScaleKernel& B, double b);

  template <class F>
  void for_each_in_row(std::size_t i, F&& f) const {
    if (dense_) {
      const auto r = static_cast<Eigen::Index>(i);
      for (Eigen::Index j = 0; j < dense_mat_.cols(); ++j)
        f(static_cast<std::size_t>(j), dense_mat_(r, j));
    } else {
      for (Sparse::InnerIterator it(sparse_mat_, static_cast<Eigen::Index>(i)); it; ++it)
        f(static_cast<std::size_t>(it.col()), it.value());
    }
  }

 private:
  bool dense_ = true;
  Matrix dense_mat_;
  Sparse sparse_mat_;
};

/// T_t f(x) = t^{-N} sum_y h(d(x,y)/t) f(y) w(y).
Vector t_operator(const MetricMeasureSpace& space, double t, const Vector& f);

struct AIOptions {
  double margin_factor = 1.5;
  /// Scales whose neighbourhood graph fills more than this fraction of n^2
  /// are assembled densely.
  double dense_threshold = 0.15;
};

/// s(x,y,t) = phi(x) phi(y) t^{-2N} sum_z h(d(x,z)/t) h(d(z,y)/t) psi(z) w(z)
/// with phi = 1/T_t 1 and psi = 1/T_t phi, for every t on the grid.
class AICollection {
 public:
  AICollection(SpacePtr space, ScaleGrid grid, AIOptions options = {});

  const MetricMeasureSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  const ScaleGrid& grid() const { return grid_; }
  const GuardRegion& guard() const { return guard_; }
  std::size_t scale_count() const { return grid_.size(); }
  double t(std::size_t k) const { return grid_.t(k); }

  const ScaleKernel& s(std::size_t k) const { return s_[k]; }
  const Vector& phi(std::size_t k) const { return phi_[k]; }
  const Vector& psi(std::size_t k) const { return psi_[k]; }

  /// S_t f = sum_y s(., y, t) f(y) w(y).
  Vector apply_s(std::size_t k, const Vector& f) const;
  /// Q_t f by the centred difference -(S_{t e^eps} - S_{t e^-eps}) f / (2 eps).
  Vector apply_q(std::size_t k, const Vector& f) const;
  /// q(., ., t_k) as a matrix; throws boundary-scale at the grid ends.
  ScaleKernel q(std::size_t k) const;

  /// s(x_i, ., t_k) equals its value on the full space.
  bool valid(std::size_t i, std::size_t k) const { return guard_.valid(i, t(k)); }
  /// q(x_i, ., t_k) uses s at t_{k+1}.
  bool q_valid(std::size_t i, std::size_t k) const {
    return k + 1 < scale_count() && guard_.valid(i, t(k + 1));
  }
  Mask valid_rows(std::size_t k) const { return guard_.valid_mask(t(k)); }

  /// Stored doubles (s matrices plus phi/psi).
  std::size_t memory_entries() const;

 private:
  void build_scale(std::size_t k, const AIOptions& options);

  SpacePtr space_;
  ScaleGrid grid_;
  GuardRegion guard_;
  std::vector<ScaleKernel> s_;
  std::vector<Vector> phi_, psi_;
};

using AIPtr = std::shared_ptr<const AICollection>;

struct AIVerifyOptions {
  /// Scales below resolved_factor * resolution are discretisation dominated
  /// and excluded from the constant-stability checks.
  double resolved_factor = 4.0;
  double normalization_tol = 1e-12;
  double q_constants_tol = 1e-8;
  double symmetry_tol = 1e-12;
  /// max/min of a scale constant over the resolved guarded range.
  double stability_ratio = 1.5;
  double holder_slope_min = 0.9;
  /// One-sided differences of s in log t disagreeing by more than this are
  /// flagged (reported only).
  double derivative_disagreement = 0.10;
};

PropertyReport verify_ai_properties(const AICollection& ai, const AIVerifyOptions& options = {});

/// f against its reproducing formula with closures at both grid ends:
/// f = (f - S_{t_1} f) + sum_k w_k Q_k f + S_{t_{K-2}} f, evaluated on rows
/// guarded at the top scale.
PropertyReport calderon_residual(const AICollection& ai, const GridFunction& f,
                                 double tolerance = 0.02);

}  // namespace ahlfors
