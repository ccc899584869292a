#pragma once

#include "ahlfors/approx_id.hpp"
#include "ahlfors/common.hpp"
#include "ahlfors/kernels.hpp"
#include "ahlfors/spaces_norms.hpp"

#include <complex>
#include <functional>
#include <vector>

namespace ahlfors {

/// n equispaced samples of a function with the given period.
class PeriodicGrid {
 public:
  PeriodicGrid(double period, std::size_t n);

  double period() const { return period_; }
  std::size_t size() const { return n_; }
  double spacing() const { return period_ / static_cast<double>(n_); }
  /// Signed frequency of DFT bin k (cycles per unit length).
  double frequency(std::size_t k) const;

  std::vector<std::complex<double>> forward(const Vector& f) const;
  Vector inverse(const std::vector<std::complex<double>>& F) const;
  /// Inverse transform of m(|xi|) times the transform of f.
  Vector apply_multiplier(const Vector& f, const std::function<double(double)>& m) const;

 private:
  double period_;
  std::size_t n_;
};

/// Multiplier (2 pi |xi|)^alpha, zero at xi = 0.
Vector classical_frac_derivative(const PeriodicGrid& grid, const Vector& f, double alpha);
/// Multiplier (1 + 4 pi^2 |xi|^2)^(-alpha/2).
Vector classical_bessel(const PeriodicGrid& grid, const Vector& f, double alpha);

/// 2^(-alpha/2) <= (1 + (2 pi |xi|)^alpha) / (1 + 4 pi^2 |xi|^2)^(alpha/2) <= 2
/// at every grid frequency.
PropertyReport multiplier_sandwich(const PeriodicGrid& grid, double alpha);

/// phi(u) = (h * h)(u) / c_H^2 on the line, with c_H = int h(|v|) dv.
double profile_phi(double u);
/// c_phi = int_0^inf alpha u^(1 + alpha) phi(u) du / u.
double profile_constant(double alpha);
/// C_{1,alpha} in (2 pi |xi|)^alpha f^ = C int (f(x) - f(y)) / |x - y|^(1 + alpha) dy.
double riesz_normalization(double alpha);

/// Max |s_t(i, i + k) - s_t(i + 1, i + 1 + k)| over guarded interior rows of a
/// uniform line, for every scale where such rows exist.
PropertyReport translation_invariance(const AICollection& ai, double tolerance = 1e-6);

struct EuclidOptions {
  /// The sampled n_alpha is used for d < near_radius; beyond it a power law
  /// A d^(-1-alpha) fitted on [near_radius/4, near_radius] takes over and
  /// continues analytically past the ends of the sample.
  double near_radius = 0.25;
  double spread_tol = 0.02;
  double quadrature_tol = 0.03;
};

/// Periodic grid with the line's spacing and pad_factor times its length.
PeriodicGrid aligned_grid(const MetricMeasureSpace& line, std::size_t pad_factor = 16);

/// Fits C in D_alpha f = C D_alpha^classical f for each test function and
/// compares with c_phi / C_{1,alpha}.
PropertyReport euclidean_consistency(const PotentialKernel& kD, const PeriodicGrid& grid,
                                     const std::vector<TestFunction>& battery,
                                     const EuclidOptions& opt = {});

}  // namespace ahlfors
