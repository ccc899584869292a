#pragma once

#include "ahlfors/approx_id.hpp"
#include "ahlfors/common.hpp"
#include "ahlfors/space.hpp"

#include <string>

namespace ahlfors {

enum class KernelKind { bessel, riesz, frac_deriv };

const char* to_string(KernelKind kind);

/// Density g of the scale measure g(t) dt/t for each kernel kind.
double scale_weight(KernelKind kind, double alpha, double t);

struct KernelOptions {
  /// Rows whose guard holds at this scale are the "valid" rows of the kernel.
  double reference_scale = 1.0;
  /// Attach the scale-integral mass below t_min to s(t_min) and above t_max
  /// to s(t_max). Off for the truncated comparison kernels.
  bool closures = true;
};

/// k(x,y) = int g(t) s(x,y,t) dt/t on the sample, log-trapezoid over the
/// AI grid plus end closures. The frac_deriv kernel has zero diagonal.
struct PotentialKernel {
  KernelKind kind = KernelKind::bessel;
  double alpha = 0.0;
  Matrix matrix;
  SpacePtr space;
  ScaleGrid grid;
  Mask row_valid;
  double reference_scale = 1.0;

  /// Scalar quadrature of g over (0, inf) as assembled, closures included.
  double weight_total = 0.0;
  /// |1 - weight_total| for the bessel kind; the row-sum error budget.
  double quadrature_budget = 0.0;
  double head_weight = 0.0;
  double tail_weight = 0.0;
  /// s(t_min) is diagonal, so the head closure is exact.
  bool head_exact = false;
  /// s(t_max) is constant, so the tail closure is exact.
  bool tail_exact = false;
  /// Estimated mass lost by truncation (riesz tail, non-exact frac head).
  double truncation_estimate = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
};

PotentialKernel bessel_kernel(const AICollection& ai, double alpha, const KernelOptions& opt = {});
PotentialKernel riesz_kernel(const AICollection& ai, double alpha, const KernelOptions& opt = {});
PotentialKernel frac_deriv_kernel(const AICollection& ai, double alpha, const KernelOptions& opt = {});
PotentialKernel build_kernel(const AICollection& ai, KernelKind kind, double alpha,
                             const KernelOptions& opt = {});

/// Scalar log-trapezoid of the bessel scale weight on a grid, closures included.
double bessel_weight_quadrature(const ScaleGrid& grid, double alpha);

/// Log-log slope of kernel entries against distance over guarded rows.
/// Entries are binned by log d; the outer tenth of the log range on each side
/// is dropped before fitting.
ExponentFit fit_decay_exponent(const PotentialKernel& k, double d_lo, double d_hi,
                               double predicted, double tolerance, const std::string& lemma,
                               const std::string& regime);

struct KernelLemmaOptions {
  double q_exponent = 1.0;
  double tolerance = 0.1;
  /// Near regime starts at this many resolutions.
  double near_lo_factor = 4.0;
  double near_hi = 0.5;
  /// Absolute threshold of the far regime.
  double far_lo = 4.0;
  std::size_t sample_rows = 32;
};

PropertyReport verify_kernel_lemmas(const PotentialKernel& k, const KernelLemmaOptions& opt = {});

/// k_riesz >= k_bessel entrywise (both truncated, no closures).
PropertyReport check_domination(const PotentialKernel& riesz, const PotentialKernel& bessel);

/// Writes i, j, value for rows with the given stride.
void export_kernel_csv(const PotentialKernel& k, const std::string& path, std::size_t row_stride = 1);

}  // namespace ahlfors
