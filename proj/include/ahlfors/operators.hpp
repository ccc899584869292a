#pragma once

#include "ahlfors/approx_id.hpp"
#include "ahlfors/common.hpp"
#include "ahlfors/kernels.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ahlfors {

enum class OperatorKind { J, I, D, composite, residual };

const char* to_string(OperatorKind kind);

/// Matrix acting on point values: (A f)_i = sum_j A_ij f_j. Quadrature weights
/// are already folded in.
struct OperatorMatrix {
  OperatorKind kind = OperatorKind::J;
  double alpha = 0.0;
  Matrix matrix;
  Mask row_valid;
  std::string provenance;
};

/// J = K W.
OperatorMatrix bessel_operator(const PotentialKernel& k);
/// I = K' W.
OperatorMatrix riesz_operator(const PotentialKernel& k);
/// D = diag(N w) - N W: zero row sums by construction.
OperatorMatrix frac_derivative_operator(const PotentialKernel& n);
/// (I + D) J.
OperatorMatrix composite_operator(const OperatorMatrix& J, const OperatorMatrix& D);
/// I - (I + D) J.
OperatorMatrix residual_operator(const OperatorMatrix& J, const OperatorMatrix& D);

GridFunction apply_bessel(const PotentialKernel& k, const GridFunction& g);
GridFunction apply_riesz(const PotentialKernel& k, const GridFunction& f);
/// sum_{y != x} n(x,y) (f(x) - f(y)) w(y).
GridFunction apply_frac_derivative(const PotentialKernel& n, const GridFunction& f);

/// Kernel-side J f and (I + D) f against their Q_t representations
/// J f = S_{t_{K-2}} f + sum w_k rho(t_k) Q_k f and
/// (I + D) f = (f - S_{t_1} f) + sum w_k (1 + t_k^-alpha) Q_k f + S_{t_{K-2}} f,
/// rho(t) = 1 / (1 + t^-alpha). Both kernels must come from this AI's grid.
PropertyReport q_representation_check(const AICollection& ai, const PotentialKernel& kJ,
                                      const PotentialKernel& kD, const GridFunction& f,
                                      double tolerance = 0.03);

struct ContractionOptions {
  std::uint64_t seed = 1;
  std::size_t max_iterations = 500;
  double rayleigh_tol = 1e-6;
  std::size_t probes = 64;
};

struct ContractionReport {
  double alpha = 0.0;
  double p = 2.0;
  double estimate = 0.0;
  std::string method;  // "power_iteration" or "random_probe_lower_bound"
  std::size_t iterations = 0;
  bool converged = false;
  bool rayleigh_monotone = true;
  std::size_t guarded_size = 0;
  std::vector<double> history;  // singular value estimate per iteration
};

/// Weighted l^p operator norm of the residual restricted to the guarded rows
/// and columns of J.
ContractionReport contraction_norm(const PotentialKernel& kJ, const PotentialKernel& kD, double p,
                                   const ContractionOptions& opt = {});
/// Same estimate for an explicit square matrix acting on weighted l^p.
ContractionReport matrix_norm_estimate(const Matrix& R, const Vector& weights, double p,
                                       const ContractionOptions& opt = {});

struct InversionResult {
  GridFunction g;
  std::size_t iterations = 0;
  double contraction = 0.0;
  /// ||J g - f||_2 on the guarded rows.
  double residual = 0.0;
  std::vector<double> increments;
};

/// g = sum_k R^k (I + D) f on the full sample, truncated once the weighted l^2
/// norm of the increment drops below tol.
InversionResult invert_bessel(const PotentialKernel& kJ, const PotentialKernel& kD,
                              const GridFunction& f, double tol, std::size_t max_iterations = 200);

struct TavOptions {
  std::size_t sample_rows = 16;
  double zero_tol = 1e-6;
};

/// Samples N_{alpha,v}(x, z) = sum_u w_u rho(uv) (Q_u W Q_{uv})(x, z) with
/// rho(t) = 1 / (1 + t^alpha), and checks T 1 = 0, T* 1 = 0, the size bound
/// sup |N| d^N / min(v, 1/v)^delta, the smoothness ratio and the support.
PropertyReport t_alpha_v_kernel(const AICollection& ai, double alpha, double v, double delta,
                                const TavOptions& opt = {});

}  // namespace ahlfors
