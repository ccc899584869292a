#pragma once

#include "ahlfors/common.hpp"
#include "ahlfors/kernels.hpp"
#include "ahlfors/space.hpp"

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace ahlfors {

/// Mf(x) = max over radii 2^k resolution (up to the domain radius) of the
/// average of |f| on B(x, r). Missing entries of f count as zero.
GridFunction maximal_function(const MetricMeasureSpace& space, const GridFunction& f);

/// E_p f(t) = (sum_x w_x avg_{B(x,t)} |f(x) - f(y)|^p)^(1/p) over rows x with
/// boundary distance >= t whose whole ball is valid in f and in `rows`.
double modulus_of_continuity(const MetricMeasureSpace& space, const GridFunction& f, double p,
                             double t, const Mask& rows = {});

/// (t, E_p f(t)) for each t.
std::vector<std::pair<double, double>> modulus_curve(const MetricMeasureSpace& space,
                                                     const GridFunction& f, double p,
                                                     const std::vector<double>& ts,
                                                     const Mask& rows = {});

/// Log-log slope of E_p f over [t_lo, t_hi], sampled at `per_decade` radii.
LineFit modulus_slope(const MetricMeasureSpace& space, const GridFunction& f, double p,
                      double t_lo, double t_hi, const Mask& rows = {}, double per_decade = 8);

/// Default radii for E_p curves: 8 per decade from 2 resolutions to the
/// largest boundary distance.
std::vector<double> default_modulus_radii(const MetricMeasureSpace& space, double per_decade = 8);

/// ||f||_p + (int t^(-alpha q) E_p f(t)^q dt/t)^(1/q) by log-trapezoid on ts;
/// q = inf takes the sup of t^-alpha E_p f(t).
double besov_norm(const MetricMeasureSpace& space, const GridFunction& f, double alpha, double p,
                  double q, const std::vector<double>& ts = {}, const Mask& rows = {});

/// max over valid pairs of |f(x) - f(y)| / (d^beta (g(x) + g(y))); inf when a
/// zero denominator meets a nonzero difference.
double hajlasz_constant(const MetricMeasureSpace& space, const GridFunction& f,
                        const GridFunction& g, double beta, const Mask& rows = {});

/// [f]_beta = max over valid pairs of |f(x) - f(y)| / d^beta.
double lipschitz_seminorm(const MetricMeasureSpace& space, const GridFunction& f, double beta,
                          const Mask& rows = {});

/// g(x) = max_y |f(x) - f(y)| / d(x, y)^beta: a beta-Hajlasz gradient of f
/// with constant 1.
GridFunction difference_quotient_gradient(const MetricMeasureSpace& space, const GridFunction& f,
                                          double beta);

/// (sum_{x != z} w_x w_z |f(x) - f(z)|^p / d^(N + s p))^(1/p) over valid pairs.
double besov_double_integral(const MetricMeasureSpace& space, const GridFunction& f, double s,
                             double p, const Mask& rows = {});

struct NormBundle {
  std::map<double, double> lp;
  double besov = 0.0;
  double hajlasz = 0.0;
  double lipschitz = 0.0;
  std::vector<std::pair<double, double>> ep_curve;
};

struct NormRequest {
  std::vector<double> ps{1.0, 2.0};
  double alpha = 0.3;  // Besov smoothness
  double p = 2.0;      // Besov and E_p integrability
  double q = kInf;
  double beta = 0.3;   // Hajlasz and Lipschitz exponent
};

/// Every quantity at once; the Hajlasz constant uses `gradient`.
NormBundle compute_norms(const MetricMeasureSpace& space, const GridFunction& f,
                         const GridFunction& gradient, const NormRequest& req,
                         const Mask& rows = {});

/// Continuous test functions, evaluated from coordinates so the same function
/// can be sampled on a space and its refinement.
struct TestFunction {
  enum class Shape { smooth_bump, power_bump };
  struct Term {
    Shape shape = Shape::smooth_bump;
    std::vector<double> center;
    double radius = 1.0;
    double amplitude = 1.0;
    double beta = 1.0;  // power_bump: amplitude * max(0, radius^beta - r^beta)
  };
  std::vector<Term> terms;

  Vector evaluate(const MetricMeasureSpace& space) const;
};

/// Seeded sums of `bumps` smooth bumps with centers drawn from the points of
/// `region` and radii in [radius_lo, radius_hi], clipped to half the center's
/// boundary distance.
std::vector<TestFunction> smooth_battery(const MetricMeasureSpace& reference, const Mask& region,
                                         std::size_t count, std::uint64_t seed, double radius_lo,
                                         double radius_hi, std::size_t bumps = 3);
/// Seeded single power bumps of exponent beta.
std::vector<TestFunction> power_battery(const MetricMeasureSpace& reference, const Mask& region,
                                        std::size_t count, std::uint64_t seed, double beta,
                                        double radius_lo, double radius_hi);

/// Random bounded piecewise-constant function: each point takes the value of
/// its nearest cell center (Euclidean in coordinates). Values are uniform in
/// [-1, 1]; centers are drawn uniformly from the coordinate bounding box.
struct CellFunction {
  std::vector<std::vector<double>> centers;
  std::vector<double> values;

  Vector evaluate(const MetricMeasureSpace& space) const;
};

CellFunction random_cell_function(const MetricMeasureSpace& reference, std::size_t cells,
                                  std::uint64_t seed);

enum class ImprovementFamily { lipschitz, besov, hajlasz };
const char* to_string(ImprovementFamily f);
ImprovementFamily parse_improvement_family(const std::string& s);

struct EmbeddingOptions {
  std::size_t battery = 16;
  std::uint64_t seed = 7;
  double stability_tol = 0.25;
};

/// sup over a battery of (target seminorm of J f) / (source seminorm of f) for
/// C^beta -> C^(alpha+beta), B^beta_pp -> B^(alpha+beta)_pp or
/// M^(beta,p) -> M^(alpha+beta,p). With `refined`, the same battery is rerun
/// on the refined kernel and the two suprema must agree within stability_tol.
PropertyReport improvement_experiment(const PotentialKernel& kJ, const PotentialKernel* refined,
                                      ImprovementFamily family, double beta, double p,
                                      const EmbeddingOptions& opt = {});

enum class EmbeddingRegime { automatic, subcritical, critical, supercritical };
const char* to_string(EmbeddingRegime r);

/// Sobolev embedding constants for J_alpha on a normalized battery:
/// subcritical p < N/alpha: ||J g||_{p*} with 1/p* = 1/p - alpha/N;
/// critical p = N/alpha: ||J g||_q for q in {p, 2p, 4p};
/// supercritical p > N/alpha: ||J g||_inf and [J g]_{alpha - N/p}.
PropertyReport sobolev_embedding_experiment(const PotentialKernel& kJ,
                                            const PotentialKernel* refined, double p,
                                            EmbeddingRegime regime = EmbeddingRegime::automatic,
                                            const EmbeddingOptions& opt = {});

/// max over sampled balls of avg_B |f - f_B| / (diam(B)^alpha avg_B Mg), for
/// balls that lie inside the valid rows.
PropertyReport poincare_check(const MetricMeasureSpace& space, const GridFunction& f,
                              const GridFunction& g, double alpha, const Mask& rows = {},
                              std::size_t max_centers = 48);

}  // namespace ahlfors
