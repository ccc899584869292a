#include "ahlfors/spaces_norms.hpp"

#include "ahlfors/operators.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace ahlfors {

namespace {

using Idx = Eigen::Index;

double val(const GridFunction& f, std::size_t i) { return f.values[static_cast<Idx>(i)]; }

bool ok(const Mask& m, std::size_t i) { return m.empty() || m[i]; }

void require_size(const MetricMeasureSpace& space, const GridFunction& f) {
  if (f.size() != space.size()) fail(ErrorCode::invalid_argument, "function size mismatch");
}

// Valid entries of f that are also in `rows`.
Mask usable(const GridFunction& f, const Mask& rows) {
  Mask m(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) m[i] = f.is_valid(i) && ok(rows, i);
  return m;
}

// max over pairs i < j with both usable of ratio(i, j); ratio may return a
// negative value to skip the pair.
template <class Ratio>
double pair_max(const MetricMeasureSpace& space, const Mask& use, Ratio&& ratio) {
  const std::size_t n = space.size();
  std::vector<double> row_max(n, 0.0);
  detail::parallel_for(n, [&](std::size_t i) {
    if (!use[i]) return;
    double m = 0.0;
    for (std::size_t j = i + 1; j < n; ++j)
      if (use[j]) m = std::max(m, ratio(i, j));
    row_max[i] = m;
  });
  return *std::max_element(row_max.begin(), row_max.end());
}

std::vector<double> log_radii(double lo, double hi, double per_decade) {
  std::vector<double> ts;
  if (!(hi > lo)) return {lo};
  const auto steps = static_cast<std::size_t>(std::ceil(std::log10(hi / lo) * per_decade - 1e-9));
  for (std::size_t k = 0; k <= steps; ++k)
    ts.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / static_cast<double>(steps)));
  return ts;
}

double relative_change(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(b - a) / std::max(std::abs(a), std::abs(b));
}

PropertyCheck& finite_check(PropertyReport& rep, const std::string& name, double value) {
  PropertyCheck& c = rep.check_le(name, value, kInf);
  c.pass = std::isfinite(value);
  return c;
}

}  // namespace

GridFunction maximal_function(const MetricMeasureSpace& space, const GridFunction& f) {
  require_size(space, f);
  const std::size_t n = space.size();
  std::vector<double> radii;
  for (double r = space.resolution(); r <= space.domain_radius() * (1 + 1e-12); r *= 2)
    radii.push_back(r);
  if (radii.empty()) radii.push_back(space.resolution());
  const std::size_t R = radii.size();
  Vector absf(static_cast<Idx>(n));
  for (std::size_t i = 0; i < n; ++i) absf[static_cast<Idx>(i)] = f.is_valid(i) ? std::abs(val(f, i)) : 0.0;

  Vector out(static_cast<Idx>(n));
  detail::parallel_for(n, [&](std::size_t i) {
    std::vector<double> mass(R, 0.0), sum(R, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      // Relative slack so a grid neighbour at exactly one radius does not
      // fall inside that open ball through rounding.
      const double d = space.dist(i, j) * (1 + 1e-9);
      // Smallest radius whose open ball contains j.
      const auto k = static_cast<std::size_t>(
          std::upper_bound(radii.begin(), radii.end(), d) - radii.begin());
      if (k >= R && j != i) continue;
      const std::size_t b = j == i ? 0 : k;
      mass[b] += space.weight(j);
      sum[b] += space.weight(j) * absf[static_cast<Idx>(j)];
    }
    double m = 0.0, cm = 0.0, cs = 0.0;
    for (std::size_t k = 0; k < R; ++k) {
      cm += mass[k];
      cs += sum[k];
      if (cm > 0) m = std::max(m, cs / cm);
    }
    out[static_cast<Idx>(i)] = m;
  });
  return GridFunction(std::move(out));
}

double modulus_of_continuity(const MetricMeasureSpace& space, const GridFunction& f, double p,
                             double t, const Mask& rows) {
  require_size(space, f);
  if (!(p >= 1) || std::isinf(p)) fail(ErrorCode::invalid_argument, "E_p needs 1 <= p < inf");
  if (t < space.resolution()) {
    std::ostringstream msg;
    msg << "E_p radius " << t << " below the resolution " << space.resolution();
    fail(ErrorCode::degenerate_radius, msg.str());
  }
  const std::size_t n = space.size();
  const Mask use = usable(f, rows);
  std::vector<double> contrib(n, 0.0);
  std::vector<char> eligible(n, 0);
  detail::parallel_for(n, [&](std::size_t i) {
    if (!use[i] || space.boundary_distance(i) < t) return;
    double m = 0.0, s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && !(space.dist(i, j) < t)) continue;
      if (!use[j]) return;
      m += space.weight(j);
      s += space.weight(j) * std::pow(std::abs(val(f, i) - val(f, j)), p);
    }
    contrib[i] = space.weight(i) * s / m;
    eligible[i] = 1;
  });
  if (std::none_of(eligible.begin(), eligible.end(), [](char c) { return c != 0; })) {
    std::ostringstream msg;
    msg << "no row whose ball of radius " << t << " lies inside the valid set";
    fail(ErrorCode::insufficient_geometry, msg.str());
  }
  double acc = 0.0;
  for (double c : contrib) acc += c;
  return std::pow(acc, 1.0 / p);
}

std::vector<std::pair<double, double>> modulus_curve(const MetricMeasureSpace& space,
                                                     const GridFunction& f, double p,
                                                     const std::vector<double>& ts,
                                                     const Mask& rows) {
  std::vector<std::pair<double, double>> out;
  for (double t : ts) {
    try {
      out.emplace_back(t, modulus_of_continuity(space, f, p, t, rows));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::insufficient_geometry) throw;
    }
  }
  return out;
}

LineFit modulus_slope(const MetricMeasureSpace& space, const GridFunction& f, double p,
                      double t_lo, double t_hi, const Mask& rows, double per_decade) {
  std::vector<double> x, y;
  for (const auto& [t, e] : modulus_curve(space, f, p, log_radii(t_lo, t_hi, per_decade), rows)) {
    if (!(e > 0)) continue;
    x.push_back(std::log(t));
    y.push_back(std::log(e));
  }
  if (x.size() < 3) fail(ErrorCode::insufficient_scales, "fewer than 3 usable radii for the E_p slope");
  return fit_line(x, y);
}

std::vector<double> default_modulus_radii(const MetricMeasureSpace& space, double per_decade) {
  double hi = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) hi = std::max(hi, space.boundary_distance(i));
  return log_radii(2 * space.resolution(), std::max(hi, 4 * space.resolution()), per_decade);
}

double besov_norm(const MetricMeasureSpace& space, const GridFunction& f, double alpha, double p,
                  double q, const std::vector<double>& ts_in, const Mask& rows) {
  if (!(alpha > 0)) fail(ErrorCode::invalid_argument, "Besov norm needs alpha > 0");
  if (!(p >= 1) || std::isinf(p)) fail(ErrorCode::invalid_argument, "Besov norm needs 1 <= p < inf");
  if (!(q >= 1)) fail(ErrorCode::invalid_argument, "Besov norm needs q >= 1");
  const std::vector<double> ts = ts_in.empty() ? default_modulus_radii(space) : ts_in;
  const auto curve = modulus_curve(space, f, p, ts, rows);
  double semi = 0.0;
  if (std::isinf(q)) {
    for (const auto& [t, e] : curve) semi = std::max(semi, std::pow(t, -alpha) * e);
  } else {
    for (std::size_t k = 0; k + 1 < curve.size(); ++k) {
      const auto [t0, e0] = curve[k];
      const auto [t1, e1] = curve[k + 1];
      semi += 0.5 * (std::pow(t0, -alpha * q) * std::pow(e0, q) +
                     std::pow(t1, -alpha * q) * std::pow(e1, q)) * std::log(t1 / t0);
    }
    semi = std::pow(semi, 1.0 / q);
  }
  const GridFunction restricted(f.values, usable(f, rows));
  return lp_norm(space, restricted, p) + semi;
}

double hajlasz_constant(const MetricMeasureSpace& space, const GridFunction& f,
                        const GridFunction& g, double beta, const Mask& rows) {
  require_size(space, f);
  require_size(space, g);
  if (!(beta > 0)) fail(ErrorCode::invalid_argument, "Hajlasz constant needs beta > 0");
  Mask use = usable(f, rows);
  for (std::size_t i = 0; i < use.size(); ++i) {
    if (!g.is_valid(i)) use[i] = false;
    else if (use[i] && val(g, i) < 0) fail(ErrorCode::invalid_argument, "gradient candidate must be >= 0");
  }
  return pair_max(space, use, [&](std::size_t i, std::size_t j) {
    const double num = std::abs(val(f, i) - val(f, j));
    const double den = std::pow(space.dist(i, j), beta) * (val(g, i) + val(g, j));
    if (den == 0.0) return num > 0 ? kInf : 0.0;
    return num / den;
  });
}

double lipschitz_seminorm(const MetricMeasureSpace& space, const GridFunction& f, double beta,
                          const Mask& rows) {
  require_size(space, f);
  if (!(beta > 0)) fail(ErrorCode::invalid_argument, "seminorm needs beta > 0");
  return pair_max(space, usable(f, rows), [&](std::size_t i, std::size_t j) {
    return std::abs(val(f, i) - val(f, j)) / std::pow(space.dist(i, j), beta);
  });
}

GridFunction difference_quotient_gradient(const MetricMeasureSpace& space, const GridFunction& f,
                                          double beta) {
  require_size(space, f);
  if (!(beta > 0)) fail(ErrorCode::invalid_argument, "gradient needs beta > 0");
  const std::size_t n = space.size();
  Vector g = Vector::Zero(static_cast<Idx>(n));
  detail::parallel_for(n, [&](std::size_t i) {
    if (!f.is_valid(i)) return;
    double m = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && f.is_valid(j))
        m = std::max(m, std::abs(val(f, i) - val(f, j)) / std::pow(space.dist(i, j), beta));
    g[static_cast<Idx>(i)] = m;
  });
  return GridFunction(std::move(g), f.valid);
}

double besov_double_integral(const MetricMeasureSpace& space, const GridFunction& f, double s,
                             double p, const Mask& rows) {
  require_size(space, f);
  if (!(p >= 1) || std::isinf(p)) fail(ErrorCode::invalid_argument, "double integral needs 1 <= p < inf");
  const Mask use = usable(f, rows);
  const std::size_t n = space.size();
  const double expo = space.dim() + s * p;
  std::vector<double> row(n, 0.0);
  detail::parallel_for(n, [&](std::size_t i) {
    if (!use[i]) return;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && use[j])
        acc += space.weight(j) * std::pow(std::abs(val(f, i) - val(f, j)), p) /
               std::pow(space.dist(i, j), expo);
    row[i] = space.weight(i) * acc;
  });
  double total = 0.0;
  for (double r : row) total += r;
  return std::pow(total, 1.0 / p);
}

NormBundle compute_norms(const MetricMeasureSpace& space, const GridFunction& f,
                         const GridFunction& gradient, const NormRequest& req, const Mask& rows) {
  NormBundle b;
  const GridFunction restricted(f.values, usable(f, rows));
  for (double p : req.ps) b.lp[p] = lp_norm(space, restricted, p);
  const auto ts = default_modulus_radii(space);
  b.ep_curve = modulus_curve(space, f, req.p, ts, rows);
  b.besov = besov_norm(space, f, req.alpha, req.p, req.q, ts, rows);
  b.hajlasz = hajlasz_constant(space, f, gradient, req.beta, rows);
  b.lipschitz = lipschitz_seminorm(space, f, req.beta, rows);
  return b;
}

Vector TestFunction::evaluate(const MetricMeasureSpace& space) const {
  const std::size_t n = space.size();
  const int dim = space.ambient_dim();
  Vector out = Vector::Zero(static_cast<Idx>(n));
  for (const Term& term : terms) {
    if (static_cast<int>(term.center.size()) != dim)
      fail(ErrorCode::invalid_argument, "test function center has the wrong dimension");
    for (std::size_t i = 0; i < n; ++i) {
      double r2 = 0.0;
      for (int a = 0; a < dim; ++a) {
        const double d = space.coord(i, a) - term.center[static_cast<std::size_t>(a)];
        r2 += d * d;
      }
      const double r = std::sqrt(r2);
      if (r >= term.radius) continue;
      double v;
      if (term.shape == Shape::smooth_bump) {
        const double u = r / term.radius;
        v = std::exp(1.0 - 1.0 / (1.0 - u * u));
      } else {
        v = std::pow(term.radius, term.beta) - std::pow(r, term.beta);
      }
      out[static_cast<Idx>(i)] += term.amplitude * v;
    }
  }
  return out;
}

namespace {

std::vector<std::size_t> region_points(const MetricMeasureSpace& space, const Mask& region) {
  auto idx = mask_indices(region, space.size());
  if (idx.empty()) fail(ErrorCode::insufficient_geometry, "empty region for the test battery");
  return idx;
}

std::vector<double> coords_of(const MetricMeasureSpace& space, std::size_t i) {
  std::vector<double> c(static_cast<std::size_t>(space.ambient_dim()));
  for (int a = 0; a < space.ambient_dim(); ++a) c[static_cast<std::size_t>(a)] = space.coord(i, a);
  return c;
}

}  // namespace

std::vector<TestFunction> smooth_battery(const MetricMeasureSpace& reference, const Mask& region,
                                         std::size_t count, std::uint64_t seed, double radius_lo,
                                         double radius_hi, std::size_t bumps) {
  if (!(radius_lo > 0 && radius_hi >= radius_lo))
    fail(ErrorCode::invalid_argument, "battery radii must satisfy 0 < lo <= hi");
  const auto pts = region_points(reference, region);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TestFunction> out(count);
  for (auto& fn : out) {
    for (std::size_t b = 0; b < std::max<std::size_t>(bumps, 1); ++b) {
      const std::size_t c = pts[pick(rng)];
      TestFunction::Term t;
      t.center = coords_of(reference, c);
      t.radius = std::min(radius_lo + (radius_hi - radius_lo) * unit(rng),
                          std::max(0.5 * reference.boundary_distance(c), 2 * reference.resolution()));
      t.amplitude = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + 0.5 * unit(rng));
      fn.terms.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<TestFunction> power_battery(const MetricMeasureSpace& reference, const Mask& region,
                                        std::size_t count, std::uint64_t seed, double beta,
                                        double radius_lo, double radius_hi) {
  if (!(beta > 0 && beta <= 1)) fail(ErrorCode::invalid_argument, "power bump needs 0 < beta <= 1");
  auto out = smooth_battery(reference, region, count, seed, radius_lo, radius_hi, 1);
  for (auto& fn : out)
    for (auto& t : fn.terms) {
      t.shape = TestFunction::Shape::power_bump;
      t.beta = beta;
      t.amplitude = 1.0;
    }
  return out;
}

Vector CellFunction::evaluate(const MetricMeasureSpace& space) const {
  if (centers.empty() || centers.size() != values.size())
    fail(ErrorCode::invalid_argument, "cell function needs matching centers and values");
  const int dim = space.ambient_dim();
  Vector out(static_cast<Idx>(space.size()));
  for (std::size_t i = 0; i < space.size(); ++i) {
    double best = kInf;
    std::size_t arg = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (static_cast<int>(centers[c].size()) != dim)
        fail(ErrorCode::invalid_argument, "cell center has the wrong dimension");
      double r2 = 0.0;
      for (int a = 0; a < dim; ++a) {
        const double d = space.coord(i, a) - centers[c][static_cast<std::size_t>(a)];
        r2 += d * d;
      }
      if (r2 < best) {
        best = r2;
        arg = c;
      }
    }
    out[static_cast<Idx>(i)] = values[arg];
  }
  return out;
}

CellFunction random_cell_function(const MetricMeasureSpace& reference, std::size_t cells,
                                  std::uint64_t seed) {
  if (cells == 0) fail(ErrorCode::invalid_argument, "cell function needs at least one cell");
  const int dim = reference.ambient_dim();
  std::vector<double> lo(static_cast<std::size_t>(dim), kInf), hi(static_cast<std::size_t>(dim), -kInf);
  for (std::size_t i = 0; i < reference.size(); ++i)
    for (int a = 0; a < dim; ++a) {
      lo[static_cast<std::size_t>(a)] = std::min(lo[static_cast<std::size_t>(a)], reference.coord(i, a));
      hi[static_cast<std::size_t>(a)] = std::max(hi[static_cast<std::size_t>(a)], reference.coord(i, a));
    }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CellFunction out;
  for (std::size_t c = 0; c < cells; ++c) {
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (std::size_t a = 0; a < x.size(); ++a) x[a] = lo[a] + (hi[a] - lo[a]) * unit(rng);
    out.centers.push_back(std::move(x));
    out.values.push_back(2.0 * unit(rng) - 1.0);
  }
  return out;
}

const char* to_string(ImprovementFamily f) {
  switch (f) {
    case ImprovementFamily::lipschitz: return "lipschitz";
    case ImprovementFamily::besov: return "besov";
    case ImprovementFamily::hajlasz: return "hajlasz";
  }
  return "unknown";
}

ImprovementFamily parse_improvement_family(const std::string& s) {
  if (s == "lipschitz") return ImprovementFamily::lipschitz;
  if (s == "besov") return ImprovementFamily::besov;
  if (s == "hajlasz") return ImprovementFamily::hajlasz;
  fail(ErrorCode::invalid_argument, "unknown improvement family '" + s + "'");
}

const char* to_string(EmbeddingRegime r) {
  switch (r) {
    case EmbeddingRegime::automatic: return "automatic";
    case EmbeddingRegime::subcritical: return "subcritical";
    case EmbeddingRegime::critical: return "critical";
    case EmbeddingRegime::supercritical: return "supercritical";
  }
  return "unknown";
}

namespace {

double region_scale(const MetricMeasureSpace& space, const Mask& region) {
  double m = 0.0;
  for (std::size_t i : mask_indices(region, space.size())) m = std::max(m, space.boundary_distance(i));
  return m;
}

// Runs measure(kernel, function) for every battery member on each level and
// records the supremum per level plus the refinement change.
template <class Measure>
void battery_sup(PropertyReport& rep, const std::string& name, const PotentialKernel& coarse,
                 const PotentialKernel* refined, const std::vector<TestFunction>& battery,
                 double stability_tol, Measure&& measure) {
  std::vector<double> sups;
  for (const PotentialKernel* k : {&coarse, refined}) {
    if (!k) continue;
    double sup = 0.0;
    for (const auto& fn : battery) sup = std::max(sup, measure(*k, fn));
    sups.push_back(sup);
  }
  finite_check(rep, name, sups[0]).detail = {{"points", static_cast<double>(coarse.size())}};
  if (sups.size() == 2) {
    finite_check(rep, name + "_refined", sups[1]).detail = {
        {"points", static_cast<double>(refined->size())}};
    rep.check_le(name + "_refinement_change", relative_change(sups[0], sups[1]), stability_tol);
  }
}

void require_same_alpha(const PotentialKernel& coarse, const PotentialKernel* refined) {
  if (coarse.kind != KernelKind::bessel) fail(ErrorCode::invalid_argument, "experiment needs a bessel kernel");
  if (refined && (refined->kind != KernelKind::bessel || refined->alpha != coarse.alpha))
    fail(ErrorCode::invalid_argument, "refined kernel must be bessel with the same alpha");
}

}  // namespace

PropertyReport improvement_experiment(const PotentialKernel& kJ, const PotentialKernel* refined,
                                      ImprovementFamily family, double beta, double p,
                                      const EmbeddingOptions& opt) {
  require_same_alpha(kJ, refined);
  const double alpha = kJ.alpha;
  if (!(beta > 0)) fail(ErrorCode::invalid_argument, "improvement needs beta > 0");
  if (!(alpha + beta < 1)) {
    std::ostringstream msg;
    msg << "alpha + beta = " << alpha + beta << " is not below 1";
    fail(ErrorCode::hypothesis_violation, msg.str());
  }
  if (!(p >= 1) || std::isinf(p)) fail(ErrorCode::invalid_argument, "improvement needs 1 <= p < inf");

  const MetricMeasureSpace& ref = *kJ.space;
  const double scale = region_scale(ref, kJ.row_valid);
  const std::size_t count = std::max<std::size_t>(opt.battery / 2, 4);
  const auto battery = family == ImprovementFamily::besov
                           ? smooth_battery(ref, kJ.row_valid, count, opt.seed, 0.1 * scale, 0.4 * scale)
                           : power_battery(ref, kJ.row_valid, count, opt.seed, beta, 0.1 * scale, 0.4 * scale);

  PropertyReport rep;
  rep.name = std::string("improvement_") + to_string(family);
  const double target = alpha + beta;
  battery_sup(rep, "sup_ratio", kJ, refined, battery, opt.stability_tol,
              [&](const PotentialKernel& k, const TestFunction& fn) {
                const MetricMeasureSpace& sp = *k.space;
                const GridFunction f(fn.evaluate(sp));
                const GridFunction Jf = apply_bessel(k, f);
                switch (family) {
                  case ImprovementFamily::lipschitz:
                    return lipschitz_seminorm(sp, Jf, target, k.row_valid) / lipschitz_seminorm(sp, f, beta);
                  case ImprovementFamily::besov:
                    return besov_double_integral(sp, Jf, target, p, k.row_valid) /
                           besov_double_integral(sp, f, beta, p);
                  case ImprovementFamily::hajlasz: {
                    const GridFunction Mg = maximal_function(sp, difference_quotient_gradient(sp, f, beta));
                    return hajlasz_constant(sp, Jf, Mg, target, k.row_valid);
                  }
                }
                return kInf;
              });
  rep.info("alpha", alpha);
  rep.info("beta", beta);
  rep.info("p", p);
  return rep;
}

PropertyReport sobolev_embedding_experiment(const PotentialKernel& kJ,
                                            const PotentialKernel* refined, double p,
                                            EmbeddingRegime regime, const EmbeddingOptions& opt) {
  require_same_alpha(kJ, refined);
  if (!(p > 1) || std::isinf(p)) fail(ErrorCode::invalid_argument, "embedding needs 1 < p < inf");
  const double alpha = kJ.alpha, N = kJ.space->dim(), crit = N / alpha;
  const EmbeddingRegime actual = std::abs(p - crit) <= 1e-9 * crit ? EmbeddingRegime::critical
                                 : p < crit                        ? EmbeddingRegime::subcritical
                                                                   : EmbeddingRegime::supercritical;
  if (regime != EmbeddingRegime::automatic && regime != actual) {
    std::ostringstream msg;
    msg << "p = " << p << " with N/alpha = " << crit << " is " << to_string(actual) << ", not "
        << to_string(regime);
    fail(ErrorCode::invalid_regime, msg.str());
  }

  const MetricMeasureSpace& ref = *kJ.space;
  const double scale = region_scale(ref, kJ.row_valid);
  const auto battery = smooth_battery(ref, kJ.row_valid, opt.battery, opt.seed, 0.05 * scale, 0.3 * scale);

  auto normalized = [&](const MetricMeasureSpace& sp, const TestFunction& fn) {
    GridFunction g(fn.evaluate(sp));
    g.values /= lp_norm(sp, g, p);
    return g;
  };

  PropertyReport rep;
  rep.name = std::string("sobolev_embedding_") + to_string(actual);
  rep.info("p", p);
  rep.info("alpha", alpha);
  rep.info("critical_p", crit);
  auto norm_ratio = [&](double q) {
    return [&, q](const PotentialKernel& k, const TestFunction& fn) {
      const MetricMeasureSpace& sp = *k.space;
      return lp_norm(sp, apply_bessel(k, normalized(sp, fn)), q);
    };
  };
  switch (actual) {
    case EmbeddingRegime::subcritical: {
      const double pstar = 1.0 / (1.0 / p - alpha / N);
      rep.info("p_star", pstar);
      battery_sup(rep, "lp_star_ratio", kJ, refined, battery, opt.stability_tol, norm_ratio(pstar));
      break;
    }
    case EmbeddingRegime::critical:
      for (double q : {p, 2 * p, 4 * p}) {
        std::ostringstream name;
        name << "lq_ratio_q" << q;
        battery_sup(rep, name.str(), kJ, refined, battery, opt.stability_tol, norm_ratio(q));
      }
      break;
    default: {
      const double gamma = alpha - N / p;
      rep.info("holder_exponent", gamma);
      battery_sup(rep, "sup_ratio", kJ, refined, battery, opt.stability_tol, norm_ratio(kInf));
      battery_sup(rep, "holder_ratio", kJ, refined, battery, opt.stability_tol,
                  [&](const PotentialKernel& k, const TestFunction& fn) {
                    const MetricMeasureSpace& sp = *k.space;
                    return lipschitz_seminorm(sp, apply_bessel(k, normalized(sp, fn)), gamma, k.row_valid);
                  });
      break;
    }
  }
  return rep;
}

PropertyReport poincare_check(const MetricMeasureSpace& space, const GridFunction& f,
                              const GridFunction& g, double alpha, const Mask& rows,
                              std::size_t max_centers) {
  require_size(space, f);
  require_size(space, g);
  if (!(alpha > 0)) fail(ErrorCode::invalid_argument, "Poincare check needs alpha > 0");
  const Mask use = usable(f, rows);
  const GridFunction Mg = maximal_function(space, g);
  auto centers = mask_indices(use, space.size());
  if (centers.empty()) fail(ErrorCode::insufficient_geometry, "no valid rows for the Poincare check");
  if (centers.size() > max_centers) {
    std::vector<std::size_t> picked;
    for (std::size_t k = 0; k < max_centers; ++k) picked.push_back(centers[k * centers.size() / max_centers]);
    centers = std::move(picked);
  }

  double worst = 0.0;
  std::size_t balls = 0;
  for (std::size_t c : centers) {
    for (double r = 2 * space.resolution(); r <= space.boundary_distance(c); r *= 2) {
      const auto B = ball(space, c, r);
      if (std::any_of(B.begin(), B.end(), [&](std::size_t j) { return !use[j]; })) break;
      double m = 0.0, fb = 0.0, mg = 0.0;
      for (std::size_t j : B) {
        m += space.weight(j);
        fb += space.weight(j) * val(f, j);
        mg += space.weight(j) * val(Mg, j);
      }
      fb /= m;
      double lhs = 0.0;
      for (std::size_t j : B) lhs += space.weight(j) * std::abs(val(f, j) - fb);
      lhs /= m;
      const double rhs = std::pow(2 * r, alpha) * mg / m;
      ++balls;
      if (rhs == 0.0) {
        if (lhs > 0) worst = kInf;
        continue;
      }
      worst = std::max(worst, lhs / rhs);
    }
  }
  PropertyReport rep;
  rep.name = "poincare";
  finite_check(rep, "poincare_constant", worst).detail = {{"balls", static_cast<double>(balls)},
                                                          {"alpha", alpha}};
  return rep;
}

}  // namespace ahlfors
