#include "ahlfors/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace ahlfors {

const char* to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::bessel: return "bessel";
    case KernelKind::riesz: return "riesz";
    case KernelKind::frac_deriv: return "frac_deriv";
  }
  return "unknown";
}

double scale_weight(KernelKind kind, double alpha, double t) {
  const double ta = std::pow(t, alpha);
  switch (kind) {
    case KernelKind::bessel: return alpha * ta / ((1.0 + ta) * (1.0 + ta));
    case KernelKind::riesz: return alpha * ta;
    case KernelKind::frac_deriv: return alpha / ta;
  }
  return 0.0;
}

namespace {

struct Closures {
  double head = 0.0;  // mass of g dt/t on (0, t_min)
  double tail = 0.0;  // mass of g dt/t on (t_max, inf)
};

Closures closures_for(KernelKind kind, double alpha, double t_lo, double t_hi) {
  const double a_lo = std::pow(t_lo, alpha), a_hi = std::pow(t_hi, alpha);
  switch (kind) {
    case KernelKind::bessel: return {a_lo / (1.0 + a_lo), 1.0 / (1.0 + a_hi)};
    case KernelKind::riesz: return {a_lo, 0.0};  // upper mass diverges: truncated
    case KernelKind::frac_deriv: return {0.0, 1.0 / a_hi};  // head handled via the diagonal
  }
  return {};
}

bool off_diagonal_zero(const ScaleKernel& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    bool zero = true;
    s.for_each_in_row(i, [&](std::size_t j, double v) {
      if (j != i && v != 0.0) zero = false;
    });
    if (!zero) return false;
  }
  return true;
}

bool is_constant(const ScaleKernel& s) {
  const double ref = s.coeff(0, 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    bool same = true;
    s.for_each_in_row(i, [&](std::size_t, double v) {
      if (std::abs(v - ref) > 1e-12 * std::abs(ref)) same = false;
    });
    if (!same || (!s.is_dense() && s.nonzeros() < s.size() * s.size())) return false;
  }
  return true;
}

}  // namespace

double bessel_weight_quadrature(const ScaleGrid& grid, double alpha) {
  double total = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k)
    total += grid.trapezoid_weight(k) * scale_weight(KernelKind::bessel, alpha, grid.t(k));
  const Closures c = closures_for(KernelKind::bessel, alpha, grid.t_min(), grid.t_max());
  return total + c.head + c.tail;
}

PotentialKernel build_kernel(const AICollection& ai, KernelKind kind, double alpha,
                             const KernelOptions& opt) {
  if (!(alpha > 0)) fail(ErrorCode::invalid_argument, "kernel needs alpha > 0");
  const MetricMeasureSpace& sp = ai.space();
  if (kind == KernelKind::riesz && !(alpha < sp.dim()))
    fail(ErrorCode::invalid_argument, "riesz kernel needs alpha < N");
  const auto n = static_cast<Eigen::Index>(sp.size());
  const ScaleGrid& grid = ai.grid();
  const std::size_t K = grid.size();

  PotentialKernel out;
  out.kind = kind;
  out.alpha = alpha;
  out.space = ai.space_ptr();
  out.grid = grid;
  out.reference_scale = opt.reference_scale;
  out.row_valid = ai.guard().valid_mask(opt.reference_scale);
  out.matrix = Matrix::Zero(n, n);

  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double c = grid.trapezoid_weight(k) * scale_weight(kind, alpha, grid.t(k));
    ai.s(k).add_to(out.matrix, c);
    total += c;
  }
  out.head_exact = off_diagonal_zero(ai.s(0));
  out.tail_exact = is_constant(ai.s(K - 1));
  if (opt.closures) {
    const Closures c = closures_for(kind, alpha, grid.t_min(), grid.t_max());
    out.head_weight = c.head;
    out.tail_weight = c.tail;
    if (c.head > 0) ai.s(0).add_to(out.matrix, c.head);
    if (c.tail > 0) ai.s(K - 1).add_to(out.matrix, c.tail);
    total += c.head + c.tail;
  }
  out.weight_total = total;
  if (kind == KernelKind::bessel) out.quadrature_budget = std::abs(1.0 - total);

  const double t_hi = grid.t_max(), t_lo = grid.t_min();
  if (kind == KernelKind::riesz) {
    double smax = 0.0;
    for (std::size_t i = 0; i < sp.size(); ++i) smax = std::max(smax, ai.s(K - 1).coeff(i, i));
    // Continuing s ~ s(t_max) (t_max/t)^N past the grid.
    out.truncation_estimate = alpha * smax * std::pow(t_hi, alpha) / (sp.dim() - alpha);
  }
  if (kind == KernelKind::frac_deriv) {
    out.matrix.diagonal().setZero();
    if (!out.head_exact) {
      // Off-diagonal mass of s(t_min) times the missing weight, worst row.
      double worst = 0.0;
      for (std::size_t i = 0; i < sp.size(); ++i) {
        double m = 0.0;
        ai.s(0).for_each_in_row(i, [&](std::size_t j, double v) {
          if (j != i) m += v * sp.weight(j);
        });
        worst = std::max(worst, m);
      }
      out.truncation_estimate = worst * std::pow(t_lo, -alpha);
    }
  }
  return out;
}

PotentialKernel bessel_kernel(const AICollection& ai, double alpha, const KernelOptions& opt) {
  return build_kernel(ai, KernelKind::bessel, alpha, opt);
}
PotentialKernel riesz_kernel(const AICollection& ai, double alpha, const KernelOptions& opt) {
  return build_kernel(ai, KernelKind::riesz, alpha, opt);
}
PotentialKernel frac_deriv_kernel(const AICollection& ai, double alpha, const KernelOptions& opt) {
  return build_kernel(ai, KernelKind::frac_deriv, alpha, opt);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> guarded_rows(const PotentialKernel& k) {
  return mask_indices(k.row_valid, k.size());
}

std::vector<std::size_t> sample(const std::vector<std::size_t>& rows, std::size_t max_count) {
  if (rows.size() <= max_count) return rows;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < max_count; ++i) out.push_back(rows[i * rows.size() / max_count]);
  return out;
}

std::size_t most_interior(const MetricMeasureSpace& sp) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < sp.size(); ++i)
    if (sp.boundary_distance(i) > sp.boundary_distance(best)) best = i;
  return best;
}

std::vector<double> log_points(double lo, double hi, std::size_t count) {
  std::vector<double> r(count);
  for (std::size_t i = 0; i < count; ++i)
    r[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(count - 1));
  return r;
}

ExponentFit make_fit(const std::string& lemma, const std::string& regime, double predicted,
                     double tolerance, const std::vector<double>& lx, const std::vector<double>& ly,
                     double lo, double hi) {
  ExponentFit f;
  f.lemma = lemma;
  f.regime = regime;
  f.predicted_exponent = predicted;
  f.tolerance = tolerance;
  f.d_lo = lo;
  f.d_hi = hi;
  f.samples = lx.size();
  if (lx.size() < 3) {
    f.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
    f.pass = false;
    return f;
  }
  const LineFit lf = fit_line(lx, ly);
  f.fitted_exponent = lf.slope;
  f.constant = std::exp(lf.intercept);
  f.pass = std::abs(lf.slope - predicted) <= tolerance;
  return f;
}

}  // namespace

ExponentFit fit_decay_exponent(const PotentialKernel& k, double d_lo, double d_hi, double predicted,
                               double tolerance, const std::string& lemma, const std::string& regime) {
  if (!(d_lo > 0) || !(d_hi > d_lo)) fail(ErrorCode::invalid_argument, "fit needs 0 < d_lo < d_hi");
  const MetricMeasureSpace& sp = *k.space;
  const double span = std::log(d_hi / d_lo);
  const double lo = d_lo * std::exp(0.1 * span), hi = d_hi * std::exp(-0.1 * span);
  const double bins_per_log = 10.0 / std::log(10.0);
  std::map<long, std::pair<double, double>> sum;  // bin -> (sum log d, sum log k)
  std::map<long, std::size_t> count;
  for (std::size_t i : guarded_rows(k)) {
    for (std::size_t j = 0; j < sp.size(); ++j) {
      if (j == i) continue;
      const double d = sp.dist(i, j);
      if (d < lo || d > hi) continue;
      const double v = k(i, j);
      if (!(v > 0)) continue;
      const long b = static_cast<long>(std::floor(std::log(d / lo) * bins_per_log));
      sum[b].first += std::log(d);
      sum[b].second += std::log(v);
      ++count[b];
    }
  }
  std::vector<double> lx, ly;
  std::size_t total = 0;
  for (const auto& [b, s] : sum) {
    const double c = static_cast<double>(count[b]);
    lx.push_back(s.first / c);
    ly.push_back(s.second / c);
    total += count[b];
  }
  ExponentFit f = make_fit(lemma, regime, predicted, tolerance, lx, ly, lo, hi);
  f.samples = total;
  return f;
}

PropertyReport verify_kernel_lemmas(const PotentialKernel& k, const KernelLemmaOptions& opt) {
  const MetricMeasureSpace& sp = *k.space;
  const double N = sp.dim(), a = k.alpha, q = opt.q_exponent;
  const auto rows = guarded_rows(k);
  if (rows.empty()) fail(ErrorCode::insufficient_geometry, "kernel has no guarded rows");
  const auto sampled = sample(rows, opt.sample_rows);
  const double near_lo = opt.near_lo_factor * sp.resolution();
  if (!(near_lo < opt.near_hi)) fail(ErrorCode::insufficient_geometry, "near regime is empty");

  PropertyReport rep;
  rep.name = std::string("kernel_lemmas_") + to_string(k.kind);
  const double kmax = k.matrix.cwiseAbs().maxCoeff();
  rep.check_le("symmetry", (k.matrix - k.matrix.transpose()).cwiseAbs().maxCoeff() / kmax, 1e-12);
  if (k.kind != KernelKind::frac_deriv) {
    double mn = kInf;
    for (std::size_t i : rows) mn = std::min(mn, k.matrix.row(static_cast<Eigen::Index>(i)).minCoeff());
    rep.check_ge("nonnegative_min", mn, 0.0);
  }

  const double near_pred = k.kind == KernelKind::frac_deriv ? -(N + a) : -(N - a);
  rep.fits.push_back(fit_decay_exponent(k, near_lo, opt.near_hi, near_pred, opt.tolerance,
                                        "decay", "near"));

  double dmax = 0.0;
  for (std::size_t i : rows)
    for (std::size_t j = 0; j < sp.size(); ++j) dmax = std::max(dmax, sp.dist(i, j));

  if (k.kind == KernelKind::frac_deriv) {
    double dlo = opt.near_hi / 10.0, dhi = opt.near_hi;
    if (dlo < 2.0 * sp.resolution()) {
      dlo = 2.0 * sp.resolution();
      dhi = 10.0 * dlo;
    }
    double mn = kInf, mx = 0.0;
    for (std::size_t i : rows)
      for (std::size_t j = 0; j < sp.size(); ++j) {
        const double d = sp.dist(i, j);
        if (j == i || d < dlo || d > dhi) continue;
        const double v = k(i, j) * std::pow(d, N + a);
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
    rep.check_le("two_sided_ratio_one_decade", mx / mn, 10.0).detail = {{"d_lo", dlo}, {"d_hi", dhi}};
    return rep;
  }

  if (k.kind == KernelKind::riesz) {
    if (dmax < 1.5 * opt.far_lo)
      fail(ErrorCode::insufficient_geometry, "no pairs beyond the far threshold");
    rep.fits.push_back(fit_decay_exponent(k, near_lo, dmax, -(N - a), opt.tolerance, "decay",
                                          "all_distances"));
    rep.info("truncation_estimate", k.truncation_estimate);
    return rep;
  }

  // Bessel.
  if (dmax < 1.5 * opt.far_lo) fail(ErrorCode::insufficient_geometry, "no pairs beyond d >= 4");
  {
    ExponentFit far = fit_decay_exponent(k, opt.far_lo, dmax, -(N + a), opt.tolerance, "decay", "far");
    far.pass = far.fitted_exponent <= -(N + a) + opt.tolerance;
    rep.fits.push_back(far);
  }

  double max_row_err = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double rs = k.matrix.row(static_cast<Eigen::Index>(i)).dot(sp.weights());
    max_row_err = std::max(max_row_err, std::abs(rs - 1.0));
  }
  rep.check_le("row_sum_error", max_row_err, k.quadrature_budget + 1e-12).detail = {
      {"quadrature_budget", k.quadrature_budget}};

  // Integrability of k^q along rows.
  double max_q_int = 0.0;
  for (std::size_t i : rows) {
    const auto r = static_cast<Eigen::Index>(i);
    max_q_int = std::max(max_q_int, k.matrix.row(r).array().abs().pow(q).matrix().dot(sp.weights()));
  }
  rep.check_le("row_integral_k_power_q", max_q_int, kInf).pass = std::isfinite(max_q_int);

  // Differences |k(x,z) - k(y,z)|^q integrated near and away from x.
  const double pred = N - q * (N - a);
  const auto radii = log_points(near_lo, opt.near_hi, 12);
  std::vector<double> lr, l_in, l_out;
  for (double r : radii) {
    double s_in = 0.0, s_out = 0.0, s_d = 0.0;
    std::size_t used = 0;
    for (std::size_t x : sampled) {
      const Vector dx = sp.distance_row(x);
      std::size_t y = x;
      double best = kInf;
      for (Eigen::Index j = 0; j < dx.size(); ++j)
        if (static_cast<std::size_t>(j) != x && std::abs(dx[j] - r) < best) {
          best = std::abs(dx[j] - r);
          y = static_cast<std::size_t>(j);
        }
      const double dxy = dx[static_cast<Eigen::Index>(y)];
      double in = 0.0, out = 0.0;
      for (Eigen::Index z = 0; z < dx.size(); ++z) {
        const double diff = std::pow(std::abs(k.matrix(static_cast<Eigen::Index>(x), z) -
                                              k.matrix(static_cast<Eigen::Index>(y), z)), q) *
                            sp.weights()[z];
        (dx[z] < 2 * dxy ? in : out) += diff;
      }
      if (in > 0 && out > 0) {
        s_in += std::log(in);
        s_out += std::log(out);
        s_d += std::log(dxy);
        ++used;
      }
    }
    if (used == 0) continue;
    lr.push_back(s_d / static_cast<double>(used));
    l_in.push_back(s_in / static_cast<double>(used));
    l_out.push_back(s_out / static_cast<double>(used));
  }
  if (q * (N - a) < N)
    rep.fits.push_back(make_fit("difference_integral", "inner", pred, opt.tolerance, lr, l_in,
                                near_lo, opt.near_hi));
  if (N < q * (N - a + 1))
    rep.fits.push_back(make_fit("difference_integral", "outer", pred, opt.tolerance, lr, l_out,
                                near_lo, opt.near_hi));

  // Averaged differences for a fixed z.
  {
    const std::size_t z = most_interior(sp);
    const Vector kz = k.matrix.col(static_cast<Eigen::Index>(z));
    std::vector<double> lt, lv;
    for (double t : radii) {
      double acc = 0.0;
      for (std::size_t x : rows) {
        const Vector dx = sp.distance_row(x);
        double m = 0.0, s = 0.0;
        for (Eigen::Index y = 0; y < dx.size(); ++y) {
          if (static_cast<std::size_t>(y) != x && !(dx[y] < t)) continue;
          m += sp.weights()[y];
          s += std::pow(std::abs(kz[static_cast<Eigen::Index>(x)] - kz[y]), q) * sp.weights()[y];
        }
        acc += sp.weight(x) * s / m;
      }
      if (acc > 0) {
        lt.push_back(std::log(t));
        lv.push_back(std::log(acc));
      }
    }
    if (q * (N - a) < N)
      rep.fits.push_back(make_fit("averaged_difference", "fixed_z", pred, opt.tolerance, lt, lv,
                                  near_lo, opt.near_hi));
  }

  // Lipschitz-type difference bound between neighbouring rows.
  double lip = 0.0;
  for (std::size_t x : sampled) {
    const Vector dx = sp.distance_row(x);
    std::size_t y = x;
    double dn = kInf;
    for (Eigen::Index j = 0; j < dx.size(); ++j)
      if (static_cast<std::size_t>(j) != x && dx[j] < dn) {
        dn = dx[j];
        y = static_cast<std::size_t>(j);
      }
    const Vector dy = sp.distance_row(y);
    for (Eigen::Index z = 0; z < dx.size(); ++z) {
      const double m = std::min(dx[z], dy[z]);
      if (m < 2 * dn) continue;
      const double diff = std::abs(k.matrix(static_cast<Eigen::Index>(x), z) -
                                   k.matrix(static_cast<Eigen::Index>(y), z));
      lip = std::max(lip, diff * std::pow(m, N + 1 - a) / dn);
    }
  }
  rep.check_le("lipschitz_difference_constant", lip, kInf).pass = std::isfinite(lip);
  return rep;
}

PropertyReport check_domination(const PotentialKernel& riesz, const PotentialKernel& bessel) {
  if (riesz.kind != KernelKind::riesz || bessel.kind != KernelKind::bessel)
    fail(ErrorCode::invalid_argument, "check_domination needs (riesz, bessel)");
  if (riesz.size() != bessel.size()) fail(ErrorCode::invalid_argument, "kernel size mismatch");
  PropertyReport rep;
  rep.name = "riesz_dominates_bessel";
  rep.check_le("max_bessel_minus_riesz", (bessel.matrix - riesz.matrix).maxCoeff(), 0.0);
  const bool same_pattern = ((bessel.matrix.array() != 0) == (riesz.matrix.array() != 0)).all();
  rep.check_ge("same_support_pattern", same_pattern ? 1.0 : 0.0, 1.0);
  return rep;
}

void export_kernel_csv(const PotentialKernel& k, const std::string& path, std::size_t row_stride) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path);
  out.precision(17);
  out << "i,j,value\n";
  const std::size_t stride = std::max<std::size_t>(1, row_stride);
  for (std::size_t i = 0; i < k.size(); i += stride)
    for (std::size_t j = 0; j < k.size(); ++j) out << i << ',' << j << ',' << k(i, j) << '\n';
}

}  // namespace ahlfors
