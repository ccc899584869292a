#include "ahlfors/euclid_ref.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ahlfors {

namespace {

using Idx = Eigen::Index;
constexpr double kPi = std::numbers::pi;

// 8-point Gauss-Legendre on [a, b].
template <class F>
double gauss8(F&& f, double a, double b) {
  static constexpr std::array<double, 4> x{0.1834346424956498, 0.5255324099163290,
                                           0.7966664774136267, 0.9602898564975363};
  static constexpr std::array<double, 4> w{0.3626837833783620, 0.3137066458778873,
                                           0.2223810344533745, 0.1012285362903763};
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t k = 0; k < 4; ++k) s += w[k] * (f(c - h * x[k]) + f(c + h * x[k]));
  return h * s;
}

// Composite rule over sorted breakpoints, `panels` sub-panels per piece.
template <class F>
double piecewise(F&& f, std::vector<double> br, int panels) {
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < br.size(); ++k)
    for (int p = 0; p < panels; ++p) {
      const double a = br[k] + (br[k + 1] - br[k]) * p / panels;
      const double b = br[k] + (br[k + 1] - br[k]) * (p + 1) / panels;
      s += gauss8(f, a, b);
    }
  return s;
}

double h_abs(double v) { return BumpProfile::value(std::abs(v)); }

const double kHMass = piecewise(h_abs, {-2.0, -0.5, 0.5, 2.0}, 4);

double line_spacing(const MetricMeasureSpace& line) {
  if (line.kind() != SpaceKind::line || line.size() < 2)
    fail(ErrorCode::invalid_argument, "euclidean reference needs a line space");
  return line.coord(1, 0) - line.coord(0, 0);
}

}  // namespace

PeriodicGrid::PeriodicGrid(double period, std::size_t n) : period_(period), n_(n) {
  if (!(period > 0) || n < 2) fail(ErrorCode::invalid_argument, "periodic grid needs period > 0, n >= 2");
}

double PeriodicGrid::frequency(std::size_t k) const {
  const auto kk = static_cast<double>(k), nn = static_cast<double>(n_);
  return (2 * k <= n_ ? kk : kk - nn) / period_;
}

std::vector<std::complex<double>> PeriodicGrid::forward(const Vector& f) const {
  if (static_cast<std::size_t>(f.size()) != n_) fail(ErrorCode::invalid_argument, "grid size mismatch");
  Eigen::FFT<double> fft;
  std::vector<double> in(f.data(), f.data() + f.size());
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  return out;
}

Vector PeriodicGrid::inverse(const std::vector<std::complex<double>>& F) const {
  if (F.size() != n_) fail(ErrorCode::invalid_argument, "grid size mismatch");
  Eigen::FFT<double> fft;
  std::vector<double> out;
  fft.inv(out, F);
  return Eigen::Map<const Vector>(out.data(), static_cast<Idx>(out.size()));
}

Vector PeriodicGrid::apply_multiplier(const Vector& f, const std::function<double(double)>& m) const {
  auto F = forward(f);
  for (std::size_t k = 0; k < n_; ++k) F[k] *= m(std::abs(frequency(k)));
  return inverse(F);
}

Vector classical_frac_derivative(const PeriodicGrid& grid, const Vector& f, double alpha) {
  if (!(alpha > 0)) fail(ErrorCode::invalid_argument, "fractional derivative needs alpha > 0");
  return grid.apply_multiplier(f, [alpha](double xi) { return xi == 0.0 ? 0.0 : std::pow(2 * kPi * xi, alpha); });
}

Vector classical_bessel(const PeriodicGrid& grid, const Vector& f, double alpha) {
  if (!(alpha > 0)) fail(ErrorCode::invalid_argument, "Bessel potential needs alpha > 0");
  return grid.apply_multiplier(
      f, [alpha](double xi) { return std::pow(1 + 4 * kPi * kPi * xi * xi, -alpha / 2); });
}

PropertyReport multiplier_sandwich(const PeriodicGrid& grid, double alpha) {
  if (!(alpha > 0 && alpha < 1)) fail(ErrorCode::invalid_argument, "sandwich needs 0 < alpha < 1");
  double lo = kInf, hi = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double xi = std::abs(grid.frequency(k));
    const double r = (1 + std::pow(2 * kPi * xi, alpha)) / std::pow(1 + 4 * kPi * kPi * xi * xi, alpha / 2);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  PropertyReport rep;
  rep.name = "multiplier_sandwich";
  rep.check_ge("ratio_min", lo, std::pow(2.0, -alpha / 2));
  rep.check_le("ratio_max", hi, 2.0);
  rep.info("frequencies", static_cast<double>(grid.size()));
  return rep;
}

double profile_phi(double u) {
  u = std::abs(u);
  if (u >= 4) return 0.0;
  const double conv = piecewise([u](double v) { return h_abs(v) * h_abs(u - v); },
                                {-2.0, -0.5, 0.5, 2.0, u - 2, u - 0.5, u + 0.5, u + 2}, 2);
  return conv / (kHMass * kHMass);
}

double profile_constant(double alpha) {
  if (!(alpha > 0 && alpha < 1)) fail(ErrorCode::invalid_argument, "profile constant needs 0 < alpha < 1");
  auto f = [alpha](double u) { return alpha * std::pow(u, alpha) * profile_phi(u); };
  // Geometric panels toward 0 absorb the u^alpha endpoint singularity.
  double s = 0.0;
  for (int j = 0; j < 60; ++j) s += gauss8(f, std::ldexp(1.0, -j - 1), std::ldexp(1.0, -j));
  s += piecewise(f, {1.0, 1.5, 2.5, 4.0}, 4);
  return s;
}

double riesz_normalization(double alpha) {
  if (!(alpha > 0 && alpha < 2)) fail(ErrorCode::invalid_argument, "normalization needs 0 < alpha < 2");
  return alpha * std::pow(2.0, alpha - 1) * std::tgamma((1 + alpha) / 2) /
         (std::sqrt(kPi) * std::tgamma(1 - alpha / 2));
}

PropertyReport translation_invariance(const AICollection& ai, double tolerance) {
  const MetricMeasureSpace& sp = ai.space();
  line_spacing(sp);
  const std::size_t n = sp.size();
  double worst = 0.0;
  std::size_t scales = 0, rows = 0;
  for (std::size_t k = 0; k < ai.scale_count(); ++k) {
    const double tn = std::pow(ai.t(k), sp.dim());
    bool used = false;
    Vector prev;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!ai.valid(i, k) || !ai.valid(i + 1, k)) continue;
      if (prev.size() == 0) prev = ai.s(k).row(i);
      const Vector next = ai.s(k).row(i + 1);
      for (std::size_t j = 0; j + 1 < n; ++j)
        worst = std::max(worst, tn * std::abs(prev[static_cast<Idx>(j)] - next[static_cast<Idx>(j + 1)]));
      prev = next;
      used = true;
      ++rows;
    }
    if (used) ++scales;
  }
  PropertyReport rep;
  rep.name = "translation_invariance";
  rep.check_le("max_row_shift_deviation", worst, tolerance).detail = {
      {"scales", static_cast<double>(scales)}, {"row_pairs", static_cast<double>(rows)}};
  return rep;
}

PeriodicGrid aligned_grid(const MetricMeasureSpace& line, std::size_t pad_factor) {
  const double h = line_spacing(line);
  if (pad_factor < 1) fail(ErrorCode::invalid_argument, "pad factor must be >= 1");
  const std::size_t n = line.size() * pad_factor;
  return PeriodicGrid(h * static_cast<double>(n), n);
}

PropertyReport euclidean_consistency(const PotentialKernel& kD, const PeriodicGrid& grid,
                                     const std::vector<TestFunction>& battery,
                                     const EuclidOptions& opt) {
  if (kD.kind != KernelKind::frac_deriv)
    fail(ErrorCode::invalid_argument, "euclidean consistency needs a frac_deriv kernel");
  const MetricMeasureSpace& sp = *kD.space;
  const double h = line_spacing(sp);
  const std::size_t n = sp.size();
  if (std::abs(grid.spacing() - h) > 1e-9 * h || grid.size() < n) {
    std::ostringstream msg;
    msg << "periodic grid (spacing " << grid.spacing() << ", " << grid.size()
        << " points) is not aligned with the line (spacing " << h << ", " << n << " points)";
    fail(ErrorCode::invalid_argument, msg.str());
  }
  if (battery.empty()) fail(ErrorCode::invalid_argument, "empty test battery");
  const double R = opt.near_radius;
  if (!(R >= 4 * h)) fail(ErrorCode::invalid_argument, "near radius must cover at least 4 spacings");
  const double alpha = kD.alpha;
  const auto rows = mask_indices(kD.row_valid, n);
  if (rows.empty()) fail(ErrorCode::insufficient_geometry, "no guarded rows");

  // Far-field amplitude with the exponent held at -(1 + alpha), plus the free
  // slope for reference.
  double logA = 0.0;
  std::size_t cnt = 0;
  std::vector<double> lx, ly;
  for (std::size_t i : rows)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = sp.dist(i, j);
      if (d < R / 4 || d > R || !(kD(i, j) > 0)) continue;
      logA += std::log(kD(i, j)) + (1 + alpha) * std::log(d);
      lx.push_back(std::log(d));
      ly.push_back(std::log(kD(i, j)));
      ++cnt;
    }
  if (cnt < 3) fail(ErrorCode::insufficient_geometry, "too few entries to fit the far field");
  const double A = std::exp(logA / static_cast<double>(cnt));
  const double slope = fit_line(lx, ly).slope;

  const double left = sp.coord(0, 0) - h / 2, right = sp.coord(n - 1, 0) + h / 2;
  const std::size_t offset = (grid.size() - n) / 2;

  std::vector<double> fitted;
  double worst_dev = 0.0;
  for (const auto& fn : battery) {
    const Vector f = fn.evaluate(sp);
    Vector padded = Vector::Zero(static_cast<Idx>(grid.size()));
    padded.segment(static_cast<Idx>(offset), static_cast<Idx>(n)) = f;
    const Vector spec = classical_frac_derivative(grid, padded, alpha).segment(static_cast<Idx>(offset),
                                                                             static_cast<Idx>(n));
    Vector Df(static_cast<Idx>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t i = rows[r];
      const double fi = f[static_cast<Idx>(i)], x = sp.coord(i, 0);
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d = sp.dist(i, j);
        const double kern = d < R ? kD(i, j) : A * std::pow(d, -1 - alpha);
        acc += kern * (fi - f[static_cast<Idx>(j)]) * h;
      }
      acc += fi * A / alpha * (std::pow(right - x, -alpha) + std::pow(x - left, -alpha));
      Df[static_cast<Idx>(r)] = acc;
    }
    double num = 0.0, den = 0.0, smax = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double s = spec[static_cast<Idx>(rows[r])];
      num += Df[static_cast<Idx>(r)] * s;
      den += s * s;
      smax = std::max(smax, std::abs(s));
    }
    if (!(den > 0)) fail(ErrorCode::invalid_argument, "test function has no derivative on the guarded rows");
    const double C = num / den;
    fitted.push_back(C);
    for (std::size_t r = 0; r < rows.size(); ++r)
      worst_dev = std::max(worst_dev, std::abs(Df[static_cast<Idx>(r)] - C * spec[static_cast<Idx>(rows[r])]) / smax);
  }

  double mean = 0.0;
  for (double c : fitted) mean += c;
  mean /= static_cast<double>(fitted.size());
  double spread = 0.0;
  for (double c : fitted) spread = std::max(spread, std::abs(c - mean) / std::abs(mean));
  const double c_phi = profile_constant(alpha);
  const double c_quad = c_phi / riesz_normalization(alpha);

  PropertyReport rep;
  rep.name = "euclidean_consistency";
  auto& s = rep.check_le("fitted_C_spread", spread, opt.spread_tol);
  for (std::size_t k = 0; k < fitted.size(); ++k) s.detail["fitted_C_" + std::to_string(k)] = fitted[k];
  rep.check_le("quadrature_relative_error", std::abs(mean - c_quad) / c_quad, opt.quadrature_tol).detail = {
      {"fitted_C_mean", mean}, {"quadrature_C", c_quad}, {"c_phi", c_phi},
      {"C_1_alpha", riesz_normalization(alpha)}};
  rep.info("max_rel_dev", worst_dev);
  rep.info("far_field_amplitude_over_c_phi", A / c_phi);
  rep.info("near_field_free_slope", slope);
  rep.info("alpha", alpha);
  return rep;
}

}  // namespace ahlfors
