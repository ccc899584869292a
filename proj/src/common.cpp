#include "ahlfors/common.hpp"

#include <atomic>
#include <cmath>

namespace ahlfors {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::insufficient_scales: return "insufficient-scales";
    case ErrorCode::degenerate_scale: return "degenerate-scale";
    case ErrorCode::boundary_scale: return "boundary-scale";
    case ErrorCode::guard_violation: return "guard-violation";
    case ErrorCode::insufficient_geometry: return "insufficient-geometry";
    case ErrorCode::not_contractive: return "not-contractive";
    case ErrorCode::non_convergence: return "non-convergence";
    case ErrorCode::hypothesis_violation: return "hypothesis-violation";
    case ErrorCode::invalid_regime: return "invalid-regime";
    case ErrorCode::degenerate_radius: return "degenerate-radius";
    case ErrorCode::config_error: return "config-error";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

GridFunction::GridFunction(Vector v, Mask m) : values(std::move(v)), valid(std::move(m)) {
  if (!valid.empty() && valid.size() != size())
    fail(ErrorCode::invalid_argument, "mask size does not match values");
  for (std::size_t i = 0; i < valid.size(); ++i)
    if (!valid[i]) values[static_cast<Eigen::Index>(i)] = std::numeric_limits<double>::quiet_NaN();
}

std::size_t GridFunction::valid_count() const { return mask_count(valid, size()); }

GridFunction GridFunction::constant(std::size_t n, double c) {
  return GridFunction(Vector::Constant(static_cast<Eigen::Index>(n), c));
}

Mask mask_and(const Mask& a, const Mask& b, std::size_t n) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  Mask out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] && b[i];
  return out;
}

std::size_t mask_count(const Mask& m, std::size_t n) {
  if (m.empty()) return n;
  std::size_t c = 0;
  for (bool b : m) c += b ? 1 : 0;
  return c;
}

std::vector<std::size_t> mask_indices(const Mask& m, std::size_t n) {
  std::vector<std::size_t> out;
  out.reserve(mask_count(m, n));
  for (std::size_t i = 0; i < n; ++i)
    if (m.empty() || m[i]) out.push_back(i);
  return out;
}

bool PropertyReport::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  for (const auto& f : fits)
    if (!f.pass) return false;
  return true;
}

const PropertyCheck* PropertyReport::find(std::string_view property) const {
  for (const auto& c : checks)
    if (c.property == property) return &c;
  return nullptr;
}

const PropertyCheck& PropertyReport::at(std::string_view property) const {
  if (const auto* c = find(property)) return *c;
  fail(ErrorCode::invalid_argument, "no property '" + std::string(property) + "' in " + name);
}

std::vector<std::string> PropertyReport::failing() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.pass) out.push_back(c.property);
  for (const auto& f : fits)
    if (!f.pass) out.push_back(f.lemma + "/" + f.regime);
  return out;
}

namespace {
PropertyCheck& push(PropertyReport& r, std::string property, double value, double tol,
                    bool pass, const char* cmp) {
  PropertyCheck c;
  c.property = std::move(property);
  c.constant = value;
  c.tolerance = tol;
  c.pass = pass;
  c.comparison = cmp;
  r.checks.push_back(std::move(c));
  return r.checks.back();
}
}  // namespace

// NaN compares false, so a NaN measurement always fails.
PropertyCheck& PropertyReport::check_le(std::string property, double value, double bound) {
  return push(*this, std::move(property), value, bound, value <= bound, "<=");
}
PropertyCheck& PropertyReport::check_ge(std::string property, double value, double bound) {
  return push(*this, std::move(property), value, bound, value >= bound, ">=");
}
PropertyCheck& PropertyReport::check_abs_le(std::string property, double value, double bound) {
  return push(*this, std::move(property), value, bound, std::abs(value) <= bound, "abs<=");
}
PropertyCheck& PropertyReport::info(std::string property, double value) {
  return push(*this, std::move(property), value, 0.0, true, "info");
}

void PropertyReport::append(const PropertyReport& other, const std::string& prefix) {
  for (auto c : other.checks) {
    c.property = prefix + c.property;
    checks.push_back(std::move(c));
  }
  for (auto f : other.fits) {
    f.lemma = prefix + f.lemma;
    fits.push_back(std::move(f));
  }
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    fail(ErrorCode::insufficient_scales, "line fit needs at least two samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0) fail(ErrorCode::insufficient_scales, "line fit with a single abscissa");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  f.samples = x.size();
  return f;
}

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads = n < 1 ? 1 : n; }
int thread_count() { return g_threads.load(); }

}  // namespace ahlfors
