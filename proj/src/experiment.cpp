#include "ahlfors/experiment.hpp"

#include "ahlfors/approx_id.hpp"
#include "ahlfors/euclid_ref.hpp"
#include "ahlfors/kernels.hpp"
#include "ahlfors/operators.hpp"
#include "ahlfors/spaces_norms.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>

namespace ahlfors {

using nlohmann::json;

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"verify-ai",   "verify-kernels", "improvement",
                                              "embedding",   "contraction",    "invert",
                                              "tav-bounds",  "euclid-compare"};
  return names;
}

// ---------------------------------------------------------------- config

namespace {

[[noreturn]] void config_fail(const std::string& field, const std::string& why) {
  fail(ErrorCode::config_error, "config field '" + field + "' " + why);
}

template <class T>
T get_field(const json& j, const std::string& key, const T& fallback, const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const std::exception&) {
    config_fail(path + key, "has the wrong type");
  }
}

std::optional<double> get_optional(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_number()) config_fail(path + key, "must be a number");
  const double v = j.at(key).get<double>();
  if (!(v > 0)) config_fail(path + key, "must be positive");
  return v;
}

void parse_tolerances(const json& j, Tolerances& t) {
  if (!j.is_object()) config_fail("tolerances", "must be an object");
  const std::map<std::string, double*> fields{
      {"normalization", &t.normalization},
      {"q_constants", &t.q_constants},
      {"symmetry", &t.symmetry},
      {"stability_ratio", &t.stability_ratio},
      {"holder_slope_min", &t.holder_slope_min},
      {"kernel_exponent", &t.kernel_exponent},
      {"calderon", &t.calderon},
      {"q_representation", &t.q_representation},
      {"refinement_stability", &t.refinement_stability},
      {"modulus_slope_margin", &t.modulus_slope_margin},
      {"invert_round_trip", &t.invert_round_trip},
      {"invert_increment", &t.invert_increment},
      {"tav_zero", &t.tav_zero},
      {"tav_ratio", &t.tav_ratio},
      {"euclid_spread", &t.euclid_spread},
      {"euclid_quadrature", &t.euclid_quadrature},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = fields.find(key);
    if (it == fields.end()) config_fail("tolerances." + key, "is not a known tolerance");
    if (!value.is_number()) config_fail("tolerances." + key, "must be a number");
    const double v = value.get<double>();
    if (!(v >= 0) || !std::isfinite(v)) config_fail("tolerances." + key, "must be finite and >= 0");
    *it->second = v;
  }
}

json tolerances_json(const Tolerances& t) {
  return {{"normalization", t.normalization},
          {"q_constants", t.q_constants},
          {"symmetry", t.symmetry},
          {"stability_ratio", t.stability_ratio},
          {"holder_slope_min", t.holder_slope_min},
          {"kernel_exponent", t.kernel_exponent},
          {"calderon", t.calderon},
          {"q_representation", t.q_representation},
          {"refinement_stability", t.refinement_stability},
          {"modulus_slope_margin", t.modulus_slope_margin},
          {"invert_round_trip", t.invert_round_trip},
          {"invert_increment", t.invert_increment},
          {"tav_zero", t.tav_zero},
          {"tav_ratio", t.tav_ratio},
          {"euclid_spread", t.euclid_spread},
          {"euclid_quadrature", t.euclid_quadrature}};
}

std::vector<double> number_list(const json& j, const std::string& key) {
  if (!j.is_array()) config_fail(key, "must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) config_fail(key + "[" + std::to_string(i) + "]", "must be a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

void validate_space(const SpaceDescriptor& d) {
  switch (d.kind) {
    case SpaceKind::line:
      if (d.n_points < 3) config_fail("space.n_points", "must be >= 3");
      if (!(d.half_length > 0)) config_fail("space.half_length", "must be positive");
      break;
    case SpaceKind::plane:
      if (d.n_per_side < 3) config_fail("space.n_per_side", "must be >= 3");
      if (!(d.half_length > 0)) config_fail("space.half_length", "must be positive");
      break;
    case SpaceKind::gasket:
    case SpaceKind::cantor:
      if (d.level < 1 || d.level > 12) config_fail("space.level", "must lie in [1, 12]");
      if (d.dilations < 1 || d.dilations > 8) config_fail("space.dilations", "must lie in [1, 8]");
      break;
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    fail(ErrorCode::config_error, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::config_error, "config must be a JSON object");

  static const std::vector<std::string> known{
      "space", "scale_grid", "margin_factor", "reference_scale", "alphas", "ps", "experiments",
      "tolerances", "seed", "output_dir", "beta", "tav_v", "tav_delta", "calderon_t_max", "tav_t_max"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) config_fail(key, "is not a known field");

  ExperimentConfig cfg;
  if (j.contains("space")) cfg.space = parse_space_descriptor(j.at("space").dump());
  validate_space(cfg.space);

  if (j.contains("scale_grid")) {
    const json& g = j.at("scale_grid");
    if (!g.is_object()) config_fail("scale_grid", "must be an object");
    cfg.points_per_decade = get_field(g, "points_per_decade", cfg.points_per_decade, "scale_grid.");
    if (!(cfg.points_per_decade >= 1)) config_fail("scale_grid.points_per_decade", "must be >= 1");
    cfg.t_min = get_optional(g, "t_min", "scale_grid.");
    cfg.t_max = get_optional(g, "t_max", "scale_grid.");
    if (cfg.t_min && cfg.t_max && !(*cfg.t_max > *cfg.t_min))
      config_fail("scale_grid.t_max", "must exceed scale_grid.t_min");
  }
  cfg.margin_factor = get_field(j, "margin_factor", cfg.margin_factor, "");
  if (!(cfg.margin_factor >= 1)) config_fail("margin_factor", "must be >= 1");
  cfg.reference_scale = get_field(j, "reference_scale", cfg.reference_scale, "");
  if (!(cfg.reference_scale > 0)) config_fail("reference_scale", "must be positive");

  if (j.contains("alphas")) cfg.alphas = number_list(j.at("alphas"), "alphas");
  for (std::size_t i = 0; i < cfg.alphas.size(); ++i)
    if (!(cfg.alphas[i] > 0 && cfg.alphas[i] < 1)) {
      std::ostringstream msg;
      msg << "= " << cfg.alphas[i] << " must lie in (0, 1)";
      config_fail("alphas[" + std::to_string(i) + "]", msg.str());
    }
  if (j.contains("ps")) cfg.ps = number_list(j.at("ps"), "ps");
  for (std::size_t i = 0; i < cfg.ps.size(); ++i)
    if (!(cfg.ps[i] > 1) || !std::isfinite(cfg.ps[i])) {
      std::ostringstream msg;
      msg << "= " << cfg.ps[i] << " must lie in (1, inf)";
      config_fail("ps[" + std::to_string(i) + "]", msg.str());
    }

  if (j.contains("experiments")) {
    const json& e = j.at("experiments");
    if (!e.is_array()) config_fail("experiments", "must be an array of names");
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (!e[i].is_string()) config_fail("experiments[" + std::to_string(i) + "]", "must be a string");
      const auto name = e[i].get<std::string>();
      const auto& names = experiment_names();
      if (std::find(names.begin(), names.end(), name) == names.end())
        config_fail("experiments[" + std::to_string(i) + "]", "names unknown experiment '" + name + "'");
      cfg.experiments.push_back(name);
    }
  }
  if (!cfg.experiments.empty() && cfg.alphas.empty()) config_fail("alphas", "must not be empty");
  if (!cfg.experiments.empty() && cfg.ps.empty()) config_fail("ps", "must not be empty");
  if (j.contains("tolerances")) parse_tolerances(j.at("tolerances"), cfg.tolerances);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) config_fail("seed", "must be a non-negative integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  cfg.output_dir = get_field(j, "output_dir", cfg.output_dir, "");
  cfg.beta = get_field(j, "beta", cfg.beta, "");
  if (!(cfg.beta > 0 && cfg.beta < 1)) config_fail("beta", "must lie in (0, 1)");
  if (j.contains("tav_v")) cfg.tav_v = number_list(j.at("tav_v"), "tav_v");
  for (std::size_t i = 0; i < cfg.tav_v.size(); ++i)
    if (!(cfg.tav_v[i] > 0)) config_fail("tav_v[" + std::to_string(i) + "]", "must be positive");
  cfg.tav_delta = get_field(j, "tav_delta", cfg.tav_delta, "");
  if (!(cfg.tav_delta > 0 && cfg.tav_delta < 1)) config_fail("tav_delta", "must lie in (0, 1)");
  cfg.calderon_t_max = get_optional(j, "calderon_t_max", "");
  cfg.tav_t_max = get_optional(j, "tav_t_max", "");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::config_error, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_json(const ExperimentConfig& cfg) {
  json j;
  j["space"] = json::parse(space_descriptor_json(cfg.space));
  j["scale_grid"] = {{"points_per_decade", cfg.points_per_decade},
                     {"t_min", cfg.t_min ? json(*cfg.t_min) : json(nullptr)},
                     {"t_max", cfg.t_max ? json(*cfg.t_max) : json(nullptr)}};
  j["margin_factor"] = cfg.margin_factor;
  j["reference_scale"] = cfg.reference_scale;
  j["alphas"] = cfg.alphas;
  j["ps"] = cfg.ps;
  j["experiments"] = cfg.experiments;
  j["tolerances"] = tolerances_json(cfg.tolerances);
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["beta"] = cfg.beta;
  j["tav_v"] = cfg.tav_v;
  j["tav_delta"] = cfg.tav_delta;
  j["calderon_t_max"] = cfg.calderon_t_max ? json(*cfg.calderon_t_max) : json(nullptr);
  j["tav_t_max"] = cfg.tav_t_max ? json(*cfg.tav_t_max) : json(nullptr);
  return j.dump(2);
}

// ---------------------------------------------------------------- describe

namespace {

struct GeometryEstimate {
  double resolution;
  double diameter;
};

// Closed-form sizes so describe() never builds the space.
GeometryEstimate estimate_geometry(const SpaceDescriptor& d) {
  switch (d.kind) {
    case SpaceKind::line:
      return {2 * d.half_length / (d.n_points - 1), 2 * d.half_length};
    case SpaceKind::plane:
      return {2 * d.half_length / (d.n_per_side - 1), 2 * std::sqrt(2.0) * d.half_length};
    case SpaceKind::gasket:
      return {std::ldexp(1.0, 1 - d.level), std::ldexp(1.0, d.dilations)};
    case SpaceKind::cantor:
      return {std::pow(3.0, 1 - d.level), std::pow(3.0, d.dilations)};
  }
  return {1.0, 1.0};
}

std::size_t estimated_scales(const ExperimentConfig& cfg, const GeometryEstimate& g) {
  const double lo = cfg.t_min.value_or(g.resolution / 4);
  const double hi = cfg.t_max.value_or(2.5 * g.diameter);
  if (!(hi > lo)) return 1;
  return static_cast<std::size_t>(std::ceil(std::log10(hi / lo) * cfg.points_per_decade - 1e-9)) + 1;
}

std::string human_bytes(double b) {
  const char* units[] = {"B", "KiB", "MiB", "GiB", "TiB"};
  int u = 0;
  while (b >= 1024 && u < 4) {
    b /= 1024;
    ++u;
  }
  std::ostringstream s;
  s.precision(3);
  s << b << ' ' << units[u];
  return s.str();
}

}  // namespace

std::string describe(const ExperimentConfig& cfg) {
  const std::size_t n = cfg.space.point_count();
  const GeometryEstimate g = estimate_geometry(cfg.space);
  const std::size_t K = estimated_scales(cfg, g);
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  const double kernels = 3.0 * static_cast<double>(cfg.alphas.size()) * n2;
  const double s_entries = static_cast<double>(K) * n2;
  std::ostringstream out;
  out << "space: " << to_string(cfg.space.kind) << ' ' << space_descriptor_json(cfg.space) << '\n';
  out << "points: " << n << '\n';
  out << "resolution (estimate): " << g.resolution << ", diameter (estimate): " << g.diameter << '\n';
  out << "scales: " << K << " at " << cfg.points_per_decade << " per decade\n";
  out << "alphas: " << cfg.alphas.size() << ", ps: " << cfg.ps.size() << '\n';
  out << "kernel entries: " << kernels << " (3 kinds x " << cfg.alphas.size() << " alphas x n^2)\n";
  out << "s matrix entries (dense bound): " << s_entries << " (" << K << " x n^2)\n";
  out << "memory estimate (dense bound): " << human_bytes(8.0 * (kernels + s_entries)) << '\n';
  // Measured on one core: ~30 ns per s entry built, ~1 ns per flop of dense products.
  double seconds = 3e-8 * s_entries + 1e-8 * kernels;
  for (const auto& e : cfg.experiments)
    if (e == "contraction" || e == "invert")
      seconds += 1e-9 * 2.0 * static_cast<double>(cfg.alphas.size()) * n2 * static_cast<double>(n);
  out << "runtime estimate: ~" << std::max(1.0, std::round(seconds)) << " s single-threaded (AI and kernels)\n";
  out << "experiments:";
  if (cfg.experiments.empty()) out << " (none)";
  for (const auto& e : cfg.experiments) out << ' ' << e;
  out << '\n';
  return out.str();
}

// ---------------------------------------------------------------- running

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json num(double v) {
  if (std::isfinite(v)) return v;
  return fmt(v);
}

json to_json(const PropertyReport& r) {
  json checks = json::array(), fits = json::array();
  for (const auto& c : r.checks) {
    json detail = json::object();
    for (const auto& [k, v] : c.detail) detail[k] = num(v);
    checks.push_back({{"property", c.property},
                      {"constant", num(c.constant)},
                      {"tolerance", num(c.tolerance)},
                      {"comparison", c.comparison},
                      {"pass", c.pass},
                      {"detail", detail}});
  }
  for (const auto& f : r.fits)
    fits.push_back({{"lemma", f.lemma},
                    {"regime", f.regime},
                    {"predicted_exponent", num(f.predicted_exponent)},
                    {"fitted_exponent", num(f.fitted_exponent)},
                    {"constant", num(f.constant)},
                    {"tolerance", num(f.tolerance)},
                    {"d_lo", num(f.d_lo)},
                    {"d_hi", num(f.d_hi)},
                    {"samples", f.samples},
                    {"pass", f.pass}});
  return {{"name", r.name}, {"pass", r.pass()}, {"checks", checks}, {"fits", fits}};
}

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

struct Output {
  std::vector<PropertyReport> reports;
  std::vector<Table> tables;
  std::vector<std::string> errors;
};

// Space, AI and kernels shared across experiments, built on first use.
class Context {
 public:
  explicit Context(const ExperimentConfig& cfg) : cfg_(cfg) {}

  const ExperimentConfig& cfg() const { return cfg_; }

  SpacePtr space() {
    if (!space_) space_ = build_space(cfg_.space);
    return space_;
  }
  SpacePtr refined_space() {
    if (!refined_space_) refined_space_ = build_space(cfg_.space.refined());
    return refined_space_;
  }

  ScaleGrid grid_for(const MetricMeasureSpace& sp) const {
    const double lo = cfg_.t_min.value_or(std::min(sp.resolution(), sp.min_separation()) / 4);
    const double hi = cfg_.t_max.value_or(2.5 * sp.diameter());
    if (!(hi > lo)) fail(ErrorCode::insufficient_scales, "scale grid t_max must exceed t_min");
    return ScaleGrid::log_spaced(lo, hi, cfg_.points_per_decade);
  }

  const AICollection& ai() {
    if (!ai_) ai_ = std::make_unique<AICollection>(space(), grid_for(*space()), ai_options());
    return *ai_;
  }
  const AICollection& refined_ai() {
    if (!refined_ai_)
      refined_ai_ = std::make_unique<AICollection>(refined_space(), grid_for(*refined_space()), ai_options());
    return *refined_ai_;
  }

  /// Same sample, twice the scale density.
  const AICollection& dense_ai() {
    if (!dense_ai_) {
      const ScaleGrid g = grid_for(*space());
      dense_ai_ = std::make_unique<AICollection>(
          space(), ScaleGrid::log_spaced(g.t_min(), g.t_max(), 2 * cfg_.points_per_decade), ai_options());
    }
    return *dense_ai_;
  }

  const PotentialKernel& kernel(KernelKind kind, double alpha, bool refined = false) {
    auto& cache = refined ? refined_kernels_ : kernels_;
    const auto key = std::make_pair(static_cast<int>(kind), alpha);
    auto it = cache.find(key);
    if (it == cache.end()) {
      KernelOptions opt;
      opt.reference_scale = cfg_.reference_scale;
      it = cache.emplace(key, build_kernel(refined ? refined_ai() : ai(), kind, alpha, opt)).first;
    }
    return it->second;
  }

  double max_boundary_distance() {
    double m = 0.0;
    for (std::size_t i = 0; i < space()->size(); ++i) m = std::max(m, space()->boundary_distance(i));
    return m;
  }

 private:
  AIOptions ai_options() const {
    AIOptions o;
    o.margin_factor = cfg_.margin_factor;
    return o;
  }

  const ExperimentConfig& cfg_;
  SpacePtr space_, refined_space_;
  std::unique_ptr<AICollection> ai_, refined_ai_, dense_ai_;
  std::map<std::pair<int, double>, PotentialKernel> kernels_, refined_kernels_;
};

std::string alpha_tag(double a) { return "a" + fmt(a); }

std::vector<double> coords_of(const MetricMeasureSpace& sp, std::size_t i) {
  std::vector<double> c;
  for (int a = 0; a < sp.ambient_dim(); ++a) c.push_back(sp.coord(i, a));
  return c;
}

std::size_t most_interior(const MetricMeasureSpace& sp) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < sp.size(); ++i)
    if (sp.boundary_distance(i) > sp.boundary_distance(best)) best = i;
  return best;
}

// Single smooth bump at the most interior point, radius a quarter of its
// boundary distance.
TestFunction central_bump(const MetricMeasureSpace& sp) {
  const std::size_t c = most_interior(sp);
  TestFunction fn;
  TestFunction::Term t;
  t.center = coords_of(sp, c);
  t.radius = sp.boundary_distance(c) / 4;
  fn.terms.push_back(t);
  return fn;
}

double weighted_l2(const MetricMeasureSpace& sp, const Vector& v) {
  return std::sqrt((v.array().square() * sp.weights().array()).sum());
}

// ---- verify-ai

Output run_verify_ai(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& tol = cfg.tolerances;
  Output out;
  out.reports.push_back(check_metric_invariants(*ctx.space(), cfg.seed));

  AIVerifyOptions vo;
  vo.normalization_tol = tol.normalization;
  vo.q_constants_tol = tol.q_constants;
  vo.symmetry_tol = tol.symmetry;
  vo.stability_ratio = tol.stability_ratio;
  vo.holder_slope_min = tol.holder_slope_min;
  const AICollection& ai = ctx.ai();
  out.reports.push_back(verify_ai_properties(ai, vo));

  Table scales{"scales", {"k", "t", "nonzeros", "dense", "guarded_rows"}, {}};
  for (std::size_t k = 0; k < ai.scale_count(); ++k)
    scales.add({std::to_string(k), fmt(ai.t(k)), std::to_string(ai.s(k).nonzeros()),
                ai.s(k).is_dense() ? "1" : "0", std::to_string(mask_count(ai.valid_rows(k), ai.space().size()))});
  out.tables.push_back(std::move(scales));

  // Calderon on a grid truncated so the bump stays guarded at the top scale.
  const MetricMeasureSpace& sp = *ctx.space();
  const double top = cfg.calderon_t_max.value_or(ctx.max_boundary_distance() / 12);
  const double lo = ai.grid().t_min();
  AICollection cal(ctx.space(), ScaleGrid::log_spaced(lo, std::max(top, lo * 10), cfg.points_per_decade),
                   AIOptions{cfg.margin_factor});
  const GridFunction f(central_bump(sp).evaluate(sp));
  PropertyReport cr = calderon_residual(cal, f, tol.calderon);
  AICollection cal2(ctx.space(), ScaleGrid::log_spaced(lo, std::max(top, lo * 10), 2 * cfg.points_per_decade),
                    AIOptions{cfg.margin_factor});
  const PropertyReport cr2 = calderon_residual(cal2, f, tol.calderon);
  const double r1 = cr.checks.front().constant, r2 = cr2.checks.front().constant;
  cr.check_le("dense_over_base", r1 > 0 ? r2 / r1 : 0.0, 0.5).detail = {{"base", r1}, {"dense", r2}, {"t_max", top}};
  out.reports.push_back(std::move(cr));
  return out;
}

// Bump supported on rows that are guarded at the reference scale.
TestFunction guarded_bump(const MetricMeasureSpace& sp, double guard_radius) {
  const std::size_t c = most_interior(sp);
  const double bd = sp.boundary_distance(c);
  const double r = std::min(bd / 4, (bd - guard_radius) / 2);
  if (!(r > 2 * sp.resolution()))
    fail(ErrorCode::insufficient_geometry, "no room for a bump inside the guarded region");
  TestFunction fn;
  TestFunction::Term t;
  t.center = coords_of(sp, c);
  t.radius = r;
  fn.terms.push_back(t);
  return fn;
}

// ---- verify-kernels

Output run_verify_kernels(Context& ctx) {
  const auto& cfg = ctx.cfg();
  Output out;
  const double N = ctx.space()->dim();
  KernelLemmaOptions lo;
  lo.tolerance = cfg.tolerances.kernel_exponent;
  Table fits{"fits",
             {"alpha", "kind", "lemma", "regime", "predicted", "fitted", "tolerance", "d_lo", "d_hi", "samples", "pass"},
             {}};
  const std::size_t stride = std::max<std::size_t>(1, ctx.space()->size() / 16);
  for (double a : cfg.alphas) {
    std::vector<KernelKind> kinds{KernelKind::bessel, KernelKind::frac_deriv};
    if (a < N) kinds.insert(kinds.begin() + 1, KernelKind::riesz);
    for (KernelKind kind : kinds) {
      const PotentialKernel& k = ctx.kernel(kind, a);
      PropertyReport rep = verify_kernel_lemmas(k, lo);
      rep.name = std::string(to_string(kind)) + "_" + alpha_tag(a);
      if (kind == KernelKind::bessel) {
        rep.check_le("quadrature_budget", k.quadrature_budget, 1e-3);
        // Same quadrature at twice the density: the budget must at least halve.
        const ScaleGrid fine = ScaleGrid::log_spaced(k.grid.t_min(), k.grid.t_max(), 2 * cfg.points_per_decade);
        const double fine_budget = std::abs(1.0 - bessel_weight_quadrature(fine, a));
        rep.check_le("budget_refinement_ratio", k.quadrature_budget > 0 ? fine_budget / k.quadrature_budget : 0.0, 0.5);
      }
      for (const auto& f : rep.fits)
        fits.add({fmt(a), to_string(kind), f.lemma, f.regime, fmt(f.predicted_exponent), fmt(f.fitted_exponent),
                  fmt(f.tolerance), fmt(f.d_lo), fmt(f.d_hi), std::to_string(f.samples), f.pass ? "1" : "0"});
      out.reports.push_back(std::move(rep));
      const std::string path = (std::filesystem::path(cfg.output_dir) /
                                ("data_verify-kernels_" + std::string(to_string(kind)) + "_" + alpha_tag(a) + ".csv"))
                                   .string();
      export_kernel_csv(k, path, stride);
    }
    {
      const AICollection& dense = ctx.dense_ai();
      KernelOptions ko;
      ko.reference_scale = cfg.reference_scale;
      const PotentialKernel dJ = bessel_kernel(dense, a, ko);
      const PotentialKernel dD = frac_deriv_kernel(dense, a, ko);
      const MetricMeasureSpace& sp = *ctx.space();
      const GridFunction f(guarded_bump(sp, cfg.margin_factor * 4 * cfg.reference_scale).evaluate(sp));
      PropertyReport base = q_representation_check(ctx.ai(), ctx.kernel(KernelKind::bessel, a),
                                                   ctx.kernel(KernelKind::frac_deriv, a), f,
                                                   cfg.tolerances.q_representation);
      const PropertyReport fine = q_representation_check(dense, dJ, dD, f, cfg.tolerances.q_representation);
      base.name = "q_representation_" + alpha_tag(a);
      for (const char* prop : {"bessel_relative_residual", "one_plus_derivative_relative_residual"}) {
        const double c0 = base.at(prop).constant, c1 = fine.at(prop).constant;
        base.check_le(std::string(prop) + "_dense_over_base", c0 > 0 ? c1 / c0 : 0.0, 1.0).detail = {
            {"base", c0}, {"dense", c1}};
      }
      out.reports.push_back(std::move(base));
    }
    if (a < N) {
      KernelOptions trunc;
      trunc.reference_scale = cfg.reference_scale;
      trunc.closures = false;
      PropertyReport dom = check_domination(riesz_kernel(ctx.ai(), a, trunc), bessel_kernel(ctx.ai(), a, trunc));
      dom.name = "domination_" + alpha_tag(a);
      out.reports.push_back(std::move(dom));
    }
  }
  out.tables.push_back(std::move(fits));
  return out;
}

// ---- improvement

Output run_improvement(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& tol = cfg.tolerances;
  Output out;
  EmbeddingOptions eo;
  eo.seed = cfg.seed;
  eo.stability_tol = tol.refinement_stability;
  Table curve{"modulus", {"alpha", "p", "t", "E_p"}, {}};
  for (double a : cfg.alphas) {
    const PotentialKernel& kJ = ctx.kernel(KernelKind::bessel, a);
    const MetricMeasureSpace& sp = *kJ.space;

    // Modulus of continuity of J g for a random bounded g.
    const GridFunction g(random_cell_function(sp, 40, cfg.seed).evaluate(sp));
    const GridFunction Jg = apply_bessel(kJ, g);
    PropertyReport mod;
    mod.name = "modulus_slope_" + alpha_tag(a);
    const double t_lo = 2 * sp.resolution(), t_hi = 20 * sp.resolution();
    for (double p : {1.0, 2.0}) {
      const LineFit fit = modulus_slope(sp, Jg, p, t_lo, t_hi, kJ.row_valid);
      mod.check_ge("slope_p" + fmt(p), fit.slope, a - tol.modulus_slope_margin).detail = {
          {"t_lo", t_lo}, {"t_hi", t_hi}, {"r2", fit.r2}};
      for (const auto& [t, e] : modulus_curve(sp, Jg, p, default_modulus_radii(sp), kJ.row_valid))
        curve.add({fmt(a), fmt(p), fmt(t), fmt(e)});
      // Per-point noise: reported only, its sub-resolution part is flat in t.
      std::mt19937_64 rng(cfg.seed + 17);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      Vector noise(static_cast<Eigen::Index>(sp.size()));
      for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = u(rng);
      mod.info("white_noise_slope_p" + fmt(p),
               modulus_slope(sp, apply_bessel(kJ, GridFunction(noise)), p, t_lo, t_hi, kJ.row_valid).slope);
    }
    out.reports.push_back(std::move(mod));
    PropertyReport pc = poincare_check(sp, Jg, g, a, kJ.row_valid);
    pc.name += "_" + alpha_tag(a);
    out.reports.push_back(std::move(pc));

    if (!(a + cfg.beta < 1)) {
      PropertyReport skip;
      skip.name = "improvement_" + alpha_tag(a);
      skip.info("skipped_alpha_plus_beta", a + cfg.beta);
      out.reports.push_back(std::move(skip));
      continue;
    }
    const PotentialKernel& kF = ctx.kernel(KernelKind::bessel, a, true);
    for (ImprovementFamily fam : {ImprovementFamily::lipschitz, ImprovementFamily::hajlasz}) {
      PropertyReport r = improvement_experiment(kJ, &kF, fam, cfg.beta, cfg.ps.front(), eo);
      r.name += "_" + alpha_tag(a);
      out.reports.push_back(std::move(r));
    }
    for (double p : cfg.ps) {
      PropertyReport r = improvement_experiment(kJ, &kF, ImprovementFamily::besov, cfg.beta, p, eo);
      r.name += "_" + alpha_tag(a) + "_p" + fmt(p);
      out.reports.push_back(std::move(r));
    }
  }
  out.tables.push_back(std::move(curve));
  return out;
}

// ---- embedding

Output run_embedding(Context& ctx) {
  const auto& cfg = ctx.cfg();
  Output out;
  EmbeddingOptions eo;
  eo.seed = cfg.seed;
  eo.stability_tol = cfg.tolerances.refinement_stability;
  Table t{"constants", {"alpha", "p", "report", "property", "value", "pass"}, {}};
  for (double a : cfg.alphas) {
    const PotentialKernel& kJ = ctx.kernel(KernelKind::bessel, a);
    const PotentialKernel& kF = ctx.kernel(KernelKind::bessel, a, true);
    for (double p : cfg.ps) {
      PropertyReport r = sobolev_embedding_experiment(kJ, &kF, p, EmbeddingRegime::automatic, eo);
      r.name += "_" + alpha_tag(a) + "_p" + fmt(p);
      for (const auto& c : r.checks)
        t.add({fmt(a), fmt(p), r.name, c.property, fmt(c.constant), c.pass ? "1" : "0"});
      out.reports.push_back(std::move(r));
    }
  }
  out.tables.push_back(std::move(t));
  return out;
}

// ---- contraction

Output run_contraction(Context& ctx) {
  const auto& cfg = ctx.cfg();
  Output out;
  ContractionOptions co;
  co.seed = cfg.seed;
  Table sweep{"sweep", {"alpha", "p", "estimate", "method", "iterations", "converged", "guarded_size"}, {}};
  Table hist{"history", {"alpha", "iteration", "singular_value"}, {}};
  std::vector<double> alphas = cfg.alphas;
  std::sort(alphas.begin(), alphas.end());
  PropertyReport summary;
  summary.name = "contraction_sweep";
  for (double p : cfg.ps) {
    double prev = -kInf;
    bool monotone = true;
    for (double a : alphas) {
      const ContractionReport c =
          contraction_norm(ctx.kernel(KernelKind::bessel, a), ctx.kernel(KernelKind::frac_deriv, a), p, co);
      sweep.add({fmt(a), fmt(p), fmt(c.estimate), c.method, std::to_string(c.iterations),
                 c.converged ? "1" : "0", std::to_string(c.guarded_size)});
      if (p == 2.0)
        for (std::size_t k = 0; k < c.history.size(); ++k)
          hist.add({fmt(a), std::to_string(k + 1), fmt(c.history[k])});
      auto& chk = summary.info("estimate_" + alpha_tag(a) + "_p" + fmt(p), c.estimate);
      chk.detail = {{"iterations", static_cast<double>(c.iterations)},
                    {"converged", c.converged ? 1.0 : 0.0},
                    {"lower_bound", c.method == "power_iteration" ? 0.0 : 1.0}};
      if (a == alphas.front()) summary.check_le("smallest_alpha_contracts_p" + fmt(p), c.estimate, 1.0).detail = {{"alpha", a}};
      if (c.estimate < prev) monotone = false;
      prev = c.estimate;
    }
    if (p == 2.0) {
      auto& m = summary.check_ge("nondecreasing_in_alpha_p2", monotone ? 1.0 : 0.0, 1.0);
      m.detail = {{"alphas", static_cast<double>(alphas.size())}};
    } else {
      summary.info("nondecreasing_in_alpha_p" + fmt(p), monotone ? 1.0 : 0.0);
    }
  }
  out.reports.push_back(std::move(summary));
  out.tables.push_back(std::move(sweep));
  out.tables.push_back(std::move(hist));
  return out;
}

// ---- invert

Output run_invert(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& tol = cfg.tolerances;
  Output out;
  Table inc{"increments", {"alpha", "term", "increment"}, {}};
  for (double a : cfg.alphas) {
    const PotentialKernel& kJ = ctx.kernel(KernelKind::bessel, a);
    const PotentialKernel& kD = ctx.kernel(KernelKind::frac_deriv, a);
    const MetricMeasureSpace& sp = *kJ.space;
    PropertyReport rep;
    rep.name = "invert_" + alpha_tag(a);
    const double scale = std::max(sp.resolution() * 8, ctx.max_boundary_distance() / 8);
    const auto battery = smooth_battery(sp, {}, 1, cfg.seed + 3, scale, 2 * scale, 4);
    const Vector g0 = battery.front().evaluate(sp);
    const Vector f = bessel_operator(kJ).matrix * g0;
    try {
      const InversionResult r = invert_bessel(kJ, kD, GridFunction(f), tol.invert_increment);
      const double err = weighted_l2(sp, r.g.values - g0) / weighted_l2(sp, g0);
      rep.check_le("round_trip_relative_error", err, tol.invert_round_trip).detail = {
          {"iterations", static_cast<double>(r.iterations)}, {"contraction", r.contraction}};
      rep.check_le("relative_residual", r.residual / weighted_l2(sp, f), tol.invert_round_trip);
      for (std::size_t k = 0; k < r.increments.size(); ++k)
        inc.add({fmt(a), std::to_string(k + 1), fmt(r.increments[k])});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::not_contractive && e.code() != ErrorCode::non_convergence) throw;
      rep.check_le(std::string("inversion_") + to_string(e.code()), 1.0, 0.0);
      out.errors.push_back(rep.name + ": " + e.what());
    }
    out.reports.push_back(std::move(rep));
  }
  out.tables.push_back(std::move(inc));
  return out;
}

// ---- tav-bounds

Output run_tav(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& tol = cfg.tolerances;
  Output out;
  const MetricMeasureSpace& sp = *ctx.space();
  const double lo = std::min(sp.resolution(), sp.min_separation()) / 4;
  const double hi = cfg.tav_t_max.value_or(ctx.max_boundary_distance() / 2);
  AICollection ai(ctx.space(), ScaleGrid::octave_aligned(lo, hi, 4), AIOptions{cfg.margin_factor});
  Table t{"bounds", {"alpha", "v", "size_bound", "smoothness", "T1", "Tstar1"}, {}};
  TavOptions to;
  to.zero_tol = tol.tav_zero;
  for (double a : cfg.alphas) {
    std::vector<double> bounds;
    for (double v : cfg.tav_v) {
      PropertyReport r = t_alpha_v_kernel(ai, a, v, cfg.tav_delta, to);
      r.name += "_" + alpha_tag(a) + "_v" + fmt(v);
      bounds.push_back(r.at("size_bound_constant").constant);
      t.add({fmt(a), fmt(v), fmt(bounds.back()), fmt(r.at("smoothness_constant").constant),
             fmt(r.at("T1_zero").constant), fmt(r.at("Tstar1_zero").constant)});
      out.reports.push_back(std::move(r));
    }
    if (!bounds.empty()) {
      PropertyReport cmp;
      cmp.name = "tav_bound_spread_" + alpha_tag(a);
      const auto [mn, mx] = std::minmax_element(bounds.begin(), bounds.end());
      cmp.check_le("max_over_min", *mx / *mn, tol.tav_ratio).detail = {{"min", *mn}, {"max", *mx}};
      out.reports.push_back(std::move(cmp));
    }
  }
  out.tables.push_back(std::move(t));
  return out;
}

// ---- euclid-compare

Output run_euclid(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& tol = cfg.tolerances;
  if (cfg.space.kind != SpaceKind::line)
    fail(ErrorCode::invalid_argument, "euclid-compare needs a line space");
  Output out;
  out.reports.push_back(translation_invariance(ctx.ai()));
  const PeriodicGrid grid = aligned_grid(*ctx.space(), 16);
  EuclidOptions eo;
  eo.spread_tol = tol.euclid_spread;
  eo.quadrature_tol = tol.euclid_quadrature;
  Table t{"constants", {"alpha", "function", "fitted_C", "quadrature_C"}, {}};
  for (double a : cfg.alphas) {
    PropertyReport sw = multiplier_sandwich(grid, a);
    sw.name += "_" + alpha_tag(a);
    out.reports.push_back(std::move(sw));
    const PotentialKernel& kD = ctx.kernel(KernelKind::frac_deriv, a);
    double scale = 0.0;
    for (std::size_t i : mask_indices(kD.row_valid, kD.size()))
      scale = std::max(scale, kD.space->boundary_distance(i));
    const auto battery = smooth_battery(*kD.space, kD.row_valid, 8, cfg.seed, 0.1 * scale, 0.25 * scale, 1);
    PropertyReport r = euclidean_consistency(kD, grid, battery, eo);
    r.name += "_" + alpha_tag(a);
    const auto& spread = r.at("fitted_C_spread");
    const double cq = r.at("quadrature_relative_error").detail.at("quadrature_C");
    for (std::size_t k = 0; k < battery.size(); ++k)
      t.add({fmt(a), std::to_string(k), fmt(spread.detail.at("fitted_C_" + std::to_string(k))), fmt(cq)});
    out.reports.push_back(std::move(r));
  }
  out.tables.push_back(std::move(t));
  return out;
}

void write_table(const std::string& dir, const std::string& experiment, const Table& t,
                 std::vector<std::string>& files) {
  const std::string path = (std::filesystem::path(dir) / ("data_" + experiment + "_" + t.name + ".csv")).string();
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path);
  for (std::size_t c = 0; c < t.header.size(); ++c) out << (c ? "," : "") << t.header[c];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
  files.push_back(path);
}

}  // namespace

RunResult run_experiments(const ExperimentConfig& cfg) {
  RunResult result;
  if (cfg.experiments.empty()) return result;
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) fail(ErrorCode::io_error, "cannot create output directory " + cfg.output_dir + ": " + ec.message());

  static const std::map<std::string, std::function<Output(Context&)>> runners{
      {"verify-ai", run_verify_ai},       {"verify-kernels", run_verify_kernels},
      {"improvement", run_improvement},   {"embedding", run_embedding},
      {"contraction", run_contraction},   {"invert", run_invert},
      {"tav-bounds", run_tav},            {"euclid-compare", run_euclid}};

  Context ctx(cfg);
  for (const auto& name : cfg.experiments) {
    Output out;
    try {
      out = runners.at(name)(ctx);
    } catch (const Error& e) {
      out.errors.push_back(e.what());
    }
    json reports = json::array();
    std::vector<std::string> failing;
    for (const auto& r : out.reports) {
      reports.push_back(to_json(r));
      for (const auto& f : r.failing()) failing.push_back(r.name + "." + f);
    }
    for (const auto& e : out.errors) failing.push_back("error: " + e);
    json report{{"experiment", name},
                {"pass", failing.empty()},
                {"space", json::parse(space_descriptor_json(cfg.space))},
                {"seed", cfg.seed},
                {"reports", reports},
                {"failing", failing},
                {"errors", out.errors}};
    const std::string path = (std::filesystem::path(cfg.output_dir) / ("report_" + name + ".json")).string();
    std::ofstream f(path);
    if (!f) fail(ErrorCode::io_error, "cannot write " + path);
    f << report.dump(2) << '\n';
    result.files.push_back(path);
    for (const auto& t : out.tables) write_table(cfg.output_dir, name, t, result.files);
    for (const auto& fl : failing) result.failing.push_back(name + ": " + fl);
  }
  result.exit_code = result.failing.empty() ? 0 : 1;
  return result;
}

}  // namespace ahlfors
