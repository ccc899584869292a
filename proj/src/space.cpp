#include "ahlfors/space.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace ahlfors {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

double gasket_dim() { return std::log(3.0) / std::log(2.0); }
double cantor_dim() { return std::log(2.0) / std::log(3.0); }

using P2 = std::array<double, 2>;

struct Triangle {
  P2 a, b, c;
};

P2 mid(const P2& p, const P2& q) { return {(p[0] + q[0]) / 2, (p[1] + q[1]) / 2}; }

void subdivide(const Triangle& t, int depth, std::vector<Triangle>& out) {
  if (depth == 0) {
    out.push_back(t);
    return;
  }
  const P2 ab = mid(t.a, t.b), ac = mid(t.a, t.c), bc = mid(t.b, t.c);
  subdivide({t.a, ab, ac}, depth - 1, out);
  subdivide({ab, t.b, bc}, depth - 1, out);
  subdivide({ac, bc, t.c}, depth - 1, out);
}

double segment_distance(const P2& p, const P2& a, const P2& b) {
  const double vx = b[0] - a[0], vy = b[1] - a[1];
  const double wx = p[0] - a[0], wy = p[1] - a[1];
  double u = (vx * wx + vy * wy) / (vx * vx + vy * vy);
  u = std::clamp(u, 0.0, 1.0);
  return std::hypot(wx - u * vx, wy - u * vy);
}

double triangle_distance(const P2& p, const Triangle& t) {
  auto cross = [](const P2& o, const P2& a, const P2& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  const double d1 = cross(t.a, t.b, p), d2 = cross(t.b, t.c, p), d3 = cross(t.c, t.a, p);
  const bool neg = d1 < 0 || d2 < 0 || d3 < 0, pos = d1 > 0 || d2 > 0 || d3 > 0;
  if (!(neg && pos)) return 0.0;
  return std::min({segment_distance(p, t.a, t.b), segment_distance(p, t.b, t.c),
                   segment_distance(p, t.c, t.a)});
}

// The part of 2^k T not already in 2^(k-1) T.
std::array<Triangle, 2> gasket_shell(int k) {
  const double s = std::ldexp(1.0, k - 1);  // side of the new sub-triangles
  const double h = s * kSqrt3 / 2;
  Triangle bottom{{s, 0}, {2 * s, 0}, {1.5 * s, h}};
  Triangle top{{s / 2, h}, {1.5 * s, h}, {s, 2 * h}};
  return {bottom, top};
}

}  // namespace

const char* to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::line: return "line";
    case SpaceKind::plane: return "plane";
    case SpaceKind::gasket: return "gasket";
    case SpaceKind::cantor: return "cantor";
  }
  return "unknown";
}

MetricMeasureSpace::MetricMeasureSpace(SpaceKind kind, int ambient_dim, std::vector<double> coords,
                                       Vector weights, std::vector<double> boundary_distance,
                                       double dim_n, double domain_radius, double resolution,
                                       std::string description)
    : kind_(kind),
      ambient_dim_(ambient_dim),
      coords_(std::move(coords)),
      weights_(std::move(weights)),
      boundary_distance_(std::move(boundary_distance)),
      dim_n_(dim_n),
      domain_radius_(domain_radius),
      resolution_(resolution),
      description_(std::move(description)) {
  const std::size_t n = size();
  if (coords_.size() != n * static_cast<std::size_t>(ambient_dim_) || boundary_distance_.size() != n)
    fail(ErrorCode::invalid_argument, "inconsistent space arrays");
  for (std::size_t i = 0; i < n; ++i)
    if (!(weights_[static_cast<Eigen::Index>(i)] > 0))
      fail(ErrorCode::invalid_argument, "non-positive quadrature weight");

  dense_ = n <= kDenseDistanceLimit;
  if (dense_) distances_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  double min_sep = kInf, diam = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (dense_) distances_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = raw_dist(i, j);
      if (dense_) {
        distances_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
        distances_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d;
      }
      min_sep = std::min(min_sep, d);
      diam = std::max(diam, d);
    }
  }
  min_separation_ = n > 1 ? min_sep : resolution_;
  diameter_ = diam;
}

double MetricMeasureSpace::raw_dist(std::size_t i, std::size_t j) const {
  double s = 0.0;
  for (int a = 0; a < ambient_dim_; ++a) {
    const double d = coords_[i * ambient_dim_ + a] - coords_[j * ambient_dim_ + a];
    s += d * d;
  }
  return std::sqrt(s);
}

double MetricMeasureSpace::dist(std::size_t i, std::size_t j) const {
  if (dense_) return distances_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return i < j ? raw_dist(i, j) : raw_dist(j, i);
}

Vector MetricMeasureSpace::distance_row(std::size_t i) const {
  if (dense_) return distances_.col(static_cast<Eigen::Index>(i));  // symmetric
  Vector r(static_cast<Eigen::Index>(size()));
  for (std::size_t j = 0; j < size(); ++j) r[static_cast<Eigen::Index>(j)] = dist(i, j);
  return r;
}

std::size_t MetricMeasureSpace::nearest_point(const std::vector<double>& x) const {
  if (x.size() != static_cast<std::size_t>(ambient_dim_))
    fail(ErrorCode::invalid_argument, "coordinate dimension mismatch");
  std::size_t best = 0;
  double best_d = kInf;
  for (std::size_t i = 0; i < size(); ++i) {
    double s = 0.0;
    for (int a = 0; a < ambient_dim_; ++a) {
      const double d = coord(i, a) - x[static_cast<std::size_t>(a)];
      s += d * d;
    }
    if (s < best_d) {
      best_d = s;
      best = i;
    }
  }
  return best;
}

SpacePtr build_line_space(double half_length, int n_points) {
  if (n_points < 3) fail(ErrorCode::invalid_argument, "line space needs n_points >= 3");
  if (!(half_length > 0)) fail(ErrorCode::invalid_argument, "line space needs half_length > 0");
  const auto n = static_cast<std::size_t>(n_points);
  const double h = 2.0 * half_length / static_cast<double>(n - 1);
  std::vector<double> coords(n), bdist(n);
  for (std::size_t i = 0; i < n; ++i) {
    coords[i] = -half_length + h * static_cast<double>(i);
    bdist[i] = half_length + h / 2 - std::abs(coords[i]);
  }
  std::ostringstream desc;
  desc << "line L=" << half_length << " n=" << n_points;
  return std::make_shared<MetricMeasureSpace>(SpaceKind::line, 1, std::move(coords),
                                              Vector::Constant(static_cast<Eigen::Index>(n), h),
                                              std::move(bdist), 1.0, half_length, h, desc.str());
}

SpacePtr build_plane_space(double half_length, int n_per_side) {
  if (n_per_side < 3) fail(ErrorCode::invalid_argument, "plane space needs n_per_side >= 3");
  if (!(half_length > 0)) fail(ErrorCode::invalid_argument, "plane space needs half_length > 0");
  const auto m = static_cast<std::size_t>(n_per_side);
  const double h = 2.0 * half_length / static_cast<double>(m - 1);
  std::vector<double> coords, bdist;
  coords.reserve(2 * m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double x = -half_length + h * static_cast<double>(i);
      const double y = -half_length + h * static_cast<double>(j);
      coords.push_back(x);
      coords.push_back(y);
      bdist.push_back(half_length + h / 2 - std::max(std::abs(x), std::abs(y)));
    }
  std::ostringstream desc;
  desc << "plane L=" << half_length << " n=" << n_per_side << "^2";
  return std::make_shared<MetricMeasureSpace>(
      SpaceKind::plane, 2, std::move(coords),
      Vector::Constant(static_cast<Eigen::Index>(m * m), h * h), std::move(bdist), 2.0,
      half_length, h, desc.str());
}

std::size_t gasket_point_count(int level, int dilations) {
  if (level < 2 || dilations < 1) return 0;
  std::size_t p = 1;
  for (int i = 1; i < level; ++i) p *= 3;
  return p * static_cast<std::size_t>(2 * dilations + 1);
}

std::size_t cantor_point_count(int level, int dilations) {
  if (level < 1 || dilations < 1) return 0;
  const std::size_t p = std::size_t{1} << (level - 1);
  return p * static_cast<std::size_t>(dilations + 1);
}

SpacePtr build_gasket_space(int level, int dilations) {
  if (level < 2 || dilations < 1 || level > 12 || dilations > 12)
    fail(ErrorCode::invalid_argument, "gasket needs 2 <= level <= 12 and 1 <= dilations <= 12");
  const double n_dim = gasket_dim();
  std::vector<Triangle> cells;
  std::vector<double> sides;
  // 2T at the full level.
  subdivide({{0, 0}, {2, 0}, {1, kSqrt3}}, level, cells);
  sides.assign(cells.size(), std::ldexp(1.0, 1 - level));
  for (int k = 2; k <= dilations; ++k) {
    for (const auto& shell : gasket_shell(k)) {
      subdivide(shell, level - 1, cells);
      sides.resize(cells.size(), std::ldexp(1.0, k - level));
    }
  }
  const auto outside = gasket_shell(dilations + 1);
  const std::size_t n = cells.size();
  std::vector<double> coords(2 * n), bdist(n);
  Vector w(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = cells[i];
    const P2 c{(t.a[0] + t.b[0] + t.c[0]) / 3, (t.a[1] + t.b[1] + t.c[1]) / 3};
    coords[2 * i] = c[0];
    coords[2 * i + 1] = c[1];
    bdist[i] = std::min(triangle_distance(c, outside[0]), triangle_distance(c, outside[1]));
    w[static_cast<Eigen::Index>(i)] = std::pow(sides[i], n_dim);
  }
  std::ostringstream desc;
  desc << "gasket level=" << level << " dilations=" << dilations;
  return std::make_shared<MetricMeasureSpace>(SpaceKind::gasket, 2, std::move(coords), std::move(w),
                                              std::move(bdist), n_dim,
                                              std::ldexp(1.0, dilations),
                                              std::ldexp(1.0, 1 - level), desc.str());
}

SpacePtr build_cantor_space(int level, int dilations) {
  if (level < 1 || dilations < 1 || level > 20 || dilations > 12)
    fail(ErrorCode::invalid_argument, "cantor needs 1 <= level <= 20 and 1 <= dilations <= 12");
  const double n_dim = cantor_dim();
  std::vector<std::pair<double, double>> cells;  // (left end, length)
  auto split = [&](double a, double len, int depth, auto&& self) -> void {
    if (depth == 0) {
      cells.emplace_back(a, len);
      return;
    }
    self(a, len / 3, depth - 1, self);
    self(a + 2 * len / 3, len / 3, depth - 1, self);
  };
  split(0.0, 3.0, level, split);
  for (int k = 2; k <= dilations; ++k) {
    const double third = std::pow(3.0, k - 1);
    split(2 * third, third, level - 1, split);
  }
  const double edge = 2 * std::pow(3.0, dilations);
  const std::size_t n = cells.size();
  std::vector<double> coords(n), bdist(n);
  Vector w(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    coords[i] = cells[i].first + cells[i].second / 2;
    bdist[i] = edge - coords[i];
    w[static_cast<Eigen::Index>(i)] = std::pow(cells[i].second, n_dim);
  }
  std::ostringstream desc;
  desc << "cantor level=" << level << " dilations=" << dilations;
  return std::make_shared<MetricMeasureSpace>(SpaceKind::cantor, 1, std::move(coords), std::move(w),
                                              std::move(bdist), n_dim,
                                              std::pow(3.0, dilations),
                                              std::pow(3.0, 1 - level), desc.str());
}

std::size_t SpaceDescriptor::point_count() const {
  switch (kind) {
    case SpaceKind::line: return static_cast<std::size_t>(std::max(n_points, 0));
    case SpaceKind::plane:
      return static_cast<std::size_t>(std::max(n_per_side, 0)) *
             static_cast<std::size_t>(std::max(n_per_side, 0));
    case SpaceKind::gasket: return gasket_point_count(level, dilations);
    case SpaceKind::cantor: return cantor_point_count(level, dilations);
  }
  return 0;
}

SpaceDescriptor SpaceDescriptor::refined() const {
  SpaceDescriptor r = *this;
  switch (kind) {
    case SpaceKind::line: r.n_points = 2 * n_points - 1; break;
    case SpaceKind::plane: r.n_per_side = 2 * n_per_side - 1; break;
    case SpaceKind::gasket:
    case SpaceKind::cantor: r.level = level + 1; break;
  }
  return r;
}

SpaceDescriptor parse_space_descriptor(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    fail(ErrorCode::config_error, std::string("space descriptor: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::config_error, "space descriptor must be an object");
  const nlohmann::json& params = j.contains("params") ? j.at("params") : j;
  auto get = [&](const char* key, auto fallback) {
    using T = decltype(fallback);
    if (!params.contains(key)) return fallback;
    try {
      return params.at(key).template get<T>();
    } catch (const std::exception&) {
      fail(ErrorCode::config_error, std::string("space descriptor field '") + key + "' has wrong type");
    }
  };
  SpaceDescriptor d;
  const std::string kind = j.value("kind", std::string("line"));
  if (kind == "line") d.kind = SpaceKind::line;
  else if (kind == "plane") d.kind = SpaceKind::plane;
  else if (kind == "gasket") d.kind = SpaceKind::gasket;
  else if (kind == "cantor") d.kind = SpaceKind::cantor;
  else fail(ErrorCode::config_error, "space descriptor field 'kind' must be line|plane|gasket|cantor");
  d.half_length = get("half_length", d.half_length);
  d.n_points = get("n_points", d.n_points);
  d.n_per_side = get("n_per_side", d.n_per_side);
  d.level = get("level", d.level);
  d.dilations = get("dilations", d.dilations);
  if (j.contains("seed")) {
    try {
      d.seed = j.at("seed").get<std::uint64_t>();
    } catch (const std::exception&) {
      fail(ErrorCode::config_error, "space descriptor field 'seed' must be a non-negative integer");
    }
  }
  return d;
}

std::string space_descriptor_json(const SpaceDescriptor& d) {
  nlohmann::json j;
  j["kind"] = to_string(d.kind);
  switch (d.kind) {
    case SpaceKind::line:
      j["params"] = {{"half_length", d.half_length}, {"n_points", d.n_points}};
      break;
    case SpaceKind::plane:
      j["params"] = {{"half_length", d.half_length}, {"n_per_side", d.n_per_side}};
      break;
    case SpaceKind::gasket:
    case SpaceKind::cantor:
      j["params"] = {{"level", d.level}, {"dilations", d.dilations}};
      break;
  }
  j["seed"] = d.seed;
  return j.dump();
}

SpacePtr build_space(const SpaceDescriptor& d) {
  switch (d.kind) {
    case SpaceKind::line: return build_line_space(d.half_length, d.n_points);
    case SpaceKind::plane: return build_plane_space(d.half_length, d.n_per_side);
    case SpaceKind::gasket: return build_gasket_space(d.level, d.dilations);
    case SpaceKind::cantor: return build_cantor_space(d.level, d.dilations);
  }
  fail(ErrorCode::invalid_argument, "unknown space kind");
}

void export_points_csv(const MetricMeasureSpace& space, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path);
  out.precision(17);
  out << "id";
  for (int a = 0; a < space.ambient_dim(); ++a) out << ",x" << a;
  out << ",weight\n";
  for (std::size_t i = 0; i < space.size(); ++i) {
    out << i;
    for (int a = 0; a < space.ambient_dim(); ++a) out << ',' << space.coord(i, a);
    out << ',' << space.weight(i) << '\n';
  }
}

std::vector<std::size_t> ball(const MetricMeasureSpace& space, std::size_t center, double radius) {
  if (center >= space.size()) fail(ErrorCode::invalid_argument, "ball center out of range");
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < space.size(); ++j)
    if (j == center || space.dist(center, j) < radius) out.push_back(j);
  return out;
}

double integrate(const MetricMeasureSpace& space, const GridFunction& f) {
  if (f.size() != space.size()) fail(ErrorCode::invalid_argument, "function size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.is_valid(i)) s += f.values[static_cast<Eigen::Index>(i)] * space.weight(i);
  return s;
}

double lp_norm(const MetricMeasureSpace& space, const GridFunction& f, double p) {
  if (!(p >= 1)) fail(ErrorCode::invalid_argument, "lp_norm needs p >= 1");
  if (f.size() != space.size()) fail(ErrorCode::invalid_argument, "function size mismatch");
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f.is_valid(i)) m = std::max(m, std::abs(f.values[static_cast<Eigen::Index>(i)]));
    return m;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.is_valid(i))
      s += std::pow(std::abs(f.values[static_cast<Eigen::Index>(i)]), p) * space.weight(i);
  return std::pow(s, 1.0 / p);
}

GuardRegion::GuardRegion(SpacePtr space, double margin_factor)
    : space_(std::move(space)), margin_(margin_factor) {
  if (!(margin_factor >= 1.0)) fail(ErrorCode::invalid_argument, "margin_factor must be >= 1");
}

bool GuardRegion::valid(std::size_t i, double t) const {
  return margin_ * 4.0 * t <= space_->boundary_distance(i) * (1.0 + 1e-12);
}

double GuardRegion::max_scale(std::size_t i) const {
  return space_->boundary_distance(i) / (4.0 * margin_);
}

Mask GuardRegion::valid_mask(double t) const {
  Mask m(space_->size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = valid(i, t);
  return m;
}

namespace {

std::vector<std::size_t> stride_sample(const std::vector<std::size_t>& idx, std::size_t max_count) {
  if (idx.size() <= max_count) return idx;
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < max_count; ++k) out.push_back(idx[k * idx.size() / max_count]);
  return out;
}

std::vector<double> log_scales(double lo, double hi, double per_decade) {
  const auto count = static_cast<std::size_t>(std::floor(per_decade * std::log10(hi / lo) + 1e-9)) + 1;
  std::vector<double> r(count);
  for (std::size_t k = 0; k < count; ++k)
    r[k] = count == 1 ? lo
                      : lo * std::pow(hi / lo, static_cast<double>(k) / static_cast<double>(count - 1));
  return r;
}

}  // namespace

PropertyReport ahlfors_fit(const MetricMeasureSpace& space, double scale_lo, double scale_hi,
                           double tolerance, double scales_per_decade) {
  if (!(scale_lo > 0) || !(scale_lo < scale_hi))
    fail(ErrorCode::invalid_argument, "ahlfors_fit needs 0 < scale_lo < scale_hi");
  const auto radii = log_scales(scale_lo, scale_hi, scales_per_decade);
  if (radii.size() < 4) fail(ErrorCode::insufficient_scales, "fewer than 4 radii in the fit range");
  std::vector<std::size_t> centers;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space.boundary_distance(i) >= scale_hi) centers.push_back(i);
  if (centers.empty())
    fail(ErrorCode::insufficient_geometry, "no center whose scale_hi ball stays inside the sample");
  centers = stride_sample(centers, 64);

  const double n_dim = space.dim();
  std::vector<double> lx;
  for (double r : radii) lx.push_back(std::log(r));
  double slope_sum = 0.0, c_lo = kInf, c_hi = 0.0;
  for (std::size_t c : centers) {
    const Vector drow = space.distance_row(c);
    std::vector<double> ly;
    for (double r : radii) {
      double m = 0.0;
      for (std::size_t j = 0; j < space.size(); ++j)
        if (j == c || drow[static_cast<Eigen::Index>(j)] < r) m += space.weight(j);
      ly.push_back(std::log(m));
      const double ratio = m / std::pow(r, n_dim);
      c_lo = std::min(c_lo, ratio);
      c_hi = std::max(c_hi, ratio);
    }
    slope_sum += fit_line(lx, ly).slope;
  }
  const double n_hat = slope_sum / static_cast<double>(centers.size());

  PropertyReport rep;
  rep.name = "ahlfors_fit";
  auto& dim_check = rep.check_abs_le("fitted_dimension_error", n_hat - n_dim, tolerance);
  dim_check.detail = {{"fitted_dimension", n_hat}, {"dimension", n_dim},
                      {"centers", static_cast<double>(centers.size())},
                      {"radii", static_cast<double>(radii.size())},
                      {"scale_lo", scale_lo}, {"scale_hi", scale_hi}};
  auto& c_check = rep.check_le("mass_constant_ratio", c_hi / c_lo, 10.0);
  c_check.detail = {{"c_lo", c_lo}, {"c_hi", c_hi}};
  return rep;
}

LineFit distance_power_fit(const MetricMeasureSpace& space, double s, bool inside, double scale_lo,
                           double scale_hi, std::size_t max_centers) {
  if (!(scale_lo > 0) || !(scale_lo < scale_hi))
    fail(ErrorCode::invalid_argument, "distance_power_fit needs 0 < scale_lo < scale_hi");
  const auto radii = log_scales(scale_lo, scale_hi, 10.0);
  if (radii.size() < 4) fail(ErrorCode::insufficient_scales, "fewer than 4 radii in the fit range");
  const double reach = inside ? scale_hi : 8.0 * scale_hi;
  std::vector<std::size_t> centers;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space.boundary_distance(i) >= reach) centers.push_back(i);
  if (centers.empty()) fail(ErrorCode::insufficient_geometry, "no guarded center for the fit range");
  centers = stride_sample(centers, max_centers);

  std::vector<double> lx, ly;
  for (double r : radii) lx.push_back(std::log(r));
  std::vector<double> mean(radii.size(), 0.0);
  for (std::size_t c : centers) {
    const Vector drow = space.distance_row(c);
    for (std::size_t k = 0; k < radii.size(); ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < space.size(); ++j) {
        if (j == c) continue;
        const double d = drow[static_cast<Eigen::Index>(j)];
        if ((d < radii[k]) == inside) acc += std::pow(d, s) * space.weight(j);
      }
      mean[k] += std::log(acc) / static_cast<double>(centers.size());
    }
  }
  return fit_line(lx, mean);
}

PropertyReport check_metric_invariants(const MetricMeasureSpace& space, std::uint64_t seed,
                                       std::size_t triples) {
  PropertyReport rep;
  rep.name = "metric_invariants";
  const std::size_t n = space.size();
  double asym = 0.0, diag = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diag = std::max(diag, std::abs(space.dist(i, i)));
    for (std::size_t j = i + 1; j < n; ++j) {
      asym = std::max(asym, std::abs(space.dist(i, j) - space.dist(j, i)));
      neg = std::min(neg, space.dist(i, j));
    }
  }
  rep.check_le("distance_symmetry", asym, 0.0);
  rep.check_le("distance_diagonal", diag, 0.0);
  rep.check_ge("distance_nonnegative", neg, 0.0);
  rep.check_ge("min_weight", space.weights().minCoeff(), 0.0).pass = space.weights().minCoeff() > 0;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  double worst = 0.0;
  for (std::size_t k = 0; k < triples; ++k) {
    const std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
    worst = std::max(worst, space.dist(a, c) - space.dist(a, b) - space.dist(b, c));
  }
  rep.check_le("triangle_inequality_excess", worst, 1e-12 * std::max(1.0, space.diameter()));
  return rep;
}

}  // namespace ahlfors
