#pragma once

#include "ahlfors/common.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ahlfors {

enum class SpaceKind { line, plane, gasket, cantor };

const char* to_string(SpaceKind kind);

/// Finite sample of an Ahlfors N-regular space of infinite measure.
/// Immutable after construction.
class MetricMeasureSpace {
 public:
  /// Distances are cached densely up to this many points.
  static constexpr std::size_t kDenseDistanceLimit = 8192;

  MetricMeasureSpace(SpaceKind kind, int ambient_dim, std::vector<double> coords,
                     Vector weights, std::vector<double> boundary_distance, double dim_n,
                     double domain_radius, double resolution, std::string description);

  SpaceKind kind() const { return kind_; }
  const std::string& description() const { return description_; }
  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
  int ambient_dim() const { return ambient_dim_; }
  double coord(std::size_t i, int axis) const { return coords_[i * ambient_dim_ + axis]; }

  double dist(std::size_t i, std::size_t j) const;
  bool has_dense_distances() const { return dense_; }
  /// Row i of the distance matrix (computed on the fly beyond the dense limit).
  Vector distance_row(std::size_t i) const;

  double weight(std::size_t i) const { return weights_[static_cast<Eigen::Index>(i)]; }
  const Vector& weights() const { return weights_; }
  double total_mass() const { return weights_.sum(); }

  double dim() const { return dim_n_; }
  double domain_radius() const { return domain_radius_; }
  double resolution() const { return resolution_; }
  double min_separation() const { return min_separation_; }
  double diameter() const { return diameter_; }
  /// Distance from point i to the part of the modeled space left out of the
  /// sample. A ball B(x_i, r) lies inside the sample iff r <= this value.
  double boundary_distance(std::size_t i) const { return boundary_distance_[i]; }

  /// Index of the point nearest to the given coordinates.
  std::size_t nearest_point(const std::vector<double>& x) const;

 private:
  double raw_dist(std::size_t i, std::size_t j) const;

  SpaceKind kind_;
  int ambient_dim_;
  std::vector<double> coords_;
  Vector weights_;
  std::vector<double> boundary_distance_;
  double dim_n_;
  double domain_radius_;
  double resolution_;
  double min_separation_ = 0.0;
  double diameter_ = 0.0;
  std::string description_;
  bool dense_ = false;
  Matrix distances_;
};

using SpacePtr = std::shared_ptr<const MetricMeasureSpace>;

/// Uniform grid on [-L, L], weight = spacing.
SpacePtr build_line_space(double half_length, int n_points);
/// Uniform n x n grid on [-L, L]^2, weight = spacing^2.
SpacePtr build_plane_space(double half_length, int n_per_side);
/// Dilated Sierpinski gasket: 2T at the given level plus, for k = 2..K, the
/// two new sub-triangles of 2^k T at cell size 2^(k - level).
SpacePtr build_gasket_space(int subdivision_level, int dilation_count);
/// Dilated middle-thirds Cantor set, graded the same way with ratio 3.
SpacePtr build_cantor_space(int subdivision_level, int dilation_count);

/// Point count a gasket/cantor/line/plane descriptor would produce.
std::size_t gasket_point_count(int subdivision_level, int dilation_count);
std::size_t cantor_point_count(int subdivision_level, int dilation_count);

struct SpaceDescriptor {
  SpaceKind kind = SpaceKind::line;
  double half_length = 10.0;
  int n_points = 1001;     // line
  int n_per_side = 41;     // plane
  int level = 6;           // gasket, cantor
  int dilations = 3;       // gasket, cantor
  std::uint64_t seed = 0;

  std::size_t point_count() const;
  /// Descriptor with the resolution halved (one refinement step).
  SpaceDescriptor refined() const;
};

SpaceDescriptor parse_space_descriptor(const std::string& json_text);
std::string space_descriptor_json(const SpaceDescriptor& d);
SpacePtr build_space(const SpaceDescriptor& d);

/// Writes id, coordinates, weight.
void export_points_csv(const MetricMeasureSpace& space, const std::string& path);

/// {j : d(center, j) < radius}, with the center always included.
std::vector<std::size_t> ball(const MetricMeasureSpace& space, std::size_t center, double radius);

/// Sum over valid entries of f_i w_i.
double integrate(const MetricMeasureSpace& space, const GridFunction& f);
/// Weighted l^p norm over valid entries; p = kInf gives the max.
double lp_norm(const MetricMeasureSpace& space, const GridFunction& f, double p);

/// B(x_i, margin * 4t) inside the sample.
class GuardRegion {
 public:
  explicit GuardRegion(SpacePtr space, double margin_factor = 1.5);

  double margin_factor() const { return margin_; }
  bool valid(std::size_t i, double t) const;
  /// Largest t with valid(i, t).
  double max_scale(std::size_t i) const;
  Mask valid_mask(double t) const;

 private:
  SpacePtr space_;
  double margin_;
};

/// Slope of log ball mass vs log r, averaged over centers whose balls stay
/// inside the sample at scale_hi.
PropertyReport ahlfors_fit(const MetricMeasureSpace& space, double scale_lo, double scale_hi,
                           double tolerance = 0.06, double scales_per_decade = 10.0);

/// Fitted exponent of r -> integral of d(x,.)^s over B(x,r) (inside = true)
/// or over its complement in the sample.
LineFit distance_power_fit(const MetricMeasureSpace& space, double s, bool inside,
                           double scale_lo, double scale_hi, std::size_t max_centers = 32);

/// Symmetry, zero diagonal, weight positivity, and triangle inequality on
/// seeded random triples.
PropertyReport check_metric_invariants(const MetricMeasureSpace& space, std::uint64_t seed,
                                       std::size_t triples = 20000);

}  // namespace ahlfors
