#pragma once

#include "ahlfors/common.hpp"
#include "ahlfors/space.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ahlfors {

/// Every threshold an experiment compares against. Defaults are the values
/// the acceptance suite uses.
struct Tolerances {
  double normalization = 1e-12;
  double q_constants = 1e-8;
  double symmetry = 1e-12;
  double stability_ratio = 1.5;
  double holder_slope_min = 0.9;
  double kernel_exponent = 0.1;
  double calderon = 0.02;
  double q_representation = 0.03;
  double refinement_stability = 0.25;
  double modulus_slope_margin = 0.05;
  double invert_round_trip = 1e-3;
  double invert_increment = 1e-12;
  double tav_zero = 1e-6;
  double tav_ratio = 3.0;
  double euclid_spread = 0.02;
  double euclid_quadrature = 0.03;
};

struct ExperimentConfig {
  SpaceDescriptor space;
  double points_per_decade = 12.0;
  std::optional<double> t_min;
  std::optional<double> t_max;
  double margin_factor = 1.5;
  double reference_scale = 1.0;
  std::vector<double> alphas{0.3};
  std::vector<double> ps{2.0};
  std::vector<std::string> experiments;
  Tolerances tolerances;
  std::uint64_t seed = 1;
  std::string output_dir = "ahlfors_out";

  /// improvement: Holder/Besov/Hajlasz exponent of the source class.
  double beta = 0.4;
  /// tav-bounds: v values and the exponent delta.
  std::vector<double> tav_v{0.25, 1.0, 4.0};
  double tav_delta = 0.5;
  /// Top of the truncated grids used by the Calderon and T_{alpha,v} checks;
  /// default max boundary distance / 12.
  std::optional<double> calderon_t_max;
  std::optional<double> tav_t_max;
};

/// Names accepted in "experiments".
const std::vector<std::string>& experiment_names();

/// Parses and validates; errors are config_error and name the offending field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_json(const ExperimentConfig& cfg);

/// Dry-run plan. Sizes come from the descriptor alone, so nothing is built.
std::string describe(const ExperimentConfig& cfg);

struct RunResult {
  int exit_code = 0;
  std::vector<std::string> failing;  // "experiment: property"
  std::vector<std::string> files;
};

/// Runs each selected experiment in order, writing report_<name>.json and
/// data_<name>_<table>.csv into output_dir. exit_code is 0 when every check
/// passes and 1 otherwise.
RunResult run_experiments(const ExperimentConfig& cfg);

}  // namespace ahlfors
