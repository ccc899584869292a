#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ahlfors {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Per-point validity flags. An empty mask means every entry is valid.
using Mask = std::vector<bool>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorCode {
  invalid_argument = 1,
  insufficient_scales,
  degenerate_scale,
  boundary_scale,
  guard_violation,
  insufficient_geometry,
  not_contractive,
  non_convergence,
  hypothesis_violation,
  invalid_regime,
  degenerate_radius,
  config_error,
  io_error,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

/// Function values on the points of a space. Invalid entries are missing,
/// stored as NaN, and skipped by every norm and integral.
struct GridFunction {
  Vector values;
  Mask valid;

  GridFunction() = default;
  explicit GridFunction(Vector v) : values(std::move(v)) {}
  GridFunction(Vector v, Mask m);

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  bool is_valid(std::size_t i) const { return valid.empty() || valid[i]; }
  std::size_t valid_count() const;

  static GridFunction constant(std::size_t n, double c);
};

Mask mask_and(const Mask& a, const Mask& b, std::size_t n);
std::size_t mask_count(const Mask& m, std::size_t n);
std::vector<std::size_t> mask_indices(const Mask& m, std::size_t n);

struct PropertyCheck {
  std::string property;
  double constant = 0.0;   // measured value
  double tolerance = 0.0;  // threshold the measurement was compared against
  bool pass = false;
  std::string comparison;  // "<=", ">=", "abs<=", "info"
  std::map<std::string, double> detail;
};

struct ExponentFit {
  std::string lemma;
  std::string regime;
  double predicted_exponent = 0.0;
  double fitted_exponent = 0.0;
  double constant = 0.0;
  double tolerance = 0.0;
  double d_lo = 0.0;
  double d_hi = 0.0;
  std::size_t samples = 0;
  bool pass = false;
};

struct PropertyReport {
  std::string name;
  std::vector<PropertyCheck> checks;
  std::vector<ExponentFit> fits;

  bool pass() const;
  const PropertyCheck* find(std::string_view property) const;
  const PropertyCheck& at(std::string_view property) const;
  std::vector<std::string> failing() const;

  PropertyCheck& check_le(std::string property, double value, double bound);
  PropertyCheck& check_ge(std::string property, double value, double bound);
  PropertyCheck& check_abs_le(std::string property, double value, double bound);
  PropertyCheck& info(std::string property, double value);
  void append(const PropertyReport& other, const std::string& prefix = {});
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t samples = 0;
};

/// Ordinary least squares y = slope*x + intercept.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Per-process worker count used by parallel assembly loops.
void set_thread_count(int n);
int thread_count();

}  // namespace ahlfors
