#include "doctest.h"

#include "ahlfors/operators.hpp"
#include "ahlfors/spaces_norms.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <map>
#include <random>

using namespace ahlfors;

namespace {

SpacePtr line() {
  static const SpacePtr sp = build_line_space(10.0, 301);
  return sp;
}

const AICollection& ai() {
  static const AICollection a(line(), default_scale_grid(*line(), 12));
  return a;
}

const PotentialKernel& kJ(double a) {
  static std::map<double, PotentialKernel> cache;
  auto it = cache.find(a);
  if (it == cache.end()) it = cache.emplace(a, bessel_kernel(ai(), a)).first;
  return it->second;
}

const PotentialKernel& kD(double a) {
  static std::map<double, PotentialKernel> cache;
  auto it = cache.find(a);
  if (it == cache.end()) it = cache.emplace(a, frac_deriv_kernel(ai(), a)).first;
  return it->second;
}

Vector bump(const MetricMeasureSpace& sp, double c, double r) {
  Vector f(static_cast<Eigen::Index>(sp.size()));
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const double u = (sp.coord(i, 0) - c) / r;
    f[static_cast<Eigen::Index>(i)] = std::abs(u) < 1 ? std::exp(1 - 1 / (1 - u * u)) : 0.0;
  }
  return f;
}

// Weighted l2 operator norm from a full SVD of W^1/2 R W^-1/2.
double svd_norm(const Matrix& R, const Vector& w) {
  const Vector s = w.array().sqrt().matrix();
  const Matrix B = s.asDiagonal() * R * s.cwiseInverse().asDiagonal();
  return Eigen::JacobiSVD<Matrix>(B).singularValues()(0);
}

}  // namespace

TEST_SUITE("operators") {
  TEST_CASE("D annihilates constants exactly") {
    const OperatorMatrix D = frac_derivative_operator(kD(0.3));
    const Vector d1 = D.matrix * Vector::Ones(D.matrix.rows());
    CHECK(d1.cwiseAbs().maxCoeff() <= 1e-12 * D.matrix.cwiseAbs().maxCoeff());
    const GridFunction g = apply_frac_derivative(kD(0.3), GridFunction::constant(line()->size(), 3.0));
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.is_valid(i)) CHECK(g.values[static_cast<Eigen::Index>(i)] == 0.0);
  }

  TEST_CASE("apply and matrix routes agree") {
    const Vector f = bump(*line(), 1.0, 3.0);
    const GridFunction viaApply = apply_bessel(kJ(0.3), GridFunction(f));
    const Vector viaMatrix = bessel_operator(kJ(0.3)).matrix * f;
    const GridFunction dApply = apply_frac_derivative(kD(0.3), GridFunction(f));
    const Vector dMatrix = frac_derivative_operator(kD(0.3)).matrix * f;
    for (std::size_t i = 0; i < line()->size(); ++i) {
      if (!viaApply.is_valid(i)) continue;
      const auto e = static_cast<Eigen::Index>(i);
      CHECK(viaApply.values[e] == doctest::Approx(viaMatrix[e]).epsilon(1e-12).scale(1e-14));
      CHECK(dApply.values[e] == doctest::Approx(dMatrix[e]).epsilon(1e-10).scale(1e-12));
    }
  }

  TEST_CASE("power iteration agrees with a dense SVD") {
    const PotentialKernel& J = kJ(0.3);
    const OperatorMatrix R = residual_operator(bessel_operator(J), frac_derivative_operator(kD(0.3)));
    const auto rows = mask_indices(J.row_valid, J.size());
    const auto m = static_cast<Eigen::Index>(rows.size());
    Matrix Rg(m, m);
    Vector wg(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      wg[a] = line()->weight(rows[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < m; ++b)
        Rg(a, b) = R.matrix(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(a)]),
                            static_cast<Eigen::Index>(rows[static_cast<std::size_t>(b)]));
    }
    ContractionOptions opt;
    opt.max_iterations = 5000;
    opt.rayleigh_tol = 1e-12;
    const ContractionReport c = contraction_norm(J, kD(0.3), 2.0, opt);
    const double exact = svd_norm(Rg, wg);
    CHECK(c.method == "power_iteration");
    CHECK(c.guarded_size == rows.size());
    CHECK(c.estimate <= exact * (1 + 1e-9));
    CHECK(c.estimate == doctest::Approx(exact).epsilon(0.02));
  }

  TEST_CASE("norm estimates on matrices with known norms") {
    Matrix A = Matrix::Zero(4, 4);
    A.diagonal() << 0.5, -2.0, 1.0, 0.25;
    const Vector w = Vector::Constant(4, 0.3);
    CHECK(matrix_norm_estimate(A, w, 2.0).estimate == doctest::Approx(2.0).epsilon(1e-6));
    // Diagonal maps have weighted l^p norm max |d| for every p; probes bound it from below.
    const ContractionReport p3 = matrix_norm_estimate(A, w, 3.0);
    CHECK(p3.method == "random_probe_lower_bound");
    CHECK(p3.estimate <= 2.0 + 1e-12);
    CHECK(p3.estimate >= 1.0);
    CHECK_THROWS_AS(matrix_norm_estimate(A, w, 1.0), Error);
  }

  TEST_CASE("contraction grows with alpha and stays below one") {
    double prev = 0.0;
    for (double a : {0.05, 0.1, 0.2, 0.4}) {
      const double est = contraction_norm(kJ(a), kD(a), 2.0).estimate;
      CHECK(est < 1.0);
      CHECK(est >= prev);
      prev = est;
    }
  }

  TEST_CASE("Neumann inversion recovers g0") {
    const Vector g0 = bump(*line(), -1.0, 2.5) - 0.5 * bump(*line(), 2.0, 1.5);
    const Vector f = bessel_operator(kJ(0.05)).matrix * g0;
    const InversionResult r = invert_bessel(kJ(0.05), kD(0.05), GridFunction(f), 1e-13);
    const Vector w = line()->weights();
    const double err = std::sqrt(((r.g.values - g0).array().square() * w.array()).sum() /
                                 (g0.array().square() * w.array()).sum());
    CHECK(err < 1e-3);
    CHECK(r.contraction < 1.0);
    for (std::size_t k = 1; k < r.increments.size(); ++k) CHECK(r.increments[k] < r.increments[k - 1]);
    CHECK_THROWS_AS(invert_bessel(kJ(0.05), kD(0.05), GridFunction(f), 1e-300, 1), Error);
  }

  TEST_CASE("Q_t representations agree with the kernels") {
    const GridFunction f(bump(*line(), 0.0, 3.0));
    const PropertyReport r = q_representation_check(ai(), kJ(0.3), kD(0.3), f, 0.03);
    CHECK(r.pass());
    // Nonzero outside the guarded rows is refused.
    CHECK_THROWS_AS(q_representation_check(ai(), kJ(0.3), kD(0.3), GridFunction::constant(line()->size(), 1.0)),
                    Error);
  }

  TEST_CASE("T_{alpha,v} annihilates constants on both sides") {
    const auto sp = build_line_space(30.0, 1201);
    const AICollection a(sp, ScaleGrid::octave_aligned(0.0125, 8.0, 4));
    for (double v : {0.25, 1.0, 4.0}) {
      const PropertyReport r = t_alpha_v_kernel(a, 0.3, v, 0.5);
      CHECK(r.at("T1_zero").constant <= 1e-6);
      CHECK(r.at("Tstar1_zero").constant <= 1e-6);
      CHECK(std::isfinite(r.at("size_bound_constant").constant));
      CHECK(r.at("support_outside_max").pass);
    }
    // v must sit on the grid.
    CHECK_THROWS_AS(t_alpha_v_kernel(a, 0.3, 3.0, 0.5), Error);
  }
}
