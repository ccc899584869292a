#include "doctest.h"

#include "ahlfors/euclid_ref.hpp"

#include <cmath>
#include <random>

using namespace ahlfors;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_SUITE("euclid_ref") {
  TEST_CASE("FFT round trip on an odd-sized grid") {
    const PeriodicGrid g(7.0, 105);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    Vector f(105);
    for (Eigen::Index i = 0; i < 105; ++i) f[i] = nd(rng);
    CHECK((g.inverse(g.forward(f)) - f).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(g.frequency(1) == doctest::Approx(1.0 / 7.0));
    CHECK(g.frequency(104) == doctest::Approx(-1.0 / 7.0));
  }

  TEST_CASE("classical multipliers act on trigonometric eigenfunctions") {
    const double P = 10.0;
    const PeriodicGrid g(P, 256);
    const int m = 3;
    const double xi = m / P;
    Vector f(256);
    for (Eigen::Index i = 0; i < 256; ++i) f[i] = std::sin(2 * kPi * xi * g.spacing() * static_cast<double>(i));
    const double a = 0.3;
    const Vector Df = classical_frac_derivative(g, f, a);
    const Vector Jf = classical_bessel(g, f, a);
    CHECK((Df - std::pow(2 * kPi * xi, a) * f).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((Jf - std::pow(1 + 4 * kPi * kPi * xi * xi, -a / 2) * f).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(classical_frac_derivative(g, Vector::Ones(256), a).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("multiplier sandwich holds at every frequency") {
    for (double a : {0.1, 0.3, 0.9}) CHECK(multiplier_sandwich(PeriodicGrid(20.0, 4096), a).pass());
  }

  TEST_CASE("profile phi is a probability density supported in |u| < 4") {
    double mass = 0.0;
    const double h = 1e-3;
    for (double u = -4.5; u < 4.5; u += h) mass += profile_phi(u + h / 2) * h;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(profile_phi(4.01) == 0.0);
    CHECK(profile_phi(0.0) == doctest::Approx(0.348052).epsilon(1e-4));
  }

  TEST_CASE("Riesz normalization against a direct integral") {
    // Plane waves give (2 pi)^a / C = int (1 - cos(2 pi u)) / |u|^(1 + a) du over the line.
    const double a = 0.3;
    auto f = [a](double u) { return (1 - std::cos(2 * kPi * u)) / std::pow(u, 1 + a); };
    double acc = 0.0;
    const int n = 400000;
    const double hi = 400.0, h = hi / n;
    for (int i = 0; i < n; ++i) acc += f((i + 0.5) * h) * h;
    acc += std::pow(hi, -a) / a;  // tail, where 1 - cos averages to 1
    CHECK(riesz_normalization(a) == doctest::Approx(std::pow(2 * kPi, a) / (2.0 * acc)).epsilon(2e-3));
  }

  TEST_CASE("profile constant against a plain midpoint sum") {
    const double a = 0.3;
    double acc = 0.0;
    const int n = 2000000;
    const double h = 4.0 / n;
    for (int i = 0; i < n; ++i) {
      const double u = (i + 0.5) * h;
      acc += a * std::pow(u, a) * profile_phi(u) * h;
    }
    CHECK(profile_constant(a) == doctest::Approx(acc).epsilon(1e-4));
  }

  TEST_CASE("s is translation invariant on a uniform line") {
    const auto sp = build_line_space(10.0, 401);
    const AICollection ai(sp, default_scale_grid(*sp, 12));
    CHECK(translation_invariance(ai).pass());
  }

  TEST_CASE("sampled D_alpha is a constant multiple of the classical one") {
    const auto sp = build_line_space(10.0, 1001);
    const AICollection ai(sp, default_scale_grid(*sp, 12));
    const PotentialKernel kD = frac_deriv_kernel(ai, 0.3);
    const auto battery = smooth_battery(*sp, kD.row_valid, 3, 4, 0.6, 1.2, 1);
    const PropertyReport r = euclidean_consistency(kD, aligned_grid(*sp, 16), battery);
    CHECK(r.at("fitted_C_spread").pass);
    CHECK(r.at("quadrature_relative_error").pass);
  }
}
