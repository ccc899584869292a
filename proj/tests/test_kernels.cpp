#include "doctest.h"

#include "ahlfors/kernels.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace ahlfors;

namespace {

SpacePtr line() {
  static const SpacePtr sp = build_line_space(10.0, 401);
  return sp;
}

const AICollection& ai12() {
  static const AICollection ai(line(), default_scale_grid(*line(), 12));
  return ai;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("bessel scale weight integrates to one in closed form") {
    // int_a^b alpha t^alpha / (1 + t^alpha)^2 dt/t = 1/(1+a^alpha) - 1/(1+b^alpha)
    for (double a : {0.1, 0.3, 0.7}) {
      double acc = 0.0;
      const int n = 200000;
      const double lo = std::log(1e-3), hi = std::log(1e3), h = (hi - lo) / n;
      for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += w * h * scale_weight(KernelKind::bessel, a, std::exp(lo + i * h));
      }
      const double exact = 1 / (1 + std::pow(1e-3, a)) - 1 / (1 + std::pow(1e3, a));
      CHECK(acc == doctest::Approx(exact).epsilon(1e-8));
    }
  }

  TEST_CASE("weight quadrature error falls like the square of the log step") {
    const double a = 0.3;
    const double e12 = std::abs(1 - bessel_weight_quadrature(ScaleGrid::log_spaced(0.01, 50.0, 12), a));
    const double e24 = std::abs(1 - bessel_weight_quadrature(ScaleGrid::log_spaced(0.01, 50.0, 24), a));
    CHECK(e12 <= 1e-3);
    CHECK(e24 / e12 == doctest::Approx(0.25).epsilon(0.1));
  }

  TEST_CASE("kernel equals the weighted sum of the s matrices") {
    const AICollection& ai = ai12();
    KernelOptions opt;
    opt.closures = false;
    const PotentialKernel k = bessel_kernel(ai, 0.3, opt);
    const std::size_t n = ai.space().size();
    for (std::size_t x = 0; x < n; x += 37)
      for (std::size_t y = 0; y < n; y += 11) {
        double acc = 0.0;
        for (std::size_t j = 0; j < ai.scale_count(); ++j)
          acc += ai.grid().trapezoid_weight(j) * scale_weight(KernelKind::bessel, 0.3, ai.t(j)) * ai.s(j).coeff(x, y);
        CHECK(k(x, y) == doctest::Approx(acc).epsilon(1e-12).scale(1e-14));
      }
  }

  TEST_CASE("bessel rows sum to one within the quadrature budget") {
    const PotentialKernel k = bessel_kernel(ai12(), 0.3);
    CHECK(k.quadrature_budget <= 1e-3);
    CHECK(k.head_exact);
    CHECK(k.tail_exact);
    const Vector rs = k.matrix * line()->weights();
    CHECK((rs.array() - 1.0).abs().maxCoeff() <= k.quadrature_budget + 1e-12);
  }

  TEST_CASE("kernel entries converge as the scale grid is refined") {
    const AICollection fine(line(), default_scale_grid(*line(), 48));
    const PotentialKernel k12 = bessel_kernel(ai12(), 0.3), k48 = bessel_kernel(fine, 0.3);
    const auto rows = mask_indices(k12.row_valid, k12.size());
    double worst = 0.0;
    for (std::size_t x : rows)
      for (std::size_t y = 0; y < k12.size(); ++y)
        worst = std::max(worst, std::abs(k12(x, y) - k48(x, y)) / k48(x, y));
    CHECK(worst <= 0.01);
  }

  TEST_CASE("frac_deriv kernel: zero diagonal, symmetric, two-sided bound over a decade") {
    const PotentialKernel n = frac_deriv_kernel(ai12(), 0.3);
    CHECK(n.matrix.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK((n.matrix - n.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * n.matrix.cwiseAbs().maxCoeff());
    const PropertyReport r = verify_kernel_lemmas(n);
    CHECK(r.at("two_sided_ratio_one_decade").pass);
  }

  TEST_CASE("frac_deriv near-field exponent is -(N + alpha)") {
    const PotentialKernel n = frac_deriv_kernel(ai12(), 0.3);
    const ExponentFit f = fit_decay_exponent(n, 4 * line()->resolution(), 0.5, -1.3, 0.07, "decay", "near");
    CHECK(f.pass);
    CHECK(f.samples >= 3);
  }

  TEST_CASE("riesz dominates bessel entrywise once both are truncated") {
    KernelOptions opt;
    opt.closures = false;
    const PropertyReport r = check_domination(riesz_kernel(ai12(), 0.3, opt), bessel_kernel(ai12(), 0.3, opt));
    CHECK(r.pass());
  }

  TEST_CASE("riesz needs alpha < N and every kernel needs alpha > 0") {
    CHECK_THROWS_AS(riesz_kernel(ai12(), 1.2), Error);
    CHECK_THROWS_AS(bessel_kernel(ai12(), 0.0), Error);
  }

  TEST_CASE("kernel csv export") {
    const PotentialKernel k = bessel_kernel(ai12(), 0.3);
    const auto path = (std::filesystem::temp_directory_path() / "ahlfors_kernel_test.csv").string();
    export_kernel_csv(k, path, 100);
    std::ifstream in(path);
    std::string header, line;
    std::getline(in, header);
    CHECK(header == "i,j,value");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 5 * k.size());
    std::filesystem::remove(path);
  }
}
