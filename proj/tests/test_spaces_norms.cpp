#include "doctest.h"

#include "ahlfors/operators.hpp"
#include "ahlfors/spaces_norms.hpp"

#include <cmath>
#include <random>

using namespace ahlfors;

namespace {

SpacePtr line() {
  static const SpacePtr sp = build_line_space(10.0, 401);
  return sp;
}

GridFunction coordinate_function(const MetricMeasureSpace& sp, double (*fn)(double)) {
  Vector v(static_cast<Eigen::Index>(sp.size()));
  for (std::size_t i = 0; i < sp.size(); ++i) v[static_cast<Eigen::Index>(i)] = fn(sp.coord(i, 0));
  return GridFunction(v);
}

}  // namespace

TEST_SUITE("spaces_norms") {
  TEST_CASE("maximal function dominates |f| and fixes constants") {
    const auto& sp = *line();
    const GridFunction one = GridFunction::constant(sp.size(), 1.0);
    const GridFunction M1 = maximal_function(sp, one);
    for (std::size_t i = 0; i < sp.size(); ++i) CHECK(M1.values[static_cast<Eigen::Index>(i)] == doctest::Approx(1.0));
    const GridFunction f = coordinate_function(sp, [](double x) { return std::sin(x); });
    const GridFunction Mf = maximal_function(sp, f);
    for (std::size_t i = 0; i < sp.size(); ++i)
      CHECK(Mf.values[static_cast<Eigen::Index>(i)] >= std::abs(f.values[static_cast<Eigen::Index>(i)]) - 1e-15);
  }

  TEST_CASE("modulus of continuity of a linear function against its closed form") {
    // avg over |y - x| < t of |x - y|^p is t^p / (p + 1) on the line.
    const SpacePtr owner = build_line_space(10.0, 2001);
    const auto& sp = *owner;
    const GridFunction f = coordinate_function(sp, [](double x) { return x; });
    for (double p : {1.0, 2.0}) {
      const double t = 1.0;
      double mass = 0.0;
      for (std::size_t i = 0; i < sp.size(); ++i)
        if (sp.boundary_distance(i) >= t) mass += sp.weight(i);
      const double expect = std::pow(mass * std::pow(t, p) / (p + 1), 1 / p);
      CHECK(modulus_of_continuity(sp, f, p, t) == doctest::Approx(expect).epsilon(0.02));
      CHECK(modulus_slope(sp, f, p, 0.05, 1.0).slope == doctest::Approx(1.0).epsilon(0.03));
    }
    CHECK_THROWS_AS(modulus_of_continuity(sp, f, 2.0, 0.1 * sp.resolution()), Error);
  }

  TEST_CASE("Lipschitz and Hajlasz constants of simple functions") {
    const auto& sp = *line();
    const GridFunction f = coordinate_function(sp, [](double x) { return 3 * x; });
    CHECK(lipschitz_seminorm(sp, f, 1.0) == doctest::Approx(3.0));
    const GridFunction g = difference_quotient_gradient(sp, f, 1.0);
    const double c = hajlasz_constant(sp, f, g, 1.0);
    CHECK(c <= 1.0 + 1e-12);
    CHECK(c >= 0.5 - 1e-12);
    CHECK(std::isinf(hajlasz_constant(sp, f, GridFunction::constant(sp.size(), 0.0), 1.0)));
    const GridFunction k = GridFunction::constant(sp.size(), 2.0);
    CHECK(lipschitz_seminorm(sp, k, 0.5) == 0.0);
    CHECK(besov_double_integral(sp, k, 0.3, 2.0) == 0.0);
  }

  TEST_CASE("Besov norm of a constant is its Lp norm") {
    const auto& sp = *line();
    const GridFunction k = GridFunction::constant(sp.size(), 1.5);
    CHECK(besov_norm(sp, k, 0.3, 2.0, 2.0) == doctest::Approx(lp_norm(sp, k, 2.0)));
  }

  TEST_CASE("test functions evaluate from coordinates, batteries are seeded") {
    const auto& sp = *line();
    const auto a = smooth_battery(sp, {}, 4, 9, 0.5, 1.5);
    const auto b = smooth_battery(sp, {}, 4, 9, 0.5, 1.5);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i].evaluate(sp) - b[i].evaluate(sp)).norm() == 0.0);
    TestFunction pb;
    TestFunction::Term t;
    t.shape = TestFunction::Shape::power_bump;
    t.center = {0.0};
    t.radius = 2.0;
    t.beta = 0.5;
    pb.terms.push_back(t);
    const Vector v = pb.evaluate(sp);
    const std::size_t c = sp.nearest_point({0.0});
    CHECK(v[static_cast<Eigen::Index>(c)] == doctest::Approx(std::sqrt(2.0)));
    CHECK(v.minCoeff() >= 0.0);
    const Vector cell = random_cell_function(sp, 10, 3).evaluate(sp);
    CHECK(cell.cwiseAbs().maxCoeff() <= 1.0);
  }

  TEST_CASE("improvement and embedding hypotheses are enforced") {
    const AICollection ai(line(), default_scale_grid(*line(), 12));
    const PotentialKernel kJ = bessel_kernel(ai, 0.6);
    CHECK_THROWS_AS(improvement_experiment(kJ, nullptr, ImprovementFamily::lipschitz, 0.5, 2.0), Error);
    // N / alpha = 1.67 < 2: p = 2 is supercritical, not subcritical.
    CHECK_THROWS_AS(sobolev_embedding_experiment(kJ, nullptr, 2.0, EmbeddingRegime::subcritical), Error);
    EmbeddingOptions opt;
    opt.battery = 6;
    const PropertyReport r = sobolev_embedding_experiment(kJ, nullptr, 2.0, EmbeddingRegime::automatic, opt);
    CHECK(r.find("holder_ratio") != nullptr);
    CHECK(std::isfinite(r.at("sup_ratio").constant));
  }

  TEST_CASE("J g for a bounded g gains alpha orders of regularity in E_p") {
    const AICollection ai(line(), default_scale_grid(*line(), 12));
    const PotentialKernel kJ = bessel_kernel(ai, 0.3);
    const GridFunction g(random_cell_function(*line(), 40, 1).evaluate(*line()));
    const GridFunction Jg = apply_bessel(kJ, g);
    const double h = line()->resolution();
    for (double p : {1.0, 2.0}) CHECK(modulus_slope(*line(), Jg, p, 2 * h, 20 * h, kJ.row_valid).slope >= 0.25);
  }

  TEST_CASE("improvement family names round trip") {
    for (auto f : {ImprovementFamily::lipschitz, ImprovementFamily::besov, ImprovementFamily::hajlasz})
      CHECK(parse_improvement_family(to_string(f)) == f);
    CHECK_THROWS_AS(parse_improvement_family("sobolev"), Error);
  }
}
