#include "doctest.h"

#include "ahlfors/approx_id.hpp"

#include <cmath>
#include <random>

using namespace ahlfors;

namespace {

SpacePtr small_line() {
  static const SpacePtr sp = build_line_space(10.0, 401);
  return sp;
}

const AICollection& small_ai() {
  static const AICollection ai(small_line(), default_scale_grid(*small_line(), 12));
  return ai;
}

}  // namespace

TEST_SUITE("approx_id") {
  TEST_CASE("bump profile: plateau, cutoff, C^1 join") {
    CHECK(BumpProfile::value(0.0) == 1.0);
    CHECK(BumpProfile::value(0.5) == 1.0);
    CHECK(BumpProfile::value(2.0) == 0.0);
    CHECK(BumpProfile::value(3.0) == 0.0);
    double prev = 1.0;
    for (double r = 0.5; r <= 2.0; r += 0.01) {
      const double v = BumpProfile::value(r);
      CHECK(v <= prev + 1e-15);
      prev = v;
      const double h = 1e-6;
      const double fd = (BumpProfile::value(r + h) - BumpProfile::value(r - h)) / (2 * h);
      CHECK(BumpProfile::derivative(r) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
    CHECK(BumpProfile::derivative(0.5) == doctest::Approx(0.0));
    CHECK(BumpProfile::derivative(2.0) == doctest::Approx(0.0));
  }

  TEST_CASE("log grid hits both ends and has the requested density") {
    const ScaleGrid g = ScaleGrid::log_spaced(0.01, 10.0, 12);
    CHECK(g.t_min() == doctest::Approx(0.01));
    CHECK(g.t_max() == doctest::Approx(10.0));
    CHECK(g.log_step() <= std::log(10.0) / 12 + 1e-12);
    double wsum = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) wsum += g.trapezoid_weight(k);
    CHECK(wsum == doctest::Approx(std::log(1000.0)));
    const ScaleGrid o = ScaleGrid::octave_aligned(0.0125, 8.0, 4);
    CHECK(o.log_step() == doctest::Approx(std::log(2.0) / 4));
    const auto k = o.index_of(0.1);
    REQUIRE(k.has_value());
    CHECK(o.index_of(o.t(*k) * 4.0).has_value());
  }

  TEST_CASE("T_t matches a direct double loop") {
    const auto sp = build_line_space(2.0, 41);
    Vector f(41);
    for (int i = 0; i < 41; ++i) f[i] = std::sin(0.3 * i);
    const double t = 0.37;
    const Vector Tf = t_operator(*sp, t, f);
    for (std::size_t i = 0; i < sp->size(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < sp->size(); ++j)
        acc += BumpProfile::value(sp->dist(i, j) / t) * f[static_cast<Eigen::Index>(j)] * sp->weight(j);
      CHECK(Tf[static_cast<Eigen::Index>(i)] == doctest::Approx(acc / t).epsilon(1e-12));
    }
  }

  TEST_CASE("s from its defining formula at one scale") {
    // s(x,y,t) = phi(x) phi(y) t^-2N sum_z h(d(x,z)/t) h(d(z,y)/t) psi(z) w(z)
    const auto sp = build_line_space(3.0, 61);
    const AICollection ai(sp, ScaleGrid::log_spaced(0.05, 1.0, 4));
    const std::size_t k = 3;
    const double t = ai.t(k);
    const Vector ones = Vector::Ones(61);
    const Vector T1 = t_operator(*sp, t, ones);
    const Vector phi = T1.cwiseInverse();
    const Vector psi = t_operator(*sp, t, phi).cwiseInverse();
    for (std::size_t x = 0; x < 61; x += 5)
      for (std::size_t y = 0; y < 61; y += 3) {
        double acc = 0.0;
        for (std::size_t z = 0; z < 61; ++z)
          acc += BumpProfile::value(sp->dist(x, z) / t) * BumpProfile::value(sp->dist(z, y) / t) *
                 psi[static_cast<Eigen::Index>(z)] * sp->weight(z);
        const double expect = phi[static_cast<Eigen::Index>(x)] * phi[static_cast<Eigen::Index>(y)] * acc / (t * t);
        CHECK(ai.s(k).coeff(x, y) == doctest::Approx(expect).epsilon(1e-10).scale(1e-12));
      }
  }

  TEST_CASE("exact identities on guarded rows: S1 = 1, Q1 = 0, symmetry, support") {
    const AICollection& ai = small_ai();
    const auto& sp = ai.space();
    const Vector ones = Vector::Ones(static_cast<Eigen::Index>(sp.size()));
    std::size_t checked = 0;
    for (std::size_t k = 0; k < ai.scale_count(); ++k) {
      const Vector s1 = ai.apply_s(k, ones);
      const double t = ai.t(k);
      for (std::size_t i = 0; i < sp.size(); ++i) {
        if (!ai.valid(i, k)) continue;
        ++checked;
        CHECK(std::abs(s1[static_cast<Eigen::Index>(i)] - 1.0) <= 1e-12);
        ai.s(k).for_each_in_row(i, [&](std::size_t j, double v) {
          if (sp.dist(i, j) > 4 * t) CHECK(v == 0.0);
        });
      }
      CHECK(std::pow(t, sp.dim()) * ai.s(k).max_asymmetry() <= 1e-12);
      if (k > 0 && k + 1 < ai.scale_count()) {
        const Vector q1 = ai.apply_q(k, ones);
        for (std::size_t i = 0; i < sp.size(); ++i)
          if (ai.q_valid(i, k)) CHECK(std::abs(q1[static_cast<Eigen::Index>(i)]) <= 1e-8);
      }
    }
    CHECK(checked > 1000);
  }

  TEST_CASE("sparse and dense assembly agree") {
    const auto sp = build_line_space(5.0, 201);
    const ScaleGrid g = ScaleGrid::log_spaced(0.02, 3.0, 6);
    AIOptions dense, sparse;
    dense.dense_threshold = 0.0;
    sparse.dense_threshold = 1.1;
    const AICollection a(sp, g, dense), b(sp, g, sparse);
    for (std::size_t k = 0; k < g.size(); ++k) {
      CHECK(a.s(k).is_dense());
      CHECK_FALSE(b.s(k).is_dense());
      CHECK((a.s(k).to_dense() - b.s(k).to_dense()).cwiseAbs().maxCoeff() <= 1e-13);
    }
  }

  TEST_CASE("apply_q agrees with the assembled q matrix and is the centred difference") {
    const AICollection& ai = small_ai();
    const auto n = static_cast<Eigen::Index>(ai.space().size());
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    Vector f(n);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = nd(rng);
    const std::size_t k = ai.scale_count() / 2;
    const ScaleKernel q = ai.q(k);
    const Vector viaMatrix = q.apply(f.cwiseProduct(ai.space().weights()));
    const Vector viaApply = ai.apply_q(k, f);
    CHECK((viaMatrix - viaApply).cwiseAbs().maxCoeff() <= 1e-12 * (1 + viaApply.cwiseAbs().maxCoeff()));
    const double eps = ai.grid().log_step();
    const Vector centred = -(ai.apply_s(k + 1, f) - ai.apply_s(k - 1, f)) / (2 * eps);
    CHECK((centred - viaApply).cwiseAbs().maxCoeff() <= 1e-12 * (1 + centred.cwiseAbs().maxCoeff()));
    CHECK_THROWS_AS(ai.q(0), Error);
  }

  TEST_CASE("full property suite passes on the line") {
    const PropertyReport r = verify_ai_properties(small_ai());
    for (const auto& f : r.failing()) FAIL_CHECK(f);
    CHECK(r.pass());
  }

  TEST_CASE("Calderon residual small, and halves under doubling the scale density") {
    const auto sp = build_line_space(10.0, 1001);
    Vector f(static_cast<Eigen::Index>(sp->size()));
    for (std::size_t i = 0; i < sp->size(); ++i) {
      const double u = sp->coord(i, 0) / 2.0;
      f[static_cast<Eigen::Index>(i)] = std::abs(u) < 1 ? std::exp(1 - 1 / (1 - u * u)) : 0.0;
    }
    const AICollection a(sp, ScaleGrid::log_spaced(sp->resolution() / 4, 1.0, 12));
    const AICollection b(sp, ScaleGrid::log_spaced(sp->resolution() / 4, 1.0, 24));
    const PropertyReport ra = calderon_residual(a, GridFunction(f), 0.02);
    const PropertyReport rb = calderon_residual(b, GridFunction(f), 0.02);
    CHECK(ra.pass());
    CHECK(rb.at("reproducing_residual").constant <= 0.5 * ra.at("reproducing_residual").constant);
  }

  TEST_CASE("Calderon refuses an unguarded function") {
    const auto sp = build_line_space(10.0, 201);
    const AICollection a(sp, ScaleGrid::log_spaced(0.05, 1.0, 6));
    CHECK_THROWS_AS(calderon_residual(a, GridFunction::constant(sp->size(), 1.0)), Error);
  }
}
