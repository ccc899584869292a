#include "doctest.h"

#include "ahlfors/space.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace ahlfors;

TEST_SUITE("space") {
  TEST_CASE("line weights are the spacing and integrate constants exactly") {
    const auto sp = build_line_space(10.0, 201);
    CHECK(sp->size() == 201);
    CHECK(sp->dim() == 1.0);
    CHECK(sp->resolution() == doctest::Approx(0.1));
    for (std::size_t i = 0; i < sp->size(); ++i) CHECK(sp->weight(i) == doctest::Approx(0.1));
    // sum of w over 201 cells of width 0.1
    CHECK(integrate(*sp, GridFunction::constant(sp->size(), 2.0)) == doctest::Approx(2.0 * 20.1));
    CHECK(sp->dist(0, 200) == doctest::Approx(20.0));
  }

  TEST_CASE("ball mass on the line is 2r in the interior") {
    const auto sp = build_line_space(10.0, 2001);
    const std::size_t c = 1000;
    for (double r : {0.5, 1.0, 3.0}) {
      double m = 0.0;
      for (std::size_t j : ball(*sp, c, r)) m += sp->weight(j);
      CHECK(m == doctest::Approx(2 * r).epsilon(0.02));
    }
  }

  TEST_CASE("metric invariants hold on every builder") {
    for (const auto& sp : {build_line_space(5.0, 101), build_plane_space(2.0, 15), build_gasket_space(3, 2),
                           build_cantor_space(3, 2)}) {
      const PropertyReport r = check_metric_invariants(*sp, 11, 2000);
      CHECK_MESSAGE(r.pass(), sp->description());
      CHECK(sp->min_separation() > 0);
      CHECK(sp->diameter() >= sp->min_separation());
    }
  }

  TEST_CASE("gasket point count formula matches the builder") {
    for (int level = 2; level <= 5; ++level)
      for (int K = 1; K <= 3; ++K) CHECK(build_gasket_space(level, K)->size() == gasket_point_count(level, K));
    CHECK(gasket_point_count(6, 3) == 1701);
    for (int level = 2; level <= 5; ++level)
      CHECK(build_cantor_space(level, 2)->size() == cantor_point_count(level, 2));
  }

  TEST_CASE("gasket weights follow the dimension log3/log2") {
    const auto sp = build_gasket_space(4, 2);
    const double N = std::log(3.0) / std::log(2.0);
    CHECK(sp->dim() == doctest::Approx(N));
    // Every cell at scale 2^{k-l} carries weight (2^{k-l})^N, so the total mass
    // of the dilate 2^K T is (2^K)^N = 3^K.
    CHECK(sp->total_mass() == doctest::Approx(std::pow(3.0, 2)));
  }

  TEST_CASE("fitted dimension: line is 1, plane is 2, gasket is log3/log2") {
    CHECK(ahlfors_fit(*build_line_space(10.0, 1001), 0.1, 5.0).pass());
    CHECK(ahlfors_fit(*build_plane_space(5.0, 61), 0.5, 2.5, 0.1).pass());
    const auto g = build_gasket_space(6, 3);
    const PropertyReport r = ahlfors_fit(*g, 0.125, 2.0, 0.06);
    CHECK(r.pass());
    CHECK(r.at("fitted_dimension_error").detail.at("fitted_dimension") ==
          doctest::Approx(std::log(3.0) / std::log(2.0)).epsilon(0.04));
  }

  TEST_CASE("guard region: valid iff margin 4t fits inside the boundary distance") {
    const auto sp = build_line_space(10.0, 201);
    const GuardRegion g(sp, 1.5);
    for (std::size_t i = 0; i < sp->size(); i += 7) {
      const double bd = sp->boundary_distance(i);
      CHECK(g.max_scale(i) == doctest::Approx(bd / 6.0));
      CHECK(g.valid(i, 0.99 * bd / 6.0));
      CHECK_FALSE(g.valid(i, 1.01 * bd / 6.0 + 1e-12));
    }
    CHECK(mask_count(g.valid_mask(1.0), sp->size()) < sp->size());
  }

  TEST_CASE("descriptor round trip, refinement and validation") {
    const SpaceDescriptor d = parse_space_descriptor(R"({"kind":"gasket","params":{"level":5,"dilations":2}})");
    CHECK(d.kind == SpaceKind::gasket);
    CHECK(d.level == 5);
    const SpaceDescriptor back = parse_space_descriptor(space_descriptor_json(d));
    CHECK(back.level == 5);
    CHECK(back.dilations == 2);
    CHECK(d.refined().level == 6);
    CHECK(parse_space_descriptor(R"({"kind":"line","n_points":11})").refined().n_points == 21);
    CHECK_THROWS_AS(parse_space_descriptor(R"({"kind":"torus"})"), Error);
  }

  TEST_CASE("weighted lp norms") {
    const auto sp = build_line_space(1.0, 3);  // points -1, 0, 1, weight 1
    GridFunction f(Vector::Constant(3, 0.0));
    f.values << 1.0, -2.0, 2.0;
    CHECK(lp_norm(*sp, f, 1.0) == doctest::Approx(5.0));
    CHECK(lp_norm(*sp, f, 2.0) == doctest::Approx(3.0));
    CHECK(lp_norm(*sp, f, kInf) == doctest::Approx(2.0));
    f.valid = {true, false, true};
    CHECK(lp_norm(*sp, f, 1.0) == doctest::Approx(3.0));
  }

  TEST_CASE("points csv has one row per point") {
    const auto sp = build_line_space(1.0, 11);
    const auto path = (std::filesystem::temp_directory_path() / "ahlfors_points_test.csv").string();
    export_points_csv(*sp, path);
    std::ifstream in(path);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 12);
    std::filesystem::remove(path);
  }
}
