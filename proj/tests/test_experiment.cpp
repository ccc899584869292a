#include "doctest.h"

#include "ahlfors/experiment.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ahlfors;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error_message(const std::string& json) {
  try {
    parse_config(json);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config_error);
    return e.what();
  }
  FAIL("no error raised");
  return {};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ahlfors_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("defaults and round trip") {
    const ExperimentConfig cfg = parse_config("{}");
    CHECK(cfg.alphas == std::vector<double>{0.3});
    CHECK(cfg.tolerances.calderon == 0.02);
    CHECK(cfg.experiments.empty());
    const ExperimentConfig back = parse_config(config_json(cfg));
    CHECK(back.alphas == cfg.alphas);
    CHECK(back.space.n_points == cfg.space.n_points);
    CHECK(back.tolerances.tav_ratio == cfg.tolerances.tav_ratio);
  }

  TEST_CASE("validation names the offending field") {
    CHECK(config_error_message(R"({"alphas":[0.3,1.5]})").find("alphas[1]") != std::string::npos);
    CHECK(config_error_message(R"({"ps":[1.0]})").find("ps[0]") != std::string::npos);
    CHECK(config_error_message(R"({"experiments":["nope"]})").find("experiments[0]") != std::string::npos);
    CHECK(config_error_message(R"({"tolerances":{"calderon":-1}})").find("tolerances.calderon") != std::string::npos);
    CHECK(config_error_message(R"({"tolerances":{"foo":1}})").find("tolerances.foo") != std::string::npos);
    CHECK(config_error_message(R"({"bogus":1})").find("bogus") != std::string::npos);
    CHECK(config_error_message(R"({"space":{"kind":"line","n_points":2}})").find("n_points") != std::string::npos);
    CHECK(config_error_message("{not json").find("JSON") != std::string::npos);
  }

  TEST_CASE("describe reports sizes from the descriptor alone") {
    ExperimentConfig cfg = parse_config(
        R"({"space":{"kind":"line","half_length":10,"n_points":2001},"alphas":[0.1,0.2,0.3]})");
    const std::string text = describe(cfg);
    CHECK(text.find("points: 2001") != std::string::npos);
    // 3 kinds x 3 alphas x 2001^2
    CHECK(text.find("kernel entries: 3.6036e+07") != std::string::npos);
    cfg = parse_config(R"({"space":{"kind":"gasket","level":6,"dilations":3}})");
    CHECK(describe(cfg).find("points: 1701") != std::string::npos);
  }

  TEST_CASE("empty experiment list writes nothing") {
    ExperimentConfig cfg;
    cfg.output_dir = scratch("empty").string();
    const RunResult r = run_experiments(cfg);
    CHECK(r.exit_code == 0);
    CHECK(r.files.empty());
    CHECK_FALSE(fs::exists(cfg.output_dir));
  }

  TEST_CASE("fixed seed gives byte-identical outputs") {
    const std::string json = R"({"space":{"kind":"line","half_length":10,"n_points":201},
                                 "alphas":[0.1,0.3],"experiments":["contraction","invert","improvement"]})";
    ExperimentConfig a = parse_config(json), b = parse_config(json);
    a.output_dir = scratch("det_a").string();
    b.output_dir = scratch("det_b").string();
    const RunResult ra = run_experiments(a), rb = run_experiments(b);
    REQUIRE(ra.files.size() == rb.files.size());
    CHECK(ra.exit_code == rb.exit_code);
    for (std::size_t i = 0; i < ra.files.size(); ++i) {
      const fs::path pa = ra.files[i], pb = rb.files[i];
      CHECK(pa.filename() == pb.filename());
      CHECK_MESSAGE(slurp(pa) == slurp(pb), pa.filename().string());
    }
    CHECK(fs::exists(fs::path(a.output_dir) / "report_contraction.json"));
    CHECK(fs::exists(fs::path(a.output_dir) / "data_contraction_sweep.csv"));
  }

  TEST_CASE("report json carries checks and the pass flag; failures give exit 1") {
    ExperimentConfig cfg = parse_config(R"({"space":{"kind":"line","half_length":10,"n_points":201},
                                            "experiments":["verify-ai"],"tolerances":{"calderon":1e-9}})");
    cfg.output_dir = scratch("fail").string();
    const RunResult r = run_experiments(cfg);
    CHECK(r.exit_code == 1);
    REQUIRE_FALSE(r.failing.empty());
    bool calderon = false;
    for (const auto& f : r.failing) calderon = calderon || f.find("calderon") != std::string::npos;
    CHECK(calderon);
    const auto report = nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "report_verify-ai.json"));
    CHECK(report["experiment"] == "verify-ai");
    CHECK(report["pass"] == false);
    CHECK(report["reports"].size() >= 3);
  }
}
