// Command-line front end: `ahlfors run <config.json>` and
// `ahlfors describe <config.json>`.
#include "ahlfors/ahlfors.h"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

constexpr int kExitConfig = 2;

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path);
  if (!in) return false;
  std::stringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

int report_error(ahlfors_status s) {
  std::cerr << "error: " << ahlfors_last_error() << '\n';
  return s == AHLFORS_CONFIG_ERROR ? kExitConfig : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Potential kernels and Sobolev-type experiments on Ahlfors-regular spaces"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
  app.set_version_flag("--version", std::string(ahlfors_version()));

  std::string config_path, output_dir;
  std::int64_t seed = -1;
  auto* run = app.add_subcommand("run", "Run the experiments listed in a config");
  run->add_option("config", config_path, "Config JSON file")->required();
  run->add_option("--output-dir", output_dir, "Override output_dir");
  run->add_option("--seed", seed, "Override seed")->check(CLI::NonNegativeNumber);

  std::string describe_path;
  auto* desc = app.add_subcommand("describe", "Print the plan and size estimates without running");
  desc->add_option("config", describe_path, "Config JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (threads > 0) ahlfors_set_threads(threads);

  if (*desc) {
    std::string json;
    if (!read_file(describe_path, json)) {
      std::cerr << "error (config_error): cannot read " << describe_path << '\n';
      return kExitConfig;
    }
    char* text = nullptr;
    const ahlfors_status s = ahlfors_describe_config(json.c_str(), &text);
    if (s != AHLFORS_OK) return report_error(s);
    std::cout << text;
    ahlfors_string_free(text);
    return 0;
  }

  std::string json;
  if (!read_file(config_path, json)) {
    std::cerr << "error (config_error): cannot read " << config_path << '\n';
    return kExitConfig;
  }
  int exit_code = 0;
  char* failing = nullptr;
  const ahlfors_status s = ahlfors_run_config(json.c_str(), output_dir.empty() ? nullptr : output_dir.c_str(),
                                              seed, &exit_code, &failing);
  if (s != AHLFORS_OK) return report_error(s);
  if (exit_code != 0 && failing) std::cerr << "failing checks:\n" << failing;
  if (exit_code == 0) std::cout << "all checks passed\n";
  ahlfors_string_free(failing);
  return exit_code;
}
