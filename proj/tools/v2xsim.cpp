// v2xsim: command line front end of the sliced C-V2X highway simulator.
//
//   v2xsim run --config cfg.ini [--seed N] [--out DIR] [--trace]
//   v2xsim matrix --config cfg.ini --scenarios s1,s2,s3 --tech rsu,ns
//                 --sigmas 5,50 --seeds 5 [--out DIR]
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "v2xslice/errors.hpp"
#include "v2xslice/runner.hpp"

namespace {

v2x::SimConfig load(const std::string& path, const std::vector<std::string>& overrides) {
  v2x::SimConfig cfg = v2x::parse_config(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw v2x::ConfigError("--set expects key=value, got '" + kv + "'");
    v2x::apply_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network-sliced C-V2X highway simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;

  auto* run = app.add_subcommand("run", "simulate one configuration");
  std::uint64_t seed = 0;
  bool trace = false;
  run->add_option("--config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--trace", trace, "write debug trace CSVs");
  run->add_option("--set", overrides, "override a config key (key=value)");

  auto* matrix = app.add_subcommand("matrix", "run the scenario x technology x sigma matrix");
  std::vector<std::string> scenarios{"s1", "s2", "s3"};
  std::vector<std::string> techs{"rsu", "rsu_relay", "ns", "ns_relay"};
  std::vector<double> sigmas{5.0, 50.0};
  int seeds = 5;
  matrix->add_option("--config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
  matrix->add_option("--scenarios", scenarios, "density scenarios")->delimiter(',');
  matrix->add_option("--tech", techs, "technologies")->delimiter(',');
  matrix->add_option("--sigmas", sigmas, "similarity neighbourhood sizes in m")->delimiter(',');
  matrix->add_option("--seeds", seeds, "seeds per cell, counting up from the config seed");
  matrix->add_option("--out", out_dir, "output directory");
  matrix->add_option("--set", overrides, "override a config key (key=value)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    v2x::SimConfig cfg = load(config_path, overrides);
    if (run->parsed()) {
      if (run->count("--seed") > 0) cfg.seed = seed;
      return v2x::run_command(cfg, out_dir, trace, std::cerr);
    }
    std::vector<v2x::Technology> tech_list;
    for (const auto& t : techs) tech_list.push_back(v2x::parse_technology(t));
    return v2x::matrix_command(cfg, scenarios, tech_list, sigmas, seeds, out_dir, std::cerr);
  } catch (const v2x::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
}
