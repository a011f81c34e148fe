#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "stresslab/error.hpp"
#include "stresslab/pipeline.hpp"
#include "stresslab/provenance.hpp"

namespace fs = std::filesystem;
using namespace stresslab;

namespace {

struct CommonArgs {
  std::string config;
  std::string data;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  bool offline = true;
  std::string provider;
  std::string portfolio = "both";
  std::string channel = "all";
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "Run configuration JSON")->check(CLI::ExistingFile);
  cmd->add_option("--data", a.data, "Input bundle directory (default: the config's directory, else ./data)");
  cmd->add_option("--out", a.out, "Run directory");
  cmd->add_option("--seed", a.seed, "Override the configured seed");
  cmd->add_flag("--offline,!--no-offline", a.offline, "Forbid network providers (default on)");
  cmd->add_option("--provider", a.provider, "fixture:<path>, http:<config.json> or synthetic");
  cmd->add_option("--portfolio", a.portfolio, "A, B or both")->check(CLI::IsMember({"A", "B", "both"}));
  cmd->add_option("--channel", a.channel, "vol, linear, nonlinear or all")
      ->check(CLI::IsMember({"vol", "linear", "nonlinear", "all"}));
}

std::pair<RunConfig, pipeline::Options> resolve(const CommonArgs& a) {
  RunConfig cfg = a.config.empty() ? default_config() : load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  pipeline::Options opt;
  if (!a.data.empty()) {
    opt.data_dir = a.data;
  } else if (!a.config.empty()) {
    opt.data_dir = fs::path(a.config).parent_path();
    if (opt.data_dir.empty()) opt.data_dir = ".";
  }
  opt.out_dir = a.out;
  opt.provider_spec = a.provider;
  opt.offline = a.offline;
  opt.portfolios = a.portfolio;
  if (a.channel != "all") opt.channels = {risk::parse_channel(a.channel)};
  return {cfg, opt};
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e)) return 2;
  if (dynamic_cast<const MissingArtifactError*>(&e)) return 3;
  if (dynamic_cast<const NumericalError*>(&e)) return 4;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stresslab: scenario generation, auditing and portfolio stress testing"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string selected;
  for (const auto& name : pipeline::stage_names()) {
    auto* cmd = app.add_subcommand(name, "Run the " + name + " stage");
    add_common(cmd, common);
    cmd->callback([&selected, name] { selected = name; });
  }
  auto* run = app.add_subcommand("run", "Run every stage in order");
  add_common(run, common);
  run->callback([&] { selected = "run"; });

  std::string against;
  auto* verify = app.add_subcommand("verify", "Compare the manifest of --out with another run");
  verify->add_option("--out", common.out, "Run directory")->required();
  verify->add_option("--against", against, "Second run directory or manifest file")->required();
  verify->callback([&] { selected = "verify"; });

  std::string fixture_dir = "data";
  std::uint64_t fixture_seed = 42;
  auto* fixtures = app.add_subcommand("fixtures", "Write the synthetic input bundle and recorded model responses");
  fixtures->add_option("--out", fixture_dir, "Bundle directory");
  fixtures->add_option("--seed", fixture_seed, "Generator seed");
  fixtures->callback([&] { selected = "fixtures"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (selected == "fixtures") {
      pipeline::write_fixture_bundle(fixture_dir, fixture_seed);
      std::cerr << "wrote fixture bundle to " << fixture_dir << "\n";
      return 0;
    }
    if (selected == "verify") {
      const auto a = provenance::read_manifest(common.out);
      const auto b = provenance::read_manifest(against);
      const auto r = provenance::verify_replay(a, b);
      for (const auto& m : r.mismatching) std::cout << "MISMATCH " << m << "\n";
      std::cout << r.matching.size() << " matching, " << r.mismatching.size() << " mismatching\n";
      return r.all_match() ? 0 : 1;
    }
    auto [cfg, opt] = resolve(common);
    const bool ok = selected == "run" ? pipeline::run_all(cfg, opt) : pipeline::run_stage(selected, cfg, opt);
    return ok ? 0 : 3;
  } catch (const provenance::ReplayStructureError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}
