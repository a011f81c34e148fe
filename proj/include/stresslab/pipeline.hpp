#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stresslab/core.hpp"
#include "stresslab/risk_engine.hpp"

namespace stresslab::pipeline {

struct Options {
  std::filesystem::path data_dir = "data";
  std::filesystem::path out_dir = "out";
  std::string provider_spec;  // empty: fixture:<data_dir>/llm_fixtures.jsonl
  bool offline = true;
  std::string portfolios = "both";  // A, B or both
  std::vector<risk::Channel> channels{risk::Channel::vol, risk::Channel::linear, risk::Channel::nonlinear};
  std::string workspace_tag = "stresslab";
  bool quiet = false;
};

/// Stage order used by run_all.
const std::vector<std::string>& stage_names();

void run_ingest(const RunConfig& cfg, const Options& opt);
void run_index(const RunConfig& cfg, const Options& opt);
void run_generate(const RunConfig& cfg, const Options& opt);
void run_audit(const RunConfig& cfg, const Options& opt);
void run_fit_factors(const RunConfig& cfg, const Options& opt);
void run_baselines(const RunConfig& cfg, const Options& opt);
void run_envelopes(const RunConfig& cfg, const Options& opt);
void run_simulate(const RunConfig& cfg, const Options& opt);
void run_diagnostics(const RunConfig& cfg, const Options& opt);
/// Returns false when some figure inputs were missing (the rest are still written).
bool run_report(const RunConfig& cfg, const Options& opt);

/// Dispatches by stage name ("fit-factors", ...); each stage refreshes the manifest.
bool run_stage(const std::string& name, const RunConfig& cfg, const Options& opt);
/// Every stage in order.
bool run_all(const RunConfig& cfg, const Options& opt);

/// Rescans the run directory and rewrites run_artifacts_index.json, keeping the run id
/// and start time of an existing manifest.
void update_manifest(const RunConfig& cfg, const Options& opt);

std::vector<Scenario> read_scenarios(const std::filesystem::path& jsonl);
void write_scenarios(const std::filesystem::path& jsonl, const std::vector<Scenario>& scenarios);

/// Writes a synthetic input bundle (weo.json, prices.csv, headlines_raw.json,
/// config.json, desk_config.json) and records llm_fixtures.jsonl from the synthetic
/// provider over the full G7 grid. One recorded response is deliberately truncated so
/// replays exercise the malformed-output path.
void write_fixture_bundle(const std::filesystem::path& dir, std::uint64_t seed);

/// Desk-scale configuration: 2 countries, 5 variants, RAG and news toggled, 2000 paths.
RunConfig desk_config();

}  // namespace stresslab::pipeline
