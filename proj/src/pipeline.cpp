#include "stresslab/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <tuple>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "stresslab/baselines.hpp"
#include "stresslab/csv.hpp"
#include "stresslab/diagnostics.hpp"
#include "stresslab/error.hpp"
#include "stresslab/factor_model.hpp"
#include "stresslab/hash.hpp"
#include "stresslab/ingest.hpp"
#include "stresslab/llm_gateway.hpp"
#include "stresslab/plausibility.hpp"
#include "stresslab/provenance.hpp"
#include "stresslab/report.hpp"
#include "stresslab/retrieval.hpp"
#include "stresslab/rng.hpp"
#include "stresslab/synthetic.hpp"

namespace fs = std::filesystem;

namespace stresslab::pipeline {

namespace {

const std::string kHeadlineQuery = " economy";
constexpr const char* kHeadlineStart = "2025-09-01T00:00:00Z";
constexpr const char* kHeadlineEnd = "2025-09-30T23:59:59Z";
constexpr const char* kUnconditional = "unconditional_2000_2025";
constexpr const char* kCalm = "calm_2012_2019";

void log(const Options& opt, const std::string& stage, const std::string& msg) {
  if (!opt.quiet) std::cerr << "[" << stage << "] " << msg << "\n";
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw MissingArtifactError("cannot write " + p.string());
  out << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Path of an upstream artifact; throws naming the manifest entry and producing stage.
fs::path require(const Options& opt, const std::string& rel, const std::string& stage) {
  fs::path p = opt.out_dir / rel;
  if (!fs::exists(p)) {
    throw MissingArtifactError("missing artifact '" + rel + "' (produced by the '" + stage + "' stage)");
  }
  return p;
}

Json read_json(const fs::path& p) {
  try {
    return Json::parse(read_text(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("CSV column '" + name + "' not found");
    return static_cast<std::size_t>(it - header.begin());
  }
};

Table read_table(const fs::path& p) {
  auto rows = csv::read_file(p);
  Table t;
  if (rows.empty()) throw ParseError(p.string() + ": empty CSV");
  t.header = rows.front().fields;
  for (std::size_t i = 1; i < rows.size(); ++i) t.rows.push_back(std::move(rows[i].fields));
  return t;
}

std::vector<bool> levels(bool enabled) { return enabled ? std::vector<bool>{false, true} : std::vector<bool>{false}; }

plausibility::ShockConvention convention(const RunConfig& cfg) {
  return {cfg.rates_are_levels, cfg.growth_inflation_are_levels};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string b(bool v) { return v ? "1" : "0"; }

std::vector<std::string> selected_portfolios(const Options& opt) {
  if (opt.portfolios == "A") return {"A"};
  if (opt.portfolios == "B") return {"B"};
  if (opt.portfolios == "both") return {"A", "B"};
  throw ConfigError("--portfolio must be A, B or both");
}

// --- shared loaders -------------------------------------------------------------------

std::vector<ingest::CountryBaseline> load_weo_out(const Options& opt) {
  return ingest::weo_from_json(read_json(require(opt, "ingest/weo.json", "ingest")));
}

ingest::ReturnPanel load_returns(const Options& opt) {
  return ingest::log_returns(ingest::load_prices(require(opt, "ingest/prices.csv", "ingest")));
}

std::map<std::string, risk::Portfolio> load_portfolios(const Options& opt) {
  const Json j = read_json(require(opt, "factors/portfolios.json", "fit-factors"));
  std::map<std::string, risk::Portfolio> out;
  for (const auto& [id, weights] : j.items()) {
    risk::Portfolio p{id, {}};
    for (const auto& w : weights) p.weights.emplace_back(w.at(0).get<std::string>(), w.at(1).get<double>());
    p.validate();
    out.emplace(id, std::move(p));
  }
  return out;
}

std::string matrix_csv(const std::vector<std::string>& assets, const Eigen::MatrixXd& m) {
  std::string out = "asset";
  for (const auto& a : assets) out += "," + a;
  out += "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out += assets[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m.cols(); ++c) out += "," + csv::num(m(r, c), 17);
    out += "\n";
  }
  return out;
}

Eigen::MatrixXd read_matrix_csv(const fs::path& p, std::vector<std::string>& assets) {
  Table t = read_table(p);
  assets.assign(t.header.begin() + 1, t.header.end());
  const auto n = static_cast<Eigen::Index>(assets.size());
  if (static_cast<Eigen::Index>(t.rows.size()) != n) throw ParseError(p.string() + ": matrix is not square");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = std::stod(t.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c) + 1]);
  }
  return m;
}

struct GridContext {
  std::vector<ingest::CountryBaseline> weo;
  std::unique_ptr<retrieval::FlatIndex> index;
  retrieval::HashEmbedder embedder;
  llm::GridInputs inputs;
};

std::unique_ptr<GridContext> load_grid_context(const Options& opt) {
  auto ctx = std::make_unique<GridContext>();
  ctx->weo = load_weo_out(opt);
  ctx->index = std::make_unique<retrieval::FlatIndex>(
      retrieval::FlatIndex::load(require(opt, "index/profiles.flat", "index")));
  const Json heads = read_json(require(opt, "index/headlines_selected.json", "index"));
  for (const auto& [c, titles] : heads.items()) ctx->inputs.headlines[c] = titles.get<std::vector<std::string>>();
  ctx->inputs.baselines = &ctx->weo;
  ctx->inputs.index = ctx->index.get();
  ctx->inputs.embedder = &ctx->embedder;
  return ctx;
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> kStages{"ingest",    "index",     "generate", "audit",       "fit-factors",
                                                "baselines", "envelopes", "simulate", "diagnostics", "report"};
  return kStages;
}

std::vector<Scenario> read_scenarios(const fs::path& jsonl) {
  std::ifstream in(jsonl);
  if (!in) throw MissingArtifactError("cannot read " + jsonl.string());
  std::vector<Scenario> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(jsonl.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    auto v = validate_scenario(j);
    if (!v.ok()) {
      throw ParseError(jsonl.string() + ":" + std::to_string(lineno) + ": invalid scenario (" +
                       v.violations.front().field + ": " + v.violations.front().message + ")");
    }
    out.push_back(std::move(*v.scenario));
  }
  return out;
}

void write_scenarios(const fs::path& jsonl, const std::vector<Scenario>& scenarios) {
  std::string text;
  for (const auto& s : scenarios) text += canonical_dump(to_json(s)) + "\n";
  write_text(jsonl, text);
}

// --- stages ---------------------------------------------------------------------------

void run_ingest(const RunConfig& cfg, const Options& opt) {
  const auto weo = ingest::load_weo(opt.data_dir / "weo.json");
  for (const auto& c : cfg.countries) ingest::find_baseline(weo, c);
  write_text(opt.out_dir / "config.json", canonical_dump(to_json(cfg)) + "\n");
  write_text(opt.out_dir / "ingest/weo.json", canonical_dump(ingest::to_json(weo)) + "\n");

  const auto prices = ingest::load_prices(opt.data_dir / "prices.csv");
  write_text(opt.out_dir / "ingest/prices.csv", ingest::prices_to_csv(prices));

  const auto raw = synthetic::headlines_from_json(read_json(opt.data_dir / "headlines_raw.json"));
  const std::int64_t start = parse_utc_ms(kHeadlineStart), end = parse_utc_ms(kHeadlineEnd);
  for (const auto& c : cfg.countries) {
    auto it = raw.find(c);
    std::vector<ingest::RawHeadline> rows = it == raw.end() ? std::vector<ingest::RawHeadline>{} : it->second;
    auto snap = ingest::build_headline_snapshot(c, std::move(rows), start, end, c + kHeadlineQuery);
    ingest::write_headline_snapshot(snap, opt.out_dir / "ingest/headlines");
    log(opt, "ingest", c + ": " + std::to_string(snap.real_count()) + " headlines");
  }
  log(opt, "ingest", std::to_string(prices.dates.size()) + " price dates, " + std::to_string(prices.tickers.size()) +
                         " tickers");
}

void run_index(const RunConfig& cfg, const Options& opt) {
  const auto weo = load_weo_out(opt);
  retrieval::HashEmbedder embedder;
  const auto index = retrieval::build_profile_index(weo, embedder, key_from_string(cfg.retrieval_date));
  fs::create_directories(opt.out_dir / "index");
  index.save(opt.out_dir / "index/profiles.flat");

  Json retrieval_log = Json::object(), selected = Json::object();
  for (const auto& c : cfg.countries) {
    const auto seed = retrieval::retrieval_seed(c, cfg.retrieval_date);
    const auto query = embedder.embed(retrieval::build_profile(ingest::find_baseline(weo, c)));
    const auto hits = index.top_k(query, static_cast<std::size_t>(cfg.top_k), seed);
    Json hj = Json::array();
    for (const auto& h : hits.hits) hj.push_back(Json{{"id", h.id}, {"score", h.score}});
    retrieval_log[c] = Json{{"retrieval_seed", hex64(seed)}, {"hits", hj}, {"truncated", hits.truncated}};

    const auto csv_path =
        require(opt, "ingest/headlines/" + ingest::country_slug(c) + "_headlines.csv", "ingest");
    const auto snap = ingest::read_headline_snapshot(csv_path);
    selected[c] = retrieval::select_diverse_headlines(snap, embedder, static_cast<std::size_t>(cfg.headline_k), seed);
  }
  write_text(opt.out_dir / "index/retrieval.json", canonical_dump(retrieval_log) + "\n");
  write_text(opt.out_dir / "index/headlines_selected.json", canonical_dump(selected) + "\n");
  log(opt, "index", std::to_string(index.size()) + " profiles indexed");
}

void run_generate(const RunConfig& cfg, const Options& opt) {
  const std::string spec =
      opt.provider_spec.empty() ? "fixture:" + (opt.data_dir / "llm_fixtures.jsonl").string() : opt.provider_spec;
  auto provider = llm::make_provider(spec);
  if (opt.offline && provider->requires_network()) {
    throw ConfigError("provider '" + spec + "' needs network access; rerun with --no-offline");
  }
  auto ctx = load_grid_context(opt);
  const auto grid = llm::run_grid(cfg, ctx->inputs, *provider);

  std::string attempts =
      "country,rag,use_news,prompt_variant,status,prompt_hash,ctx_hash,response_hash,scenario_hash,detail\n";
  std::vector<Scenario> candidates;
  for (const auto& a : grid.attempts) {
    attempts += csv::join({a.country, b(a.rag), b(a.use_news), a.variant, std::string(llm::to_string(a.status)),
                           a.prompt_hash, a.ctx_hash, a.response_hash,
                           a.candidate ? a.candidate->scenario_hash : std::string(), a.detail}) +
                "\n";
    if (a.candidate) candidates.push_back(*a.candidate);
  }
  write_text(opt.out_dir / "generate/attempts.csv", attempts);
  write_scenarios(opt.out_dir / "generate/candidates.jsonl", candidates);
  write_scenarios(opt.out_dir / "generate/benchmarks.jsonl", baselines::deterministic_benchmarks(ctx->weo, cfg));
  log(opt, "generate",
      std::to_string(grid.attempts.size()) + " attempts: " + std::to_string(grid.parsed) + " parsed, " +
          std::to_string(grid.malformed) + " malformed, " + std::to_string(grid.invalid) + " invalid, " +
          std::to_string(grid.failed) + " failed");
}

void run_audit(const RunConfig& cfg, const Options& opt) {
  const auto weo = load_weo_out(opt);
  auto scenarios = read_scenarios(require(opt, "generate/candidates.jsonl", "generate"));
  for (auto& s : read_scenarios(require(opt, "generate/benchmarks.jsonl", "generate"))) scenarios.push_back(std::move(s));

  plausibility::LexicalRegimeClassifier classifier;
  plausibility::AuditOptions ao{convention(cfg), cfg.accept_threshold, cfg.lambda_theta};
  std::string table =
      "scenario_hash,country,provider,prompt_variant,rag,use_news,hard_pass,violations,magnitude,coherence,structure,"
      "plausibility_score,plausibility_ok,regime_label,regime_score,lambda,d_gdp,d_inflation,d_rate\n";
  std::size_t accepted = 0;
  for (auto& s : scenarios) {
    const auto r = plausibility::audit(s, ingest::find_baseline(weo, s.country), classifier, ao);
    s = plausibility::annotate(std::move(s), r);
    accepted += r.accepted ? 1 : 0;
    std::string viol;
    for (const auto& v : r.hard_violations) viol += (viol.empty() ? "" : ";") + v;
    table += csv::join({s.scenario_hash, s.country, s.provider, s.prompt_variant, b(s.rag), b(s.use_news),
                        b(r.hard_pass), viol, csv::num(r.soft.magnitude), csv::num(r.soft.coherence),
                        csv::num(r.soft.structure), csv::num(s.plausibility_score), std::to_string(s.plausibility_ok),
                        std::string(to_string(s.regime_label)), csv::num(s.regime_score), csv::num(s.lambda),
                        csv::num(r.shock.gdp_growth), csv::num(r.shock.inflation), csv::num(r.shock.interest_rate)}) +
             "\n";
  }
  write_scenarios(opt.out_dir / "audit/scenarios.jsonl", scenarios);
  write_text(opt.out_dir / "audit/audit.csv", table);
  log(opt, "audit", std::to_string(accepted) + " of " + std::to_string(scenarios.size()) + " scenarios accepted");
}

void run_fit_factors(const RunConfig& cfg, const Options& opt) {
  const auto prices = ingest::load_prices(require(opt, "ingest/prices.csv", "ingest"));
  const auto returns = ingest::log_returns(prices);
  const std::vector<std::string> fa(factors::kFactorAssets.begin(), factors::kFactorAssets.end());
  factors::FactorModel model;
  model.pca = factors::fit_pca(returns.window(cfg.pca_window, fa), cfg.seed);

  const auto pa = risk::portfolio_a(cfg);
  const auto pb = risk::portfolio_b(cfg, prices);
  std::vector<std::string> universe;
  for (const auto* p : {&pa, &pb}) {
    for (const auto& [t, w] : p->weights) {
      if (std::find(universe.begin(), universe.end(), t) == universe.end()) universe.push_back(t);
    }
  }
  model.betas = factors::fit_betas(returns.window(cfg.pca_window, universe, true), universe,
                                   model.pca.standardized_scores(), cfg.channel_params.drift_cap_daily);
  const auto cov = risk::estimate_covariances(returns, universe, cfg.calm_window, cfg.crisis_windows);

  write_text(opt.out_dir / "factors/factor_model.json", canonical_dump(factors::to_json(model)) + "\n");
  write_text(opt.out_dir / "factors/cov_calm.csv", matrix_csv(universe, cov.calm));
  write_text(opt.out_dir / "factors/cov_crisis.csv", matrix_csv(universe, cov.crisis));
  Json pj = Json::object();
  for (const auto* p : {&pa, &pb}) {
    Json w = Json::array();
    for (const auto& [t, x] : p->weights) w.push_back(Json::array({t, x}));
    pj[p->id] = w;
  }
  write_text(opt.out_dir / "factors/portfolios.json", canonical_dump(pj) + "\n");
  log(opt, "fit-factors", "PCA eigenvalues " + csv::num(model.pca.eigenvalues(0)) + ", " +
                              csv::num(model.pca.eigenvalues(1)) + ", " + csv::num(model.pca.eigenvalues(2)) + "; " +
                              std::to_string(universe.size()) + " assets" +
                              (model.betas.ridge_fallback ? " (ridge fallback used)" : ""));
}

void run_baselines(const RunConfig& cfg, const Options& opt) {
  const auto returns = load_returns(opt);
  const auto portfolios = load_portfolios(opt);
  Json tails = Json::object();
  for (const auto& id : selected_portfolios(opt)) {
    const auto& p = portfolios.at(id);
    const auto full = baselines::portfolio_returns(returns, p, cfg.baseline_window);
    const auto calm = baselines::portfolio_returns(returns, p, cfg.calm_window);
    const auto seed = combine_keys(cfg.seed, key_from_string("baselines|" + id));
    const auto boot = baselines::bootstrap_var(full, cfg.horizon_days, cfg.bootstrap_resamples, seed);
    const auto boot_calm =
        baselines::bootstrap_var(calm, cfg.horizon_days, cfg.bootstrap_resamples, combine_keys(seed, 1));
    const auto ewma = baselines::ewma_var(full, 0.94, cfg.horizon_days);
    const auto fit = baselines::fit_garch_t(full);
    const auto garch = baselines::garch_var(fit, cfg.horizon_days, cfg.garch_paths, combine_keys(seed, 2));

    std::string table = baselines::baseline_csv_header();
    for (const auto* r : {&boot, &ewma, &garch}) table += baselines::baseline_csv_row(*r);
    write_text(opt.out_dir / ("baselines/baselines_" + id + ".csv"), table);
    tails[id] = Json{{kUnconditional, {{"var95", boot.var95}, {"cvar95", boot.cvar95}}},
                     {kCalm, {{"var95", boot_calm.var95}, {"cvar95", boot_calm.cvar95}}}};
    log(opt, "baselines", "portfolio " + id + ": bootstrap VaR " + csv::num(boot.var95, 4) + ", EWMA VaR " +
                              csv::num(ewma.var95, 4) + ", GARCH-t VaR " + csv::num(garch.var95, 4));
  }
  write_text(opt.out_dir / "baselines/baseline_tails.json", canonical_dump(tails) + "\n");
}

namespace {

baselines::BaselineResult tail_from(const Json& j) {
  baselines::BaselineResult r;
  r.method = "bootstrap";
  r.var95 = j.at("var95").get<double>();
  r.cvar95 = j.at("cvar95").get<double>();
  return r;
}

}  // namespace

void run_envelopes(const RunConfig& cfg, const Options& opt) {
  const auto returns = load_returns(opt);
  const auto portfolios = load_portfolios(opt);
  const Json tails = read_json(require(opt, "baselines/baseline_tails.json", "baselines"));
  std::string episodes = "portfolio_id,episode,blocks,var_max_block,cvar_max_block,var_quantile,cvar_quantile\n";
  std::string envelopes = "portfolio_id,episode,baseline_id,variant,var_mult,cvar_mult\n";
  for (const auto& id : selected_portfolios(opt)) {
    if (!tails.contains(id)) throw MissingArtifactError("baseline_tails.json has no entry for portfolio " + id);
    std::vector<baselines::EpisodeMetrics> eps;
    for (const auto& w : cfg.crisis_windows) {
      eps.push_back(baselines::episode_metrics(returns, portfolios.at(id), w, cfg.horizon_days));
      const auto& e = eps.back();
      episodes += csv::join({id, e.episode, std::to_string(e.blocks), csv::num(e.var_max_block),
                             csv::num(e.cvar_max_block), csv::num(e.var_quantile), csv::num(e.cvar_quantile)}) +
                  "\n";
    }
    const std::vector<baselines::NamedBaseline> named{{kUnconditional, tail_from(tails[id][kUnconditional])},
                                                      {kCalm, tail_from(tails[id][kCalm])}};
    for (const auto& env : baselines::crisis_envelopes(eps, named)) {
      envelopes += csv::join({id, env.episode, env.baseline_id, env.variant, csv::num(env.var_mult),
                              csv::num(env.cvar_mult)}) +
                   "\n";
    }
  }
  write_text(opt.out_dir / "envelopes/episodes.csv", episodes);
  write_text(opt.out_dir / "envelopes/envelopes.csv", envelopes);
  log(opt, "envelopes", "crisis envelopes written");
}

void run_simulate(const RunConfig& cfg, const Options& opt) {
  const auto weo = load_weo_out(opt);
  const auto scenarios = read_scenarios(require(opt, "audit/scenarios.jsonl", "audit"));
  const auto model = factors::factor_model_from_json(read_json(require(opt, "factors/factor_model.json", "fit-factors")));
  risk::CovariancePair cov;
  std::vector<std::string> crisis_assets;
  cov.calm = read_matrix_csv(require(opt, "factors/cov_calm.csv", "fit-factors"), cov.assets);
  cov.crisis = read_matrix_csv(require(opt, "factors/cov_crisis.csv", "fit-factors"), crisis_assets);
  if (crisis_assets != cov.assets) throw ParseError("calm and crisis covariance files list different assets");
  const auto portfolios = load_portfolios(opt);
  const Json tails = read_json(require(opt, "baselines/baseline_tails.json", "baselines"));

  risk::ChannelInputs in;
  in.model = &model;
  in.cov = &cov;
  for (const auto& id : selected_portfolios(opt)) {
    if (!tails.contains(id)) throw MissingArtifactError("baseline_tails.json has no entry for portfolio " + id);
    const auto t = tail_from(tails[id][kUnconditional]);
    in.portfolios.push_back({portfolios.at(id), kUnconditional, t.tail()});
  }

  std::string report = risk::risk_csv_header();
  struct Agg {
    std::size_t n = 0;
    std::map<risk::Channel, std::pair<double, double>> sums;
  };
  std::map<std::tuple<std::string, bool, bool, std::string>, Agg> crossrun;
  std::size_t simulated = 0;
  for (const auto& s : scenarios) {
    if (s.plausibility_ok != 1) continue;
    const auto shock = plausibility::derive_shock(s, ingest::find_baseline(weo, s.country), convention(cfg));
    const auto rows = risk::run_channels(s, shock, in, cfg, opt.channels);
    for (const auto& r : rows) {
      report += risk::risk_csv_row(r);
      auto& agg = crossrun[{s.model, s.rag, s.use_news, r.portfolio_id}];
      agg.sums[r.channel].first += r.mult.var_mult;
      agg.sums[r.channel].second += r.mult.cvar_mult;
    }
    for (const auto& p : in.portfolios) ++crossrun[{s.model, s.rag, s.use_news, p.portfolio.id}].n;
    ++simulated;
  }
  if (simulated == 0) log(opt, "simulate", "warning: no accepted scenarios; writing empty tables");

  std::string cr =
      "model,rag,use_news,portfolio_id,n,var_mult_vol,var_mult_linear,var_mult_nonlinear,cvar_mult_vol,"
      "cvar_mult_linear,cvar_mult_nonlinear\n";
  for (const auto& [key, agg] : crossrun) {
    const auto& [model_id, rag, news, pid] = key;
    std::vector<std::string> f{model_id, b(rag), b(news), pid, std::to_string(agg.n)};
    for (int part = 0; part < 2; ++part) {
      for (auto ch : {risk::Channel::vol, risk::Channel::linear, risk::Channel::nonlinear}) {
        auto it = agg.sums.find(ch);
        const double v = it == agg.sums.end() ? std::nan("")
                                               : (part == 0 ? it->second.first : it->second.second) /
                                                     static_cast<double>(agg.n);
        f.push_back(csv::num(v));
      }
    }
    cr += csv::join(f) + "\n";
  }
  write_text(opt.out_dir / "simulate/risk_report.csv", report);
  write_text(opt.out_dir / "simulate/risk_crossrun.csv", cr);

  // Per-scenario audit records.
  auto digest = [&](const std::string& rel) {
    const fs::path p = opt.out_dir / rel;
    return fs::exists(p) ? sha256_file_hex(p) : std::string();
  };
  const std::string weo_hash = digest("ingest/weo.json"), prices_hash = digest("ingest/prices.csv"),
                    pca_hash = digest("factors/factor_model.json"), calm_hash = digest("factors/cov_calm.csv"),
                    crisis_hash = digest("factors/cov_crisis.csv"), index_hash = digest("index/profiles.flat"),
                    embed_hash = retrieval::HashEmbedder().weights_hash();
  std::string records;
  for (const auto& s : scenarios) {
    Json r{{"country", s.country},
           {"horizon", "Q4-2026"},
           {"timestamp_utc", format_utc_ms(s.timestamp_utc)},
           {"weo_hash", weo_hash},
           {"headline_csv_hash", digest("ingest/headlines/" + ingest::country_slug(s.country) + "_headlines.csv")},
           {"prices_hash", prices_hash},
           {"pca_factors_hash", pca_hash},
           {"cov_calm_hash", calm_hash},
           {"cov_crisis_hash", crisis_hash},
           {"faiss_index_hash", index_hash},
           {"minilm_model_hash", embed_hash},
           {"retrieval_seed", hex64(retrieval::retrieval_seed(s.country, cfg.retrieval_date))},
           {"prompt_hash", s.prompt_hash},
           {"llm", {{"name", s.model}, {"temp", 0}, {"provider", s.provider}}},
           {"scenario_hash", s.scenario_hash},
           {"plausibility_ok", s.plausibility_ok},
           {"plausibility_score", s.plausibility_score},
           {"regime_label", std::string(to_string(s.regime_label))},
           {"regime_score", s.regime_score},
           {"lambda", s.lambda},
           {"parsed_json_hash", sha256_hex(canonical_serialize(s))}};
    records += canonical_dump(r) + "\n";
  }
  write_text(opt.out_dir / "simulate/scenario_records.jsonl", records);
  log(opt, "simulate", std::to_string(simulated) + " accepted scenarios simulated with " +
                           std::to_string(cfg.n_paths) + " paths");
}

void run_diagnostics(const RunConfig& cfg, const Options& opt) {
  const auto weo = load_weo_out(opt);
  const auto scenarios = read_scenarios(require(opt, "audit/scenarios.jsonl", "audit"));
  const Table risk_rows = read_table(require(opt, "simulate/risk_report.csv", "simulate"));

  std::map<std::string, const Scenario*> by_hash;
  std::map<std::string, MacroShock> shocks;
  std::string shock_csv = "scenario_hash,country,prompt_variant,rag,use_news,plausibility_ok,d_gdp,d_inflation,d_rate\n";
  for (const auto& s : scenarios) {
    if (s.provider == "deterministic") continue;
    by_hash[s.scenario_hash] = &s;
    const auto sh = plausibility::derive_shock(s, ingest::find_baseline(weo, s.country), convention(cfg));
    shocks[s.scenario_hash] = sh;
    shock_csv += csv::join({s.scenario_hash, s.country, s.prompt_variant, b(s.rag), b(s.use_news),
                            std::to_string(s.plausibility_ok), csv::num(sh.gdp_growth), csv::num(sh.inflation),
                            csv::num(sh.interest_rate)}) +
                 "\n";
  }
  write_text(opt.out_dir / "diagnostics/macro_shocks.csv", shock_csv);

  // Dispersion tables over accepted grid scenarios.
  auto dispersion_table = [&](bool by_country, const std::string& name, std::string& qc_log) {
    std::map<diagnostics::DispersionKey, std::vector<MacroShock>> groups;
    for (const auto& s : scenarios) {
      if (s.provider == "deterministic" || s.plausibility_ok != 1) continue;
      groups[{by_country ? s.country : s.prompt_variant, s.rag, s.use_news, s.model}].push_back(
          shocks.at(s.scenario_hash));
    }
    std::vector<diagnostics::DispersionStat> stats;
    for (const auto& [key, xs] : groups) {
      if (xs.size() < 2) continue;
      const auto seed = combine_keys(cfg.seed, key_from_string(name + "|" + key.group));
      stats.push_back(diagnostics::dispersion_stat(key, xs, cfg.ci_resamples, seed));
    }
    const auto qc = diagnostics::qc_filter(stats, cfg.qc_threshold);
    for (const auto& line : qc.removed) qc_log += name + ": " + line + "\n";
    std::string t = std::string(by_country ? "country" : "prompt_variant") +
                    ",rag,use_news,model,n,dispersion,ci_low,ci_high\n";
    for (const auto& s : qc.kept) {
      t += csv::join({s.key.group, b(s.key.rag), b(s.key.use_news), s.key.model, std::to_string(s.n),
                      csv::num(s.value), csv::num(s.ci_low), csv::num(s.ci_high)}) +
           "\n";
    }
    write_text(opt.out_dir / ("diagnostics/" + name + ".csv"), t);
  };
  std::string qc_log;
  dispersion_table(false, "dispersion_by_prompt", qc_log);
  dispersion_table(true, "stability_by_country_config", qc_log);
  write_text(opt.out_dir / "diagnostics/qc_log.txt", qc_log);

  // Risk rows joined with scenario keys.
  struct Joined {
    const Scenario* s;
    std::string portfolio;
    risk::Channel channel;
    double var_mult, cvar_mult;
  };
  std::vector<Joined> joined;
  const auto c_hash = risk_rows.col("scenario_hash"), c_pid = risk_rows.col("portfolio_id"),
             c_ch = risk_rows.col("channel"), c_vm = risk_rows.col("var_mult"), c_cm = risk_rows.col("cvar_mult");
  for (const auto& row : risk_rows.rows) {
    auto it = by_hash.find(row[c_hash]);
    if (it == by_hash.end()) continue;
    joined.push_back({it->second, row[c_pid], risk::parse_channel(row[c_ch]), std::stod(row[c_vm]), std::stod(row[c_cm])});
  }

  // Bootstrap CIs of mean multiples per (portfolio, channel, rag, news).
  std::map<std::tuple<std::string, std::string, bool, bool>, std::pair<std::vector<double>, std::vector<double>>> ci_groups;
  for (const auto& j : joined) {
    auto& g = ci_groups[{j.portfolio, std::string(risk::to_string(j.channel)), j.s->rag, j.s->use_news}];
    g.first.push_back(j.var_mult);
    g.second.push_back(j.cvar_mult);
  }
  std::string cis = "portfolio_id,channel,rag,use_news,metric,n,mean,ci_low,ci_high\n";
  for (const auto& [key, vals] : ci_groups) {
    const auto& [pid, ch, rag, news] = key;
    for (int m = 0; m < 2; ++m) {
      const auto& v = m == 0 ? vals.first : vals.second;
      if (v.size() < 2) continue;
      const auto seed = combine_keys(cfg.seed, key_from_string("ci|" + pid + ch + b(rag) + b(news) + std::to_string(m)));
      const auto ci = diagnostics::bootstrap_ci(v, cfg.ci_resamples, 0.95, seed);
      cis += csv::join({pid, ch, b(rag), b(news), m == 0 ? "var_mult" : "cvar_mult", std::to_string(v.size()),
                        csv::num(ci.mean), csv::num(ci.lo), csv::num(ci.hi)}) +
             "\n";
    }
  }
  write_text(opt.out_dir / "diagnostics/boot_cis.csv", cis);

  // ANOVA on linear-channel multiples.
  std::string anova = "metric,effect,df,ss,f_stat,p_value,partial_eta2\n";
  for (int m = 0; m < 2; ++m) {
    std::vector<diagnostics::AnovaRecord> recs;
    for (const auto& j : joined) {
      if (j.channel != risk::Channel::linear) continue;
      recs.push_back({m == 0 ? j.var_mult : j.cvar_mult, j.s->country, j.portfolio, j.s->prompt_variant, j.s->rag,
                      j.s->use_news});
    }
    const std::string metric = m == 0 ? "var_mult" : "cvar_mult";
    if (recs.size() < 3) continue;
    try {
      for (const auto& r : diagnostics::anova_eta2(recs, metric)) {
        anova += csv::join({r.metric, r.effect, std::to_string(r.df), csv::num(r.ss), csv::num(r.f_stat),
                            csv::num(r.p_value), csv::num(r.partial_eta2)}) +
                 "\n";
      }
    } catch (const NumericalError& e) {
      log(opt, "diagnostics", std::string("warning: ") + e.what());
    }
  }
  write_text(opt.out_dir / "diagnostics/anova.csv", anova);

  // Fairness cards.
  std::string fair =
      "portfolio_id,cells_total,rows_with_outcome,flips,outliers_z,outliers_mad,gap_var_linear,gap_var_nonlinear\n";
  std::set<std::string> pids;
  for (const auto& j : joined) pids.insert(j.portfolio);
  for (const auto& id : selected_portfolios(opt)) pids.insert(id);
  for (const auto& pid : pids) {
    std::map<std::string, diagnostics::CellOutcome> per_scenario;
    for (const auto& j : joined) {
      if (j.portfolio != pid) continue;
      auto& o = per_scenario[j.s->scenario_hash];
      o.country = j.s->country;
      o.prompt_variant = j.s->prompt_variant;
      o.rag = j.s->rag;
      o.use_news = j.s->use_news;
      if (j.channel == risk::Channel::linear) o.var_mult_linear = j.var_mult;
      if (j.channel == risk::Channel::nonlinear) o.var_mult_nonlinear = j.var_mult;
    }
    std::vector<diagnostics::CellOutcome> outcomes;
    for (auto& [h, o] : per_scenario) outcomes.push_back(o);
    const auto card = diagnostics::fairness_card(pid, outcomes, cfg.countries, cfg.prompt_variants, levels(cfg.rag),
                                                 levels(cfg.use_news));
    fair += csv::join({card.portfolio, std::to_string(card.cells_total), std::to_string(card.rows_with_outcome),
                       std::to_string(card.flips), std::to_string(card.outliers_z), std::to_string(card.outliers_mad),
                       csv::num(card.gap_var_linear), csv::num(card.gap_var_nonlinear)}) +
            "\n";
  }
  write_text(opt.out_dir / "diagnostics/fairness.csv", fair);
  log(opt, "diagnostics", "tables written");
}

bool run_report(const RunConfig&, const Options& opt) {
  const auto r = report::write_report(opt.out_dir);
  for (const auto& m : r.missing) log(opt, "report", "skipped figure, missing input " + m);
  log(opt, "report", std::to_string(r.figures.size()) + " figures written");
  return r.missing.empty();
}

void update_manifest(const RunConfig& cfg, const Options& opt) {
  provenance::RunManifest m;
  const fs::path existing = opt.out_dir / provenance::kManifestName;
  if (fs::exists(existing)) {
    const auto old = provenance::read_manifest(existing);
    m.run_id = old.run_id;
    m.started_utc = old.started_utc;
  } else {
    m.run_id = provenance::new_run_id();
  }
  const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  if (m.started_utc.empty()) m.started_utc = format_utc_ms(now);
  m.finished_utc = format_utc_ms(now);
  m.workspace_tag = opt.workspace_tag;
  m.model_config = Json{{"model_id", cfg.model_id},
                        {"provider", opt.provider_spec.empty() ? "fixture" : opt.provider_spec},
                        {"temperature", 0},
                        {"seed", cfg.seed},
                        {"n_paths", cfg.n_paths},
                        {"horizon_days", cfg.horizon_days}};
  m.rag = cfg.rag;
  m.use_news = cfg.use_news;
  m.entries = provenance::scan_artifacts(opt.out_dir);
  Json meta = Json::object();
  const std::map<std::string, std::string> known{{"weo_hash", "ingest/weo.json"},
                                                 {"prices_hash", "ingest/prices.csv"},
                                                 {"pca_factors_hash", "factors/factor_model.json"},
                                                 {"cov_calm_hash", "factors/cov_calm.csv"},
                                                 {"cov_crisis_hash", "factors/cov_crisis.csv"},
                                                 {"faiss_index_hash", "index/profiles.flat"},
                                                 {"config_hash", "config.json"}};
  for (const auto& [key, rel] : known) {
    for (const auto& e : m.entries) {
      if (e.path == rel) meta[key] = e.sha256;
    }
  }
  Json heads = Json::object();
  for (const auto& e : m.entries) {
    if (e.path.rfind("ingest/headlines/", 0) == 0 && e.path.size() > 4 && e.path.substr(e.path.size() - 4) == ".csv") {
      heads[e.path] = e.sha256;
    }
  }
  if (!heads.empty()) meta["headline_csv_hash"] = heads;
  meta["minilm_model_hash"] = retrieval::HashEmbedder().weights_hash();
  meta["quantile_method"] = "hyndman_fan_type7";
  meta["retrieval_seed_input"] = "sha256(<country>|<YYYY-MM-DD>), first 8 bytes big-endian";
  meta["mdd_definition"] = "mean of per-path maximum drawdowns; mdd_p95 secondary";
  m.metadata = meta;
  provenance::write_manifest(m, opt.out_dir);
}

bool run_stage(const std::string& name, const RunConfig& cfg, const Options& opt) {
  fs::create_directories(opt.out_dir);
  bool ok = true;
  if (name == "ingest") run_ingest(cfg, opt);
  else if (name == "index") run_index(cfg, opt);
  else if (name == "generate") run_generate(cfg, opt);
  else if (name == "audit") run_audit(cfg, opt);
  else if (name == "fit-factors") run_fit_factors(cfg, opt);
  else if (name == "baselines") run_baselines(cfg, opt);
  else if (name == "envelopes") run_envelopes(cfg, opt);
  else if (name == "simulate") run_simulate(cfg, opt);
  else if (name == "diagnostics") run_diagnostics(cfg, opt);
  else if (name == "report") ok = run_report(cfg, opt);
  else throw ConfigError("unknown stage '" + name + "'");
  update_manifest(cfg, opt);
  return ok;
}

bool run_all(const RunConfig& cfg, const Options& opt) {
  bool ok = true;
  for (const auto& s : stage_names()) ok = run_stage(s, cfg, opt) && ok;
  return ok;
}

RunConfig desk_config() {
  RunConfig cfg = default_config();
  cfg.countries = {"Canada", "Germany"};
  cfg.prompt_variants.assign(default_prompt_variants().begin(), default_prompt_variants().begin() + 5);
  cfg.n_paths = 2000;
  cfg.garch_paths = 5000;
  cfg.bootstrap_resamples = 20000;
  cfg.ci_resamples = 2000;
  return cfg;
}

void write_fixture_bundle(const fs::path& dir, std::uint64_t seed) {
  fs::create_directories(dir);
  const auto weo = synthetic::generate_weo();
  write_text(dir / "weo.json", canonical_dump(ingest::to_json(weo)) + "\n");
  write_text(dir / "prices.csv", ingest::prices_to_csv(synthetic::generate_prices(seed)));
  write_text(dir / "headlines_raw.json",
             synthetic::headlines_to_json(synthetic::generate_headlines(g7_countries(), seed)).dump(1) + "\n");
  RunConfig full = default_config();
  full.seed = seed;
  write_text(dir / "config.json", to_json(full).dump(2) + "\n");
  RunConfig desk = desk_config();
  desk.seed = seed;
  write_text(dir / "desk_config.json", to_json(desk).dump(2) + "\n");

  // Prompts depend on ingested and indexed inputs, so stage them in a scratch run.
  Options opt;
  opt.data_dir = dir;
  opt.out_dir = dir / ".fixture_work";
  opt.quiet = true;
  fs::remove_all(opt.out_dir);
  run_ingest(full, opt);
  run_index(full, opt);
  auto ctx = load_grid_context(opt);
  llm::SyntheticProvider provider;
  auto grid = llm::run_grid(full, ctx->inputs, provider);
  for (auto& a : grid.attempts) {
    if (a.status != llm::AttemptStatus::failed) {
      a.raw_response = a.raw_response.substr(0, a.raw_response.size() / 2);
      break;
    }
  }
  write_text(dir / "llm_fixtures.jsonl", llm::record_fixtures(grid, provider));
  fs::remove_all(opt.out_dir);
}

}  // namespace stresslab::pipeline
