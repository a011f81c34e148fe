#include "stresslab/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "stresslab/error.hpp"
#include "stresslab/hash.hpp"

namespace stresslab {

double MacroShock::norm() const {
  return std::sqrt(gdp_growth * gdp_growth + inflation * inflation + interest_rate * interest_rate);
}

bool MacroShock::finite() const {
  return std::isfinite(gdp_growth) && std::isfinite(inflation) && std::isfinite(interest_rate);
}

std::string_view to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::normal:
      return "normal";
    case RegimeLabel::stress:
      return "stress";
    case RegimeLabel::crisis:
      return "crisis";
  }
  return "normal";
}

std::optional<RegimeLabel> parse_regime_label(std::string_view text) {
  if (text == "normal") return RegimeLabel::normal;
  if (text == "stress") return RegimeLabel::stress;
  if (text == "crisis") return RegimeLabel::crisis;
  return std::nullopt;
}

void ChannelParams::validate() const {
  auto bad = [](const char* what) { throw ConfigError(std::string("channel_params: ") + what); };
  for (double v : {vol_kappa, drift_decay, amp_lambda, amp_rag, amp_news, drift_cap_daily, return_clip}) {
    if (!std::isfinite(v) || v < 0.0) bad("coefficients must be finite and non-negative");
  }
  if (!(drift_decay > 0.0 && drift_decay <= 1.0)) bad("drift_decay must lie in (0, 1]");
  if (!(return_clip > 0.0 && return_clip <= 1.0)) bad("return_clip must lie in (0, 1]");
}

void RunConfig::validate() const {
  if (horizon_days < 1) throw ConfigError("horizon_days must be >= 1");
  if (n_paths < 1) throw ConfigError("n_paths must be >= 1");
  if (prompt_variants.empty()) throw ConfigError("prompt_variants must be non-empty");
  std::set<std::string> uniq(prompt_variants.begin(), prompt_variants.end());
  if (uniq.size() != prompt_variants.size()) throw ConfigError("prompt_variants must be unique");
  if (countries.empty()) throw ConfigError("countries must be non-empty");
  if (top_k < 1 || headline_k < 1) throw ConfigError("top_k and headline_k must be >= 1");
  if (!(lambda_theta > 0.0)) throw ConfigError("lambda_theta must be positive");
  if (bootstrap_resamples < 1 || ci_resamples < 1 || garch_paths < 1) {
    throw ConfigError("resample and path counts must be >= 1");
  }
  double wsum = 0.0;
  for (const auto& [t, w] : portfolio_a) {
    if (w < 0.0) throw ConfigError("portfolio_a weight for " + t + " is negative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-12) throw ConfigError("portfolio_a weights must sum to 1");
  if (portfolio_b.empty()) throw ConfigError("portfolio_b must list at least one ticker");
  channel_params.validate();
}

const std::vector<std::string>& g7_countries() {
  static const std::vector<std::string> kG7{"Canada", "France", "Germany", "Italy",
                                           "Japan", "United Kingdom", "United States"};
  return kG7;
}

const std::vector<std::string>& default_prompt_variants() {
  static const std::vector<std::string> kVariants{
      "v01_global_recession", "v02_stagflation",       "v03_energy_shock",
      "v04_sovereign_debt",   "v05_housing_bust",      "v06_banking_stress",
      "v07_trade_war",        "v08_pandemic_resurgence", "v09_tech_correction",
      "v10_contagion",        "v11_currency_crisis",   "v12_commodity_slump",
      "v13_policy_error",     "v14_supply_chain",      "v15_geopolitical",
      "v16_credit_crunch",    "v17_deflation_trap",    "v18_wage_price_spiral",
      "v19_fiscal_cliff",     "v20_bond_rout",         "v21_em_spillover",
      "v22_climate_disaster", "v23_cyber_attack",      "v24_china_slowdown",
      "v25_private_credit",   "v26_liquidity_freeze",  "v27_labour_shock",
      "v28_food_inflation",   "v29_term_premium",      "v30_confidence_collapse"};
  return kVariants;
}

RunConfig default_config() {
  RunConfig cfg;
  cfg.countries = g7_countries();
  cfg.prompt_variants = default_prompt_variants();
  return cfg;
}

namespace {

Json range_to_json(const DateRange& r) { return Json{{"start", r.start.to_string()}, {"end", r.end.to_string()}}; }

DateRange range_from_json(const Json& j, const char* what) {
  try {
    return DateRange{Date::parse(j.at("start").get<std::string>()), Date::parse(j.at("end").get<std::string>())};
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid date range '") + what + "': " + e.what());
  }
}

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

RunConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg = default_config();
  read_opt(j, "countries", cfg.countries);
  read_opt(j, "model_id", cfg.model_id);
  read_opt(j, "rag", cfg.rag);
  read_opt(j, "use_news", cfg.use_news);
  read_opt(j, "prompt_variants", cfg.prompt_variants);
  read_opt(j, "horizon_days", cfg.horizon_days);
  read_opt(j, "n_paths", cfg.n_paths);
  read_opt(j, "seed", cfg.seed);
  read_opt(j, "rates_are_levels", cfg.rates_are_levels);
  read_opt(j, "growth_inflation_are_levels", cfg.growth_inflation_are_levels);
  read_opt(j, "min_history_days", cfg.min_history_days);
  read_opt(j, "accept_threshold", cfg.accept_threshold);
  read_opt(j, "lambda_theta", cfg.lambda_theta);
  read_opt(j, "top_k", cfg.top_k);
  read_opt(j, "headline_k", cfg.headline_k);
  read_opt(j, "retrieval_date", cfg.retrieval_date);
  read_opt(j, "timestamp_utc", cfg.timestamp_utc);
  read_opt(j, "bootstrap_resamples", cfg.bootstrap_resamples);
  read_opt(j, "ci_resamples", cfg.ci_resamples);
  read_opt(j, "garch_paths", cfg.garch_paths);
  read_opt(j, "qc_threshold", cfg.qc_threshold);
  read_opt(j, "portfolio_b", cfg.portfolio_b);
  if (j.contains("portfolio_a")) {
    cfg.portfolio_a.clear();
    const auto& pa = j.at("portfolio_a");
    if (!pa.is_object()) throw ConfigError("portfolio_a must be an object of ticker -> weight");
    for (auto it = pa.begin(); it != pa.end(); ++it) cfg.portfolio_a.emplace_back(it.key(), it.value().get<double>());
  }
  if (j.contains("pca_window")) cfg.pca_window = range_from_json(j.at("pca_window"), "pca_window");
  if (j.contains("calm_window")) cfg.calm_window = range_from_json(j.at("calm_window"), "calm_window");
  if (j.contains("baseline_window")) cfg.baseline_window = range_from_json(j.at("baseline_window"), "baseline_window");
  if (j.contains("crisis_windows")) {
    cfg.crisis_windows.clear();
    for (const auto& w : j.at("crisis_windows")) {
      cfg.crisis_windows.push_back({w.at("episode").get<std::string>(), range_from_json(w, "crisis_windows")});
    }
  }
  if (j.contains("channel_params")) {
    const auto& cp = j.at("channel_params");
    auto& p = cfg.channel_params;
    read_opt(cp, "vol_kappa", p.vol_kappa);
    read_opt(cp, "drift_decay", p.drift_decay);
    read_opt(cp, "amp_lambda", p.amp_lambda);
    read_opt(cp, "amp_rag", p.amp_rag);
    read_opt(cp, "amp_news", p.amp_news);
    read_opt(cp, "drift_cap_daily", p.drift_cap_daily);
    read_opt(cp, "return_clip", p.return_clip);
  }
  cfg.validate();
  return cfg;
}

Json to_json(const RunConfig& cfg) {
  Json pa = Json::object();
  for (const auto& [t, w] : cfg.portfolio_a) pa[t] = w;
  Json windows = Json::array();
  for (const auto& w : cfg.crisis_windows) {
    windows.push_back({{"episode", w.episode}, {"start", w.range.start.to_string()}, {"end", w.range.end.to_string()}});
  }
  const auto& p = cfg.channel_params;
  return Json{
      {"countries", cfg.countries},
      {"model_id", cfg.model_id},
      {"rag", cfg.rag},
      {"use_news", cfg.use_news},
      {"prompt_variants", cfg.prompt_variants},
      {"horizon_days", cfg.horizon_days},
      {"n_paths", cfg.n_paths},
      {"seed", cfg.seed},
      {"rates_are_levels", cfg.rates_are_levels},
      {"growth_inflation_are_levels", cfg.growth_inflation_are_levels},
      {"min_history_days", cfg.min_history_days},
      {"accept_threshold", cfg.accept_threshold},
      {"lambda_theta", cfg.lambda_theta},
      {"top_k", cfg.top_k},
      {"headline_k", cfg.headline_k},
      {"retrieval_date", cfg.retrieval_date},
      {"timestamp_utc", cfg.timestamp_utc},
      {"bootstrap_resamples", cfg.bootstrap_resamples},
      {"ci_resamples", cfg.ci_resamples},
      {"garch_paths", cfg.garch_paths},
      {"qc_threshold", cfg.qc_threshold},
      {"pca_window", range_to_json(cfg.pca_window)},
      {"calm_window", range_to_json(cfg.calm_window)},
      {"baseline_window", range_to_json(cfg.baseline_window)},
      {"crisis_windows", windows},
      {"portfolio_a", pa},
      {"portfolio_b", cfg.portfolio_b},
      {"channel_params",
       {{"vol_kappa", p.vol_kappa},
        {"drift_decay", p.drift_decay},
        {"amp_lambda", p.amp_lambda},
        {"amp_rag", p.amp_rag},
        {"amp_news", p.amp_news},
        {"drift_cap_daily", p.drift_cap_daily},
        {"return_clip", p.return_clip}}}};
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

// --- canonical form -------------------------------------------------------------------

namespace {

void dump_into(const Json& j, std::string& out) {
  switch (j.type()) {
    case Json::value_t::object: {
      out.push_back('{');
      bool first = true;
      // nlohmann::json's default object_t is std::map: iteration is key-sorted.
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out.push_back(',');
        first = false;
        out += Json(it.key()).dump();
        out.push_back(':');
        dump_into(it.value(), out);
      }
      out.push_back('}');
      break;
    }
    case Json::value_t::array: {
      out.push_back('[');
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out.push_back(',');
        dump_into(j[i], out);
      }
      out.push_back(']');
      break;
    }
    case Json::value_t::number_float: {
      double v = j.get<double>();
      if (!std::isfinite(v)) throw SerializationError("non-finite number in canonical form");
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      break;
    }
    default:
      out += j.dump(-1, ' ', false, Json::error_handler_t::strict);
  }
}

}  // namespace

std::string canonical_dump(const Json& j) {
  std::string out;
  dump_into(j, out);
  return out;
}

Json to_json(const Scenario& s, bool include_hash) {
  Json j{{"country", s.country},
         {"title", s.title},
         {"gdp_growth", s.shock.gdp_growth},
         {"inflation", s.shock.inflation},
         {"interest_rate", s.shock.interest_rate},
         {"rationale", s.rationale},
         {"risk_sectors", s.risk_sectors},
         {"rag", s.rag},
         {"use_news", s.use_news},
         {"model", s.model},
         {"model_version", s.model_version},
         {"provider", s.provider},
         {"prompt_variant", s.prompt_variant},
         {"prompt_hash", s.prompt_hash},
         {"ctx_hash", s.ctx_hash},
         {"seed", s.seed},
         {"timestamp_utc", s.timestamp_utc},
         {"plausibility_ok", s.plausibility_ok},
         {"plausibility_score", s.plausibility_score},
         {"regime_label_text", to_string(s.regime_label)},
         {"regime_score_text", s.regime_score},
         {"regime_p_normal", s.regime_probs[0]},
         {"regime_p_stress", s.regime_probs[1]},
         {"regime_p_crisis", s.regime_probs[2]},
         {"lambda", s.lambda}};
  if (include_hash) j["scenario_hash"] = s.scenario_hash;
  return j;
}

std::string canonical_serialize(const Scenario& s) { return canonical_dump(to_json(s, false)); }

std::string compute_scenario_hash(const Scenario& s) { return sha256_hex(canonical_serialize(s)); }

Scenario with_hash(Scenario s) {
  s.scenario_hash = compute_scenario_hash(s);
  return s;
}

// --- validation -----------------------------------------------------------------------

namespace {

class Validator {
 public:
  explicit Validator(const Json& raw) : raw_(raw) {}

  std::vector<Violation> violations;

  const Json* find(std::initializer_list<const char*> names) const {
    for (const char* n : names) {
      auto it = raw_.find(n);
      if (it != raw_.end()) return &*it;
    }
    return nullptr;
  }

  void add(std::string field, Violation::Kind kind, std::string msg) {
    violations.push_back({std::move(field), kind, std::move(msg)});
  }

  bool string_field(const char* name, std::string& out, bool required) {
    const Json* v = find({name});
    if (!v) {
      if (required) add(name, Violation::Kind::missing, "required field missing");
      return false;
    }
    if (!v->is_string()) {
      add(name, Violation::Kind::wrong_type, "expected string");
      return false;
    }
    out = v->get<std::string>();
    return true;
  }

  bool number_field(std::initializer_list<const char*> names, double& out, bool required, double lo, double hi) {
    const char* primary = *names.begin();
    const Json* v = find(names);
    if (!v) {
      if (required) add(primary, Violation::Kind::missing, "required field missing");
      return false;
    }
    if (!v->is_number()) {
      add(primary, Violation::Kind::wrong_type, "expected number");
      return false;
    }
    double d = v->get<double>();
    if (!std::isfinite(d) || d < lo || d > hi) {
      add(primary, Violation::Kind::out_of_range, "value out of range");
      return false;
    }
    out = d;
    return true;
  }

  bool integer_field(const char* name, std::int64_t& out) {
    const Json* v = find({name});
    if (!v) return false;
    if (!v->is_number_integer()) {
      add(name, Violation::Kind::wrong_type, "expected integer");
      return false;
    }
    out = v->get<std::int64_t>();
    return true;
  }

  bool flag_field(const char* name, bool& out) {
    const Json* v = find({name});
    if (!v) return false;
    if (v->is_boolean()) {
      out = v->get<bool>();
      return true;
    }
    if (v->is_number_integer() && (v->get<std::int64_t>() == 0 || v->get<std::int64_t>() == 1)) {
      out = v->get<std::int64_t>() == 1;
      return true;
    }
    add(name, Violation::Kind::wrong_type, "expected boolean or 0/1");
    return false;
  }

 private:
  const Json& raw_;
};

}  // namespace

ValidationResult validate_scenario(const Json& raw) {
  ValidationResult result;
  if (!raw.is_object()) {
    result.violations.push_back({"", Violation::Kind::wrong_type, "scenario must be a JSON object"});
    return result;
  }
  Validator v(raw);
  Scenario s;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  v.string_field("country", s.country, true);
  v.string_field("title", s.title, true);
  v.number_field({"gdp_growth"}, s.shock.gdp_growth, true, -kInf, kInf);
  v.number_field({"inflation"}, s.shock.inflation, true, -kInf, kInf);
  v.number_field({"interest_rate"}, s.shock.interest_rate, true, -kInf, kInf);
  v.string_field("rationale", s.rationale, true);
  if (const Json* sectors = v.find({"risk_sectors"}); !sectors) {
    v.add("risk_sectors", Violation::Kind::missing, "required field missing");
  } else if (!sectors->is_array() ||
             !std::all_of(sectors->begin(), sectors->end(), [](const Json& e) { return e.is_string(); })) {
    v.add("risk_sectors", Violation::Kind::wrong_type, "expected array of strings");
  } else {
    s.risk_sectors = sectors->get<std::vector<std::string>>();
  }

  v.flag_field("rag", s.rag);
  v.flag_field("use_news", s.use_news);
  v.string_field("model", s.model, false);
  v.string_field("model_version", s.model_version, false);
  v.string_field("provider", s.provider, false);
  v.string_field("prompt_variant", s.prompt_variant, false);
  v.string_field("prompt_hash", s.prompt_hash, false);
  v.string_field("ctx_hash", s.ctx_hash, false);
  v.string_field("scenario_hash", s.scenario_hash, false);
  v.integer_field("seed", s.seed);
  v.integer_field("timestamp_utc", s.timestamp_utc);

  bool ok_flag = false;
  if (v.flag_field("plausibility_ok", ok_flag)) s.plausibility_ok = ok_flag ? 1 : 0;
  v.number_field({"plausibility_score"}, s.plausibility_score, false, 0.0, 5.0);
  v.number_field({"regime_score_text", "regime_score"}, s.regime_score, false, 0.0, 1.0);
  v.number_field({"lambda"}, s.lambda, false, 0.0, 1.0);

  std::optional<RegimeLabel> label;
  if (const Json* l = v.find({"regime_label_text", "regime_label"})) {
    if (!l->is_string()) {
      v.add("regime_label_text", Violation::Kind::wrong_type, "expected string");
    } else if (!(label = parse_regime_label(l->get<std::string>()))) {
      v.add("regime_label_text", Violation::Kind::out_of_range, "expected normal, stress or crisis");
    }
  }

  std::array<double, 3> probs{};
  int present = 0;
  const char* prob_names[3] = {"regime_p_normal", "regime_p_stress", "regime_p_crisis"};
  for (int k = 0; k < 3; ++k) present += v.number_field({prob_names[k]}, probs[k], false, 0.0, 1.0) ? 1 : 0;
  bool probs_bad = std::any_of(v.violations.begin(), v.violations.end(),
                               [](const Violation& x) { return x.field.rfind("regime_p_", 0) == 0; });
  if (present == 3 && !probs_bad) {
    double sum = probs[0] + probs[1] + probs[2];
    // Upstream classifiers print probabilities at ~10 digits; renormalise small drift.
    if (std::abs(sum - 1.0) > 1e-6) {
      v.add("regime_probs", Violation::Kind::inconsistent, "regime probabilities must sum to 1");
    } else {
      if (std::abs(sum - 1.0) > 1e-12) {
        for (auto& p : probs) p /= sum;
      }
      s.regime_probs = probs;
      auto argmax = static_cast<RegimeLabel>(std::max_element(probs.begin(), probs.end()) - probs.begin());
      if (label && *label != argmax) {
        v.add("regime_label_text", Violation::Kind::inconsistent, "label is not the argmax of regime_p_*");
      }
      s.regime_label = argmax;
    }
  } else if (present != 0 && !probs_bad) {
    v.add("regime_probs", Violation::Kind::missing, "regime_p_normal/stress/crisis must be given together");
  } else if (present == 0 && label) {
    s.regime_label = *label;
    s.regime_probs = {0.0, 0.0, 0.0};
    s.regime_probs[static_cast<int>(*label)] = 1.0;
  }

  result.violations = std::move(v.violations);
  if (result.violations.empty()) result.scenario = std::move(s);
  return result;
}

}  // namespace stresslab
