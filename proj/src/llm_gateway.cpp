#include "stresslab/llm_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stresslab/error.hpp"
#include "stresslab/hash.hpp"
#include "stresslab/parallel.hpp"

namespace stresslab::llm {

namespace {

constexpr const char* kSystemText =
    "You are a senior macro-financial risk analyst at a central bank supervisory unit. "
    "You design quarterly stress scenarios that are adverse yet economically credible, "
    "internally consistent across growth, inflation and policy rates, and clearly argued.";

constexpr const char* kDirectiveTemplate =
    "Task: construct one adverse but credible macroeconomic stress scenario for the target "
    "country above, covering Q4 2026.\n"
    "Narrative theme: %s\n"
    "Report gdp_growth and inflation as percentage-point changes versus the baseline, and "
    "interest_rate as the short-term policy rate level in percent.\n"
    "Respond with a single JSON object with exactly these keys: country, title, gdp_growth, "
    "inflation, interest_rate, rationale, risk_sectors (array of strings).";

struct Theme {
  const char* id;
  const char* title;
  const char* sentence;
};

constexpr Theme kThemes[] = {
    {"v01_global_recession", "Synchronised Global Recession", "a synchronised downturn across advanced economies"},
    {"v02_stagflation", "Stagflation Return", "persistent supply-driven inflation alongside stalling output"},
    {"v03_energy_shock", "Energy Price Spike", "an abrupt surge in oil and gas prices after supply disruptions"},
    {"v04_sovereign_debt", "Sovereign Debt Repricing", "a disorderly repricing of sovereign debt and fiscal risk premia"},
    {"v05_housing_bust", "Housing Market Bust", "a sharp correction in residential property prices and mortgage credit"},
    {"v06_banking_stress", "Banking Sector Stress", "funding pressure on mid-sized banks and deposit outflows"},
    {"v07_trade_war", "Tariff Escalation", "an escalation of tariffs and retaliatory trade barriers"},
    {"v08_pandemic_resurgence", "Public Health Resurgence", "a renewed public-health emergency disrupting services and travel"},
    {"v09_tech_correction", "Technology Valuation Correction", "a steep correction in technology equity valuations"},
    {"v10_contagion", "Financial Contagion", "cross-border financial contagion through credit and funding markets"},
    {"v11_currency_crisis", "Currency Turmoil", "a disorderly depreciation of the domestic currency"},
    {"v12_commodity_slump", "Commodity Demand Slump", "a collapse in global commodity demand and export receipts"},
    {"v13_policy_error", "Monetary Policy Error", "an overtightening of monetary policy into a slowing economy"},
    {"v14_supply_chain", "Supply Chain Breakdown", "renewed supply-chain bottlenecks in intermediate goods"},
    {"v15_geopolitical", "Geopolitical Escalation", "a geopolitical escalation that disrupts trade routes and confidence"},
    {"v16_credit_crunch", "Credit Crunch", "a broad tightening of bank lending standards and credit availability"},
    {"v17_deflation_trap", "Deflationary Slump", "weak demand pushing inflation well below target"},
    {"v18_wage_price_spiral", "Wage-Price Spiral", "accelerating wage settlements feeding into core prices"},
    {"v19_fiscal_cliff", "Fiscal Consolidation Shock", "an abrupt withdrawal of fiscal support"},
    {"v20_bond_rout", "Global Bond Rout", "a global sell-off in long-dated government bonds"},
    {"v21_em_spillover", "Emerging Market Spillover", "capital flight from emerging markets spilling into advanced economies"},
    {"v22_climate_disaster", "Climate Disaster", "a cluster of severe climate events damaging infrastructure and harvests"},
    {"v23_cyber_attack", "Systemic Cyber Incident", "a systemic cyber incident disabling payment infrastructure"},
    {"v24_china_slowdown", "China Hard Landing", "a hard landing in Chinese industrial activity"},
    {"v25_private_credit", "Private Credit Unwind", "losses and redemptions across private credit funds"},
    {"v26_liquidity_freeze", "Market Liquidity Freeze", "a freeze in short-term funding and market liquidity"},
    {"v27_labour_shock", "Labour Market Shock", "a rapid rise in unemployment and falling household income"},
    {"v28_food_inflation", "Food Price Shock", "a spike in food prices after crop failures"},
    {"v29_term_premium", "Term Premium Surge", "a jump in term premia and long-term borrowing costs"},
    {"v30_confidence_collapse", "Confidence Collapse", "a collapse in business and consumer confidence"},
};

const Theme* find_theme(const std::string& id) {
  for (const auto& t : kThemes) {
    if (id == t.id) return &t;
  }
  return nullptr;
}

std::string join_blocks(const std::vector<std::string>& blocks) {
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) out += "\n\n";
    out += blocks[i];
  }
  return out;
}

}  // namespace

std::string PromptBundle::context_text() const { return join_blocks(context_blocks); }

std::string PromptBundle::user_text() const { return context_text() + "\n\n" + directive_text; }

std::string variant_theme(const std::string& variant) {
  if (const Theme* t = find_theme(variant)) return t->sentence;
  return "a severe macro-financial downturn of the analyst's choosing";
}

PromptBundle build_prompt(const ingest::CountryBaseline& baseline,
                          const std::vector<ingest::CountryBaseline>& retrieved,
                          const std::vector<std::string>& headlines, const std::string& variant, bool rag,
                          bool use_news) {
  if (!rag && !retrieved.empty()) throw ConfigError("retrieved profiles supplied while RAG is disabled");
  PromptBundle b;
  b.system_text = kSystemText;
  b.prompt_variant = variant;
  char directive[1024];
  std::snprintf(directive, sizeof directive, kDirectiveTemplate, variant_theme(variant).c_str());
  b.directive_text = directive;

  b.context_blocks.push_back("[Target country profile]\n" + retrieval::build_profile(baseline));
  if (rag) {
    for (const auto& peer : retrieved) {
      b.context_blocks.push_back("[Retrieved peer profile]\n" + retrieval::build_profile(peer));
    }
  }
  if (use_news && !headlines.empty()) {
    std::string block = "[Top-20 diverse headlines]\n";
    for (const auto& h : headlines) block += "- " + h + "\n";
    b.context_blocks.push_back(std::move(block));
  }
  b.prompt_hash = sha256_hex(b.system_text + "\n" + b.directive_text + "\n" + b.prompt_variant);
  b.ctx_hash = sha256_hex(b.context_text());
  return b;
}

// --- fixture provider -----------------------------------------------------------------

FixtureProvider::FixtureProvider(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open fixture file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("_meta")) {
      const auto& m = j.at("_meta");
      model_ = m.value("model", model_);
      model_version_ = m.value("model_version", model_version_);
      provider_ = m.value("provider", provider_);
      continue;
    }
    responses_[j.at("prompt_hash").get<std::string>() + "|" + j.at("ctx_hash").get<std::string>()] =
        j.at("response").get<std::string>();
  }
}

std::string FixtureProvider::generate(const PromptBundle& bundle, std::int64_t) const {
  auto it = responses_.find(bundle.prompt_hash + "|" + bundle.ctx_hash);
  if (it == responses_.end()) {
    throw ProviderError("no fixture response for prompt_hash " + bundle.prompt_hash.substr(0, 12) + " ctx_hash " +
                        bundle.ctx_hash.substr(0, 12));
  }
  return it->second;
}

// --- synthetic provider ---------------------------------------------------------------

namespace {

double profile_value(const std::string& block, const std::string& label) {
  auto pos = block.find(label);
  if (pos == std::string::npos) return 0.0;
  return std::strtod(block.c_str() + pos + label.size(), nullptr);
}

std::string profile_country(const std::string& block) {
  auto pos = block.find("Country: ");
  if (pos == std::string::npos) return "Unknown";
  auto end = block.find('\n', pos);
  return block.substr(pos + 9, end - pos - 9);
}

double round_to(double v, double step) {
  const double inv = std::round(1.0 / step);
  return std::round(v * inv) / inv;
}

constexpr const char* kOpeners[] = {
    "The scenario begins with %s in late Q3 2026.",
    "By the start of Q4 2026 the economy is hit by %s.",
    "A sequence of adverse events culminates in %s during the fourth quarter of 2026.",
};

constexpr const char* kMechanisms[] = {
    "Tighter global funding conditions widen credit spreads and squeeze corporate borrowing.",
    "Equity prices fall sharply and household confidence weakens, cutting discretionary spending.",
    "Export receipts decline as external demand slows, weighing on manufacturing output.",
    "Banks tighten lending standards, and credit growth to construction and small firms contracts.",
    "Volatility rises across asset classes and liquidity in secondary markets thins.",
    "Energy and import prices push headline inflation higher even as activity slows.",
    "Weaker demand and falling commodity prices pull inflation down over the quarter.",
    "Contagion through cross-border bank exposures raises fears of a systemic crisis.",
    "Business investment is postponed as uncertainty about policy and trade persists.",
    "Unemployment rises steadily, and the labour market loosens faster than expected.",
};

constexpr const char* kPolicy[] = {
    "The central bank keeps policy tight to protect credibility and keep inflation expectations anchored.",
    "Policy makers respond cautiously, balancing the downturn against still-elevated price pressures.",
    "The central bank lifts rates briefly to defend the currency before pausing.",
    "Fiscal support is limited by high debt, so the adjustment falls largely on the private sector.",
};

constexpr const char* kSectors[] = {
    "Banks and non-bank lenders",   "Commercial real estate",          "Construction",
    "Energy producers",             "Export-oriented manufacturing",   "Consumer discretionary retail",
    "Technology and software",      "Insurance",                       "Transportation and logistics",
    "Mining and base metals",
};

}  // namespace

std::string SyntheticProvider::generate(const PromptBundle& bundle, std::int64_t seed) const {
  if (bundle.context_blocks.empty()) throw ProviderError("synthetic provider needs a target profile block");
  const auto& target = bundle.context_blocks.front();
  const auto d = sha256(bundle.prompt_hash + "|" + bundle.ctx_hash + "|" + std::to_string(seed));
  auto u = [&](int i) { return ((static_cast<unsigned>(d[2 * i]) << 8) | d[2 * i + 1]) / 65536.0; };

  const std::string& v = bundle.prompt_variant;
  auto has = [&](const char* s) { return v.find(s) != std::string::npos; };
  double infl_bias = 0.0, rate_bias = 0.0;
  if (has("stagflation") || has("energy") || has("wage") || has("food") || has("supply")) infl_bias = 1.5;
  if (has("deflation") || has("china") || has("commodity") || has("confidence")) infl_bias = -1.0;
  if (has("bond_rout") || has("term_premium") || has("policy_error") || has("currency")) rate_bias = 1.0;

  double gdp = round_to(-(0.5 + 4.5 * u(0)), 0.1);
  double infl = round_to(-0.8 + 3.0 * u(1) + infl_bias, 0.1);
  double rate_shock = 0.8 * infl + 0.3 * gdp + 2.0 * (u(2) - 0.5) + rate_bias;
  if (d[20] < 4) infl = 22.0;  // rare implausible draws exercise the hard gate
  if (d[21] < 4) gdp = -12.0;
  const double base_rate = profile_value(target, "Short-term interest rate (%): ");
  const double rate_level = round_to(base_rate + rate_shock, 0.05);

  const std::string country = profile_country(target);
  const Theme* theme = find_theme(v);
  char buf[512];
  std::string rationale;
  std::snprintf(buf, sizeof buf, kOpeners[d[22] % 3], variant_theme(v).c_str());
  rationale += buf;
  const int n_mech = 3 + d[23] % 3;
  for (int i = 0; i < n_mech; ++i) {
    rationale += " ";
    rationale += kMechanisms[(d[24] + 3 * i) % 10];
  }
  if (bundle.context_blocks.size() > 1 && bundle.context_blocks[1].rfind("[Retrieved", 0) == 0) {
    rationale += " Peer economies with similar fundamentals transmit the shock through trade and funding links.";
  }
  if (bundle.context_text().find("[Top-20 diverse headlines]") != std::string::npos) {
    rationale += " Recent headlines on slowing activity and market strain amplify the adverse dynamics.";
  }
  rationale += " ";
  rationale += kPolicy[d[25] % 4];
  std::snprintf(buf, sizeof buf, " Overall, %s ends the quarter with output contracting and elevated financial stress.",
                country.c_str());
  rationale += buf;

  std::vector<std::string> sectors;
  const int n_sec = 3 + d[26] % 3;
  for (int i = 0; i < n_sec; ++i) {
    std::string s = kSectors[(d[27] + 7 * i) % 10];
    if (std::find(sectors.begin(), sectors.end(), s) == sectors.end()) sectors.push_back(std::move(s));
  }

  Json j;
  j["country"] = country;
  j["title"] = std::string("Q4-2026 ") + (theme ? theme->title : "Adverse Scenario") + ": " + country;
  j["gdp_growth"] = gdp;
  j["inflation"] = infl;
  j["interest_rate"] = rate_level;
  j["rationale"] = rationale;
  j["risk_sectors"] = sectors;
  const std::string body = j.dump(2);
  switch (d[28] % 3) {
    case 0:
      return body;
    case 1:
      return "Here is the requested scenario:\n```json\n" + body + "\n```\n";
    default:
      return "Scenario follows. " + body + "\nLet me know if you need adjustments.";
  }
}

std::unique_ptr<GenerationProvider> make_provider(const std::string& spec) {
  if (spec == "synthetic") return std::make_unique<SyntheticProvider>();
  if (spec.rfind("fixture:", 0) == 0) return std::make_unique<FixtureProvider>(spec.substr(8));
  if (spec.rfind("http:", 0) == 0) return std::make_unique<HttpProvider>(spec.substr(5));
  throw ConfigError("unknown provider spec '" + spec + "' (expected fixture:<path>, http:<config> or synthetic)");
}

// --- JSON extraction ------------------------------------------------------------------

namespace {

/// End (inclusive) of the brace span opened at `start`, honouring JSON string literals.
std::size_t matching_brace(const std::string& s, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string::npos;
}

}  // namespace

Json extract_first_json(const std::string& raw) {
  for (std::size_t i = raw.find('{'); i != std::string::npos; i = raw.find('{', i + 1)) {
    auto end = matching_brace(raw, i);
    if (end == std::string::npos) continue;
    Json j = Json::parse(raw.begin() + static_cast<std::ptrdiff_t>(i), raw.begin() + static_cast<std::ptrdiff_t>(end) + 1,
                         nullptr, false);
    if (!j.is_discarded() && j.is_object()) return j;
  }
  throw ExtractionError("no valid JSON object in model output");
}

// --- grid -----------------------------------------------------------------------------

std::string_view to_string(AttemptStatus s) {
  switch (s) {
    case AttemptStatus::parsed:
      return "parsed";
    case AttemptStatus::malformed:
      return "malformed";
    case AttemptStatus::invalid:
      return "invalid";
    case AttemptStatus::failed:
      return "failed";
  }
  return "failed";
}

std::vector<ingest::CountryBaseline> retrieve_peers(const std::string& country, const RunConfig& cfg,
                                                    const GridInputs& in) {
  const auto& self = ingest::find_baseline(*in.baselines, country);
  auto query = in.embedder->embed(retrieval::build_profile(self));
  auto seed = retrieval::retrieval_seed(country, cfg.retrieval_date);
  auto hits = in.index->top_k(query, static_cast<std::size_t>(cfg.top_k), seed);
  std::vector<ingest::CountryBaseline> peers;
  for (const auto& h : hits.hits) {
    if (h.id != country) peers.push_back(ingest::find_baseline(*in.baselines, h.id));
  }
  return peers;
}

GridResult run_grid(const RunConfig& cfg, const GridInputs& in, const GenerationProvider& provider) {
  if (!in.baselines || !in.index || !in.embedder) throw ConfigError("run_grid: missing baselines, index or embedder");
  std::vector<bool> rag_levels{false}, news_levels{false};
  if (cfg.rag) rag_levels.push_back(true);
  if (cfg.use_news) news_levels.push_back(true);

  GridResult out;
  std::map<std::string, std::vector<ingest::CountryBaseline>> peers;
  for (const auto& country : cfg.countries) {
    ingest::find_baseline(*in.baselines, country);
    if (cfg.rag) peers[country] = retrieve_peers(country, cfg, in);
    for (bool rag : rag_levels) {
      for (bool news : news_levels) {
        for (const auto& variant : cfg.prompt_variants) {
          GenerationAttempt a;
          a.country = country;
          a.rag = rag;
          a.use_news = news;
          a.variant = variant;
          out.attempts.push_back(std::move(a));
        }
      }
    }
  }

  parallel_for(out.attempts.size(), [&](std::size_t idx) {
    auto& a = out.attempts[idx];
    const auto& baseline = ingest::find_baseline(*in.baselines, a.country);
    static const std::vector<std::string> kNone;
    const auto it = in.headlines.find(a.country);
    const auto& heads = a.use_news && it != in.headlines.end() ? it->second : kNone;
    auto bundle = build_prompt(baseline, a.rag ? peers.at(a.country) : std::vector<ingest::CountryBaseline>{}, heads,
                               a.variant, a.rag, a.use_news);
    a.prompt_hash = bundle.prompt_hash;
    a.ctx_hash = bundle.ctx_hash;
    try {
      a.raw_response = provider.generate(bundle, static_cast<std::int64_t>(cfg.seed));
    } catch (const std::exception& e) {
      a.status = AttemptStatus::failed;
      a.detail = e.what();
      return;
    }
    a.response_hash = sha256_hex(a.raw_response);
    Json obj;
    try {
      obj = extract_first_json(a.raw_response);
    } catch (const ExtractionError& e) {
      a.status = AttemptStatus::malformed;
      a.detail = e.what();
      return;
    }
    auto v = validate_scenario(obj);
    if (!v.ok()) {
      a.status = AttemptStatus::invalid;
      for (const auto& viol : v.violations) a.detail += viol.field + ": " + viol.message + "; ";
      return;
    }
    Scenario s = std::move(*v.scenario);
    if (s.country != a.country) {
      a.status = AttemptStatus::invalid;
      a.detail = "country mismatch: '" + s.country + "'";
      return;
    }
    s.rag = a.rag;
    s.use_news = a.use_news;
    s.model = provider.model_id();
    s.model_version = provider.model_version();
    s.provider = provider.provider_name();
    s.prompt_variant = a.variant;
    s.prompt_hash = a.prompt_hash;
    s.ctx_hash = a.ctx_hash;
    s.seed = static_cast<std::int64_t>(cfg.seed);
    s.timestamp_utc = cfg.timestamp_utc;
    a.candidate = with_hash(std::move(s));
    a.status = AttemptStatus::parsed;
  });

  for (const auto& a : out.attempts) {
    switch (a.status) {
      case AttemptStatus::parsed:
        ++out.parsed;
        break;
      case AttemptStatus::malformed:
        ++out.malformed;
        break;
      case AttemptStatus::invalid:
        ++out.invalid;
        break;
      case AttemptStatus::failed:
        ++out.failed;
        break;
    }
  }
  return out;
}

std::string record_fixtures(const GridResult& grid, const GenerationProvider& provider) {
  std::string out = canonical_dump(Json{{"_meta",
                                         {{"model", provider.model_id()},
                                          {"model_version", provider.model_version()},
                                          {"provider", provider.provider_name()}}}}) +
                    "\n";
  for (const auto& a : grid.attempts) {
    if (a.status == AttemptStatus::failed) continue;
    out += canonical_dump(Json{{"prompt_hash", a.prompt_hash}, {"ctx_hash", a.ctx_hash}, {"response", a.raw_response}});
    out += "\n";
  }
  return out;
}

}  // namespace stresslab::llm
