#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stresslab/core.hpp"
#include "stresslab/error.hpp"
#include "stresslab/ingest.hpp"
#include "stresslab/retrieval.hpp"

namespace stresslab::llm {

struct PromptBundle {
  std::string system_text;
  std::vector<std::string> context_blocks;  // target profile, retrieved profiles, headlines
  std::string directive_text;
  std::string prompt_variant;
  std::string prompt_hash;  // sha256(system \n directive \n variant)
  std::string ctx_hash;     // sha256(context blocks joined by blank lines)

  std::string context_text() const;
  /// User message sent to a chat model: context followed by the directive.
  std::string user_text() const;
};

/// Theme sentence for a prompt-variant id; unknown ids get a generic theme.
std::string variant_theme(const std::string& variant);

/// Throws ConfigError if `retrieved` is non-empty while rag is off.
PromptBundle build_prompt(const ingest::CountryBaseline& baseline,
                          const std::vector<ingest::CountryBaseline>& retrieved,
                          const std::vector<std::string>& headlines, const std::string& variant, bool rag,
                          bool use_news);

class ProviderError : public Error {
 public:
  using Error::Error;
};

class GenerationProvider {
 public:
  virtual ~GenerationProvider() = default;
  /// Raw completion text. Throws ProviderError on failure.
  virtual std::string generate(const PromptBundle& bundle, std::int64_t seed) const = 0;
  virtual std::string model_id() const = 0;
  virtual std::string model_version() const = 0;
  virtual std::string provider_name() const = 0;
  virtual bool requires_network() const { return false; }
};

/// Replays recorded completions from a JSON-lines file. The optional first line
/// {"_meta": {"model", "model_version", "provider"}} names the recorded model; every other
/// line is {"prompt_hash", "ctx_hash", "response"}.
class FixtureProvider final : public GenerationProvider {
 public:
  explicit FixtureProvider(const std::filesystem::path& path);
  std::string generate(const PromptBundle& bundle, std::int64_t seed) const override;
  std::string model_id() const override { return model_; }
  std::string model_version() const override { return model_version_; }
  std::string provider_name() const override { return provider_; }
  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::string, std::string> responses_;
  std::string model_ = "fixture";
  std::string model_version_ = "fixture";
  std::string provider_ = "fixture";
};

/// Offline generator that writes plausible scenario JSON as a deterministic function of
/// (prompt_hash, ctx_hash, seed). Used to record fixture files and for desk-scale runs.
class SyntheticProvider final : public GenerationProvider {
 public:
  std::string generate(const PromptBundle& bundle, std::int64_t seed) const override;
  std::string model_id() const override { return "synthetic-macro-v1"; }
  std::string model_version() const override { return "synthetic-macro-v1"; }
  std::string provider_name() const override { return "stresslab-synthetic"; }
};

/// OpenAI-compatible chat-completions endpoint. Config JSON keys: base_url, path, model,
/// model_version, provider, api_key_env, temperature, timeout_s.
class HttpProvider final : public GenerationProvider {
 public:
  explicit HttpProvider(const std::filesystem::path& config_path);
  std::string generate(const PromptBundle& bundle, std::int64_t seed) const override;
  std::string model_id() const override { return model_; }
  std::string model_version() const override { return model_version_; }
  std::string provider_name() const override { return provider_; }
  bool requires_network() const override { return true; }
  Json effective_settings() const;

 private:
  std::string base_url_;
  std::string path_ = "/v1/chat/completions";
  std::string model_;
  std::string model_version_;
  std::string provider_ = "http";
  std::string api_key_env_ = "OPENAI_API_KEY";
  double temperature_ = 0.0;
  int timeout_s_ = 60;
};

/// "fixture:<path>", "http:<config.json>" or "synthetic". Throws ConfigError.
std::unique_ptr<GenerationProvider> make_provider(const std::string& spec);

class ExtractionError : public Error {
 public:
  using Error::Error;
};

/// Earliest balanced {...} span (by start position) that parses as a JSON object.
/// Throws ExtractionError when none exists.
Json extract_first_json(const std::string& raw);

enum class AttemptStatus { parsed, malformed, invalid, failed };
std::string_view to_string(AttemptStatus s);

struct GenerationAttempt {
  std::string country;
  bool rag = false;
  bool use_news = false;
  std::string variant;
  AttemptStatus status = AttemptStatus::failed;
  std::string detail;
  std::string prompt_hash;
  std::string ctx_hash;
  std::string response_hash;
  std::string raw_response;
  std::optional<Scenario> candidate;  // stamped with provenance, not yet audited
};

struct GridInputs {
  const std::vector<ingest::CountryBaseline>* baselines = nullptr;
  const retrieval::FlatIndex* index = nullptr;
  const retrieval::EmbeddingProvider* embedder = nullptr;
  /// Diverse headlines per country; countries without an entry get no headline block.
  std::map<std::string, std::vector<std::string>> headlines;
};

struct GridResult {
  std::vector<GenerationAttempt> attempts;  // ordered by (country, rag, news, variant)
  std::size_t parsed = 0, malformed = 0, invalid = 0, failed = 0;
};

/// Peers retrieved for a country: top-k profiles under its retrieval seed, excluding itself.
std::vector<ingest::CountryBaseline> retrieve_peers(const std::string& country, const RunConfig& cfg,
                                                    const GridInputs& in);

/// One attempt per (country, rag, news, variant) cell. Provider failures are recorded on
/// the cell and never abort the grid.
GridResult run_grid(const RunConfig& cfg, const GridInputs& in, const GenerationProvider& provider);

/// JSON-lines fixture text for a grid (meta line first), suitable for FixtureProvider.
std::string record_fixtures(const GridResult& grid, const GenerationProvider& provider);

}  // namespace stresslab::llm
