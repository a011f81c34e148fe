#include "stresslab/llm_gateway.hpp"

#include <cstdlib>
#include <fstream>

#include "stresslab/error.hpp"

// Included after Eigen: httplib's macros otherwise break Eigen's product kernels.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace stresslab::llm {

HttpProvider::HttpProvider(const std::filesystem::path& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open HTTP provider config " + config_path.string());
  Json j;
  try {
    j = Json::parse(in);
    base_url_ = j.at("base_url").get<std::string>();
    model_ = j.at("model").get<std::string>();
  } catch (const std::exception& e) {
    throw ConfigError("invalid HTTP provider config: " + std::string(e.what()));
  }
  path_ = j.value("path", path_);
  model_version_ = j.value("model_version", model_);
  provider_ = j.value("provider", provider_);
  api_key_env_ = j.value("api_key_env", api_key_env_);
  temperature_ = j.value("temperature", temperature_);
  timeout_s_ = j.value("timeout_s", timeout_s_);
}

Json HttpProvider::effective_settings() const {
  return Json{{"base_url", base_url_}, {"path", path_},          {"model", model_},
              {"temperature", temperature_}, {"timeout_s", timeout_s_}, {"retries", 1}};
}

std::string HttpProvider::generate(const PromptBundle& bundle, std::int64_t seed) const {
  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout_s_, 0);
  client.set_read_timeout(timeout_s_, 0);
  client.set_write_timeout(timeout_s_, 0);
  httplib::Headers headers;
  if (const char* key = std::getenv(api_key_env_.c_str())) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  Json body{{"model", model_},
            {"temperature", temperature_},
            {"seed", seed},
            {"messages",
             Json::array({Json{{"role", "system"}, {"content", bundle.system_text}},
                          Json{{"role", "user"}, {"content", bundle.user_text()}}})}};
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    try {
      auto j = Json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
      last_error = std::string("unexpected response body: ") + e.what();
    }
  }
  throw ProviderError(last_error);
}

}  // namespace stresslab::llm
