#include "maxcode/remote.hpp"

#include <chrono>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "maxcode/executor.hpp"

namespace maxcode {

ChatClient::ChatClient(RemoteConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty())
    throw ConfigError("remote agent needs a base URL (MAXCODE_API_BASE or api_base)");
}

std::vector<std::string> ChatClient::complete(const std::string& system, const std::string& user,
                                              double temperature, int n, int max_tokens,
                                              std::optional<std::uint64_t> seed) {
  nlohmann::json body{
      {"model", config_.model},
      {"messages",
       nlohmann::json::array({{{"role", "system"}, {"content", system}},
                              {{"role", "user"}, {"content", user}}})},
      {"temperature", temperature},
      {"n", n},
      {"max_tokens", max_tokens},
  };
  if (seed) body["seed"] = *seed;
  std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config_.retry_backoff_ms * (1 << (attempt - 1))));
    }
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_s, 0);
    client.set_read_timeout(config_.timeout_s, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty())
      headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto res = client.Post(config_.api_path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw InfrastructureError("chat endpoint returned status " + std::to_string(res->status) +
                                ": " + res->body.substr(0, 500));
    }
    try {
      nlohmann::json reply = nlohmann::json::parse(res->body);
      std::vector<std::string> contents;
      for (const auto& choice : reply.at("choices")) {
        contents.push_back(choice.at("message").at("content").get<std::string>());
      }
      if (static_cast<int>(contents.size()) < n) {
        last_error = "reply contained " + std::to_string(contents.size()) + " choices, need " +
                     std::to_string(n);
        continue;
      }
      contents.resize(n);
      return contents;
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("malformed reply: ") + e.what();
      continue;
    }
  }
  throw InfrastructureError("chat request failed after " +
                            std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

std::vector<std::string> RemotePolicyAgent::generate(const AgentRequest& request,
                                                     const PromptContext& ctx) {
  (void)ctx;
  std::vector<std::string> completions = client_.complete(
      request.system, request.user, request.temperature, request.n, request.max_tokens,
      request.seed);
  std::vector<std::string> out;
  out.reserve(completions.size());
  for (const std::string& c : completions) out.push_back(extract_code_block(c));
  return out;
}

std::string RemoteCriticAgent::critique(const AgentRequest& request, const PromptContext& ctx) {
  (void)ctx;
  std::vector<std::string> completions = client_.complete(
      request.system, request.user, request.temperature, 1, request.max_tokens, request.seed);
  return completions.front();
}

std::optional<int> parse_category_reply(const std::string& reply) {
  for (char c : reply) {
    if (c >= '0' && c <= '9') {
      if (c <= '4') return c - '0';
      return std::nullopt;
    }
  }
  return std::nullopt;
}

CategoricalValue RemoteValuePredictor::predict(const std::string& prefix_render, int u_cat,
                                               int remaining_rounds) {
  (void)u_cat;
  (void)remaining_rounds;
  std::vector<std::string> completions =
      client_.complete("", prefix_render, temperature_, 1, 16, std::nullopt);
  if (auto category = parse_category_reply(completions.front())) {
    return CategoricalValue::one_hot(*category);
  }
  parse_failures_.fetch_add(1);
  return CategoricalValue::uniform();
}

}  // namespace maxcode
