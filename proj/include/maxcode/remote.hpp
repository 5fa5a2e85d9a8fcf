#pragma once

#include <atomic>
#include <optional>
#include <string>
#include <vector>

#include "maxcode/agents.hpp"
#include "maxcode/valuedata.hpp"

namespace maxcode {

struct RemoteConfig {
  std::string base_url;                        // e.g. http://localhost:8080
  std::string api_path = "/v1/chat/completions";
  std::string api_key;
  std::string model;
  int max_retries = 3;
  int timeout_s = 120;
  int retry_backoff_ms = 200;
};

// Minimal chat-completions client: system+user messages in, message contents
// out. Retries transport failures and 5xx responses, then throws
// InfrastructureError.
class ChatClient {
 public:
  explicit ChatClient(RemoteConfig config);
  std::vector<std::string> complete(const std::string& system, const std::string& user,
                                    double temperature, int n, int max_tokens,
                                    std::optional<std::uint64_t> seed);
  const RemoteConfig& config() const { return config_; }

 private:
  RemoteConfig config_;
};

class RemotePolicyAgent : public PolicyAgent {
 public:
  explicit RemotePolicyAgent(RemoteConfig config) : client_(std::move(config)) {}
  std::vector<std::string> generate(const AgentRequest& request,
                                    const PromptContext& ctx) override;
  std::string id() const override { return "remote:" + client_.config().model; }

 private:
  ChatClient client_;
};

class RemoteCriticAgent : public CriticAgent {
 public:
  explicit RemoteCriticAgent(RemoteConfig config) : client_(std::move(config)) {}
  std::string critique(const AgentRequest& request, const PromptContext& ctx) override;
  std::string id() const override { return "remote-critic:" + client_.config().model; }

 private:
  ChatClient client_;
};

// Maps the model's single-digit reply to a one-hot distribution; anything
// unparseable becomes a uniform distribution and bumps parse_failures.
class RemoteValuePredictor : public ValuePredictor {
 public:
  explicit RemoteValuePredictor(RemoteConfig config, double temperature = 0.7)
      : client_(std::move(config)), temperature_(temperature) {}
  CategoricalValue predict(const std::string& prefix_render, int u_cat,
                           int remaining_rounds) override;
  std::string id() const override { return "remote-value:" + client_.config().model; }
  long long parse_failures() const { return parse_failures_.load(); }

 private:
  ChatClient client_;
  double temperature_;
  std::atomic<long long> parse_failures_{0};
};

// Digit-parse rule shared with tests: first digit character decides; 0-4 is
// a category, anything else is unparseable.
std::optional<int> parse_category_reply(const std::string& reply);

}  // namespace maxcode
