// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

// Policy backends: text + frames in, completions with token log-probabilities
// out. ScriptedOracle answers from simulator ground truth (optionally
// corrupted by a fault schedule); ChatCompletionBackend talks to any
// OpenAI-style chat endpoint.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "euea/core.hpp"
#include "euea/sim.hpp"

namespace euea {

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;  // natural log, <= 0
};

enum class FinishReason { Stop, Length, Other };
std::string_view to_string(FinishReason r);

struct Completion {
  std::string text;
  std::vector<TokenLogprob> token_logprobs;
  FinishReason finish_reason = FinishReason::Stop;
};

/// -sum of token log-probabilities, optionally divided by the token count.
double total_nll(std::span<const TokenLogprob> tokens, bool length_normalized = false);
inline double total_nll(const Completion& c, bool length_normalized = false) {
  return total_nll(c.token_logprobs, length_normalized);
}

// Keys of GenerationRequest::context understood by local backends.
namespace ctx {
inline constexpr const char* kInstanceId = "instance_id";
inline constexpr const char* kSubgoalIndex = "subgoal_index";
inline constexpr const char* kSubgoalText = "subgoal_text";
inline constexpr const char* kAttempt = "attempt";
inline constexpr const char* kObject = "object";
inline constexpr const char* kAction = "action";
inline constexpr const char* kBox = "bbox";
inline constexpr const char* kFailedAction = "failed_action";
inline constexpr const char* kRecovery = "recovery";
}  // namespace ctx

struct GenerationRequest {
  std::string prompt_text;
  std::vector<Frame> frames;
  int max_tokens = 256;
  double temperature = 0.0;
  int sample_count = 1;
  std::optional<std::uint64_t> seed;
  // Structured side channel for local backends; never sent over the wire.
  std::optional<SkillKind> skill;
  std::map<std::string, std::string> context;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string name() const = 0;

  /// Returns exactly request.sample_count completions.
  virtual std::vector<Completion> generate(const GenerationRequest& request) = 0;

  /// Total NLL of `target_text` as the answer to the prompt. The default
  /// reuses a previously sampled completion with exactly that text and throws
  /// Unsupported when there is none.
  virtual double score(const std::string& prompt_text, const std::vector<Frame>& frames,
                       const std::string& target_text);

  /// Ground-truth hook called before each request of an episode. Remote
  /// backends ignore it.
  virtual void observe(const WorldState& /*state*/, const Task& /*task*/) {}

 protected:
  void remember(const GenerationRequest& request, const std::vector<Completion>& completions);

 private:
  static std::string cache_key(const std::string& prompt, const std::vector<Frame>& frames, const std::string& text);

  std::mutex cache_mu_;
  std::map<std::string, std::vector<TokenLogprob>> sampled_;
};

enum class Corruption { WrongBox, RepeatFailedAction, WrongObject };
std::string_view to_string(Corruption c);
std::optional<Corruption> parse_corruption(std::string_view s);

struct FaultRule {
  std::optional<int> subgoal_index;  // unset: every subgoal
  int attempt = 1;
  Corruption corruption = Corruption::WrongBox;
};

struct FaultSchedule {
  std::vector<FaultRule> rules;

  std::optional<Corruption> active(int subgoal_index, int attempt) const;
  bool empty() const noexcept { return rules.empty(); }
};

/// Log-probability the oracle assigns to each token of a non-canonical answer.
inline constexpr double kOracleOffAnswerLogprob = -1.3862943611198906;  // ln(1/4)

class ScriptedOracle : public Backend {
 public:
  explicit ScriptedOracle(FaultSchedule faults = {});

  std::string name() const override { return "oracle"; }
  std::vector<Completion> generate(const GenerationRequest& request) override;
  void observe(const WorldState& state, const Task& task) override;

  /// Registers dataset ground truth, answered by instance id.
  void add_answers(std::span<const SkillInstance> instances);

  const FaultSchedule& faults() const noexcept { return faults_; }

 private:
  struct Answer {
    std::string text;
    bool canonical = true;
  };
  Answer answer(const GenerationRequest& request) const;
  Answer world_answer(SkillKind kind, const GenerationRequest& request) const;

  FaultSchedule faults_;
  std::map<std::string, SkillOutput> answers_;
  std::optional<WorldState> world_;
  std::optional<Task> task_;
};

struct ChatCompletionConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model;
  std::string api_key;
  int timeout_seconds = 120;
  std::optional<std::filesystem::path> log_path;    // JSONL of request/response pairs
  std::optional<std::filesystem::path> frame_root;  // where pixel-less frames are loaded from
};

class ChatCompletionBackend : public Backend {
 public:
  explicit ChatCompletionBackend(ChatCompletionConfig config);

  std::string name() const override { return "chat:" + config_.model; }
  std::vector<Completion> generate(const GenerationRequest& request) override;

  /// Request body for `sample_count` draws; exposed for inspection.
  std::string request_body(const GenerationRequest& request, int sample_count) const;
  /// Parses a chat-completion response. Throws ProtocolError when choices or
  /// logprobs are missing.
  static std::vector<Completion> parse_body(const std::string& body);

 private:
  ChatCompletionConfig config_;
  std::string scheme_host_;
  std::string path_prefix_;
  std::mutex log_mu_;
};

}  // namespace euea
