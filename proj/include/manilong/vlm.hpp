#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "manilong/segmenter.hpp"

namespace manilong {

enum class TaskType { A, B, C, D };

TaskType parse_task_type(std::string_view s);

struct TimestepRecord {
  int t = 0;
  std::string obs;
  std::string action;
  std::string event;
  bool gripper_open = true;
  double joint_velocity = 0.0;  // max-norm over joints
};

struct PromptDocument {
  std::string text;
  std::vector<TimestepRecord> records;
};

/// Renders the phase-identification prompt for a trajectory. Deterministic: identical
/// input yields byte-identical text. Throws InvalidInput for an empty trajectory.
PromptDocument render_prompt(std::span<const ProprioFrame> frames, TaskType task_type);

struct StageRecord {
  std::string stage;
  int start = 0;
  int end = 0;
  std::string reason;
};

struct ParseOptions {
  /// Repairs single-frame gaps by extending the earlier phase.
  bool lenient = false;
};

/// Parses a `[{"stage","start","end","reason"}, ...]` response (optionally wrapped in
/// a fenced code block) and validates it against a trajectory of `trajectory_len`
/// frames. Errors carry the offending record index: MalformedJson, UnknownStageName,
/// Overlap, Gap, CycleOrder, RangeMismatch.
Decomposition parse_response(std::string_view body, int trajectory_len, ParseOptions options = {});

/// Stage records in the response schema; `reason` is used for every record.
nlohmann::ordered_json decomposition_to_json(const Decomposition& d, const std::string& reason = "rule-based");

struct EndpointConfig {
  std::string url = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout_s = 60.0;
  int max_retries = 3;
  int backoff_ms = 500;
  double temperature = 0.0;
};

/// Sends the prompt as a single user message to a chat-completion endpoint and returns
/// the assistant text. Transport failures and 5xx/429 responses are retried up to
/// `max_retries` times with exponential backoff. Throws MissingCredential (before any
/// network use), Timeout, Transport, or MalformedJson for an unreadable envelope.
std::string call_chat_endpoint(const PromptDocument& prompt, const EndpointConfig& config);

}  // namespace manilong
