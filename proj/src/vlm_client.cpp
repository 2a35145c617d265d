#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "manilong/error.hpp"
#include "manilong/vlm.hpp"

namespace manilong {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::InvalidInput, "endpoint URL needs a scheme: " + url);
  const std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string extract_content(const std::string& body) {
  nlohmann::json envelope;
  try {
    envelope = nlohmann::json::parse(body);
    const auto& content = envelope.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw Error(ErrorCode::MalformedJson, "content is not a string");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedJson, std::string("chat completion envelope: ") + e.what());
  }
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string call_chat_endpoint(const PromptDocument& prompt, const EndpointConfig& config) {
  const char* key = config.api_key_env.empty() ? nullptr : std::getenv(config.api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    throw Error(ErrorCode::MissingCredential,
                "environment variable '" + config.api_key_env + "' is not set");

  const ParsedUrl url = split_url(config.url);
  nlohmann::ordered_json request;
  request["model"] = config.model;
  request["messages"] = nlohmann::ordered_json::array(
      {nlohmann::ordered_json{{"role", "user"}, {"content", prompt.text}}});
  request["temperature"] = config.temperature;
  const std::string payload = request.dump();

  httplib::Client client(url.origin);
  const auto timeout = std::chrono::duration<double>(config.timeout_s);
  const auto secs = static_cast<time_t>(config.timeout_s);
  const auto usecs = static_cast<time_t>((config.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  const httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

  ErrorCode last_code = ErrorCode::Transport;
  std::string last_message;
  const int attempts = std::max(0, config.max_retries) + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(config.backoff_ms) * (1LL << (attempt - 1)));

    const auto started = std::chrono::steady_clock::now();
    auto result = client.Post(url.path, headers, payload, "application/json");
    if (!result) {
      const auto err = result.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                             ((err == httplib::Error::Read || err == httplib::Error::Write) &&
                              std::chrono::steady_clock::now() - started >= timeout);
      last_code = timed_out ? ErrorCode::Timeout : ErrorCode::Transport;
      last_message = httplib::to_string(err);
      continue;
    }
    if (result->status == 200) return extract_content(result->body);
    last_code = ErrorCode::Transport;
    last_message = "HTTP status " + std::to_string(result->status);
    if (!retryable_status(result->status)) break;
  }
  throw Error(last_code, last_message + " (" + config.url + ")");
}

}  // namespace manilong
