#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "manilong/error.hpp"
#include "manilong/vlm.hpp"

using namespace manilong;

namespace {

std::string golden() {
  std::ifstream in(std::string(MANILONG_TEST_DATA) + "/phase_response_6.json");
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode parse_error(const std::string& body, int n, int* index = nullptr, bool lenient = false) {
  try {
    parse_response(body, n, {lenient});
  } catch (const Error& e) {
    if (index) *index = e.index();
    return e.code();
  }
  FAIL("expected a parse error");
  return ErrorCode::InvalidInput;
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

std::vector<ProprioFrame> frames(int n) {
  std::vector<ProprioFrame> out;
  for (int t = 0; t < n; ++t) {
    ProprioFrame f;
    f.timestep = t;
    f.gripper_open = t % 4 < 2;
    f.joint_velocities.fill(0.01 * t);
    f.ee_pose = Pose::from_translation({0.1 * t, 0.0, 0.3});
    out.push_back(f);
  }
  return out;
}

std::string chat_envelope(const std::string& content) {
  nlohmann::json j;
  j["choices"] = nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}});
  return j.dump();
}

class MockServer {
 public:
  MockServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

EndpointConfig endpoint_for(const MockServer& m) {
  EndpointConfig c;
  c.url = m.url();
  c.model = "mock-model";
  c.api_key_env = "MANILONG_TEST_KEY";
  c.timeout_s = 2.0;
  c.max_retries = 2;
  c.backoff_ms = 1;
  return c;
}

}  // namespace

TEST_CASE("prompt rendering") {
  const auto doc = render_prompt(frames(2), TaskType::A);
  CHECK(doc.text.find("pre-contact → grasping → post-contact") != std::string::npos);
  CHECK(doc.text.find("[Task Type A]") != std::string::npos);
  CHECK(doc.text.find("Output Format Requirements:") != std::string::npos);
  CHECK(doc.text.find("\"stage\"") != std::string::npos);
  CHECK(doc.records.size() == 2);
  CHECK(render_prompt(frames(2), TaskType::A).text == doc.text);
  CHECK(render_prompt(frames(2), TaskType::C).text.find("[Task Type C]") != std::string::npos);
  CHECK_THROWS_AS(render_prompt(std::vector<ProprioFrame>{}, TaskType::A), Error);

  const auto longer = render_prompt(frames(6), TaskType::A);
  CHECK(longer.records[2].event == "gripper closed");
  CHECK(longer.records[4].event == "gripper opened");
  CHECK(longer.records[5].event.empty());
}

TEST_CASE("golden response parses to six phases") {
  const Decomposition d = parse_response(golden(), 61);
  REQUIRE(d.phases.size() == 6);
  const InteractionPhase expect[] = {{PhaseKind::PreContact, 0, 14},   {PhaseKind::Grasping, 15, 17},
                                     {PhaseKind::PostContact, 18, 40}, {PhaseKind::PreContact, 41, 45},
                                     {PhaseKind::Grasping, 46, 48},    {PhaseKind::PostContact, 49, 60}};
  for (std::size_t i = 0; i < 6; ++i) CHECK(d.phases[i] == expect[i]);
  CHECK(d.source == DecompositionSource::Vlm);

  const Decomposition fenced = parse_response("Here you go:\n```json\n" + golden() + "```\n", 61);
  CHECK(fenced.phases == d.phases);
}

TEST_CASE("mutated responses raise their errors") {
  const std::string g = golden();
  int index = -1;
  CHECK(parse_error(replace_once(g, "\"start\": 15", "\"start\": 13"), 61, &index) == ErrorCode::Overlap);
  CHECK(index == 1);
  CHECK(parse_error(replace_once(g, "\"start\": 41", "\"start\": 43"), 61, &index) == ErrorCode::Gap);
  CHECK(index == 3);
  CHECK(parse_error(replace_once(g, "\"stage\": \"grasping\"", "\"stage\": \"post-contact\""), 61, &index) ==
        ErrorCode::CycleOrder);
  CHECK(index == 1);
  CHECK(parse_error(replace_once(g, "\"stage\": \"grasping\"", "\"stage\": \"holding\""), 61, &index) ==
        ErrorCode::UnknownStageName);
  CHECK(parse_error(g, 70, &index) == ErrorCode::RangeMismatch);
  CHECK(index == 5);
  CHECK(parse_error(g.substr(0, g.size() / 2), 61) == ErrorCode::MalformedJson);
  CHECK(parse_error("{\"stage\": \"pre-contact\"}", 61) == ErrorCode::MalformedJson);

  const std::string overlap =
      R"([{"stage":"pre-contact","start":0,"end":10},{"stage":"grasping","start":8,"end":20}])";
  CHECK(parse_error(overlap, 21, &index) == ErrorCode::Overlap);
  CHECK(index == 1);
  const std::string wrong_start = R"([{"stage":"grasping","start":0,"end":10}])";
  CHECK(parse_error(wrong_start, 11, &index) == ErrorCode::CycleOrder);
  CHECK(index == 0);
}

TEST_CASE("lenient mode repairs single-frame gaps only") {
  const std::string one = replace_once(golden(), "\"start\": 41", "\"start\": 42");
  CHECK(parse_error(one, 61) == ErrorCode::Gap);
  const Decomposition d = parse_response(one, 61, {true});
  CHECK(d.phases[2].end == 41);
  CHECK(d.phases[3].start == 42);
  const std::string two = replace_once(golden(), "\"start\": 41", "\"start\": 43");
  CHECK(parse_error(two, 61, nullptr, true) == ErrorCode::Gap);
}

TEST_CASE("decomposition json round trip") {
  const Decomposition d = parse_response(golden(), 61);
  const auto j = decomposition_to_json(d, "rule-based");
  CHECK(j[0]["reason"] == "rule-based");
  CHECK(j[0].begin().key() == "stage");
  CHECK(parse_response(j.dump(), 61).phases == d.phases);
}

TEST_CASE("parser survives random corruption") {
  const std::string g = golden();
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> pos(0, g.size() - 1);
  std::uniform_int_distribution<int> byte(32, 126);
  int parsed = 0;
  for (int i = 0; i < 2000; ++i) {
    std::string s = g;
    const int edits = 1 + i % 4;
    for (int e = 0; e < edits; ++e) {
      const std::size_t p = pos(rng);
      if (e % 3 == 2)
        s.erase(p % s.size(), 1);
      else
        s[p % s.size()] = static_cast<char>(byte(rng));
    }
    try {
      const Decomposition d = parse_response(s, 61);
      validate_phases(d.phases);
      CHECK(d.phases.back().end == 60);
      ++parsed;
    } catch (const Error&) {
    }
  }
  MESSAGE("corrupted bodies still valid: " << parsed);
}

TEST_CASE("client needs a credential before any request") {
  MockServer mock;
  std::atomic<int> hits{0};
  mock.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.set_content(chat_envelope("[]"), "application/json");
  });
  EndpointConfig cfg = endpoint_for(mock);
  cfg.api_key_env = "MANILONG_TEST_UNSET_KEY";
  ::unsetenv("MANILONG_TEST_UNSET_KEY");
  try {
    call_chat_endpoint(render_prompt(frames(2), TaskType::A), cfg);
    FAIL("expected MissingCredential");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingCredential);
  }
  CHECK(hits == 0);
}

TEST_CASE("client end to end with the golden response") {
  ::setenv("MANILONG_TEST_KEY", "secret-token", 1);
  MockServer mock;
  nlohmann::json seen;
  std::string auth;
  mock.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(chat_envelope("```json\n" + golden() + "```"), "application/json");
  });
  const auto prompt = render_prompt(frames(61), TaskType::A);
  const std::string reply = call_chat_endpoint(prompt, endpoint_for(mock));
  CHECK(parse_response(reply, 61).phases.size() == 6);
  CHECK(auth == "Bearer secret-token");
  CHECK(seen["model"] == "mock-model");
  CHECK(seen["messages"][0]["role"] == "user");
  CHECK(seen["messages"][0]["content"] == prompt.text);
  CHECK(seen["temperature"] == 0.0);
}

TEST_CASE("client retries server errors then reports transport") {
  ::setenv("MANILONG_TEST_KEY", "k", 1);
  MockServer mock;
  std::atomic<int> hits{0};
  mock.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  try {
    call_chat_endpoint(render_prompt(frames(2), TaskType::A), endpoint_for(mock));
    FAIL("expected Transport");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Transport);
  }
  CHECK(hits == 3);
}

TEST_CASE("client recovers after transient failures") {
  ::setenv("MANILONG_TEST_KEY", "k", 1);
  MockServer mock;
  std::atomic<int> hits{0};
  mock.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++hits < 3) {
      res.status = 503;
      return;
    }
    res.set_content(chat_envelope("ok"), "application/json");
  });
  CHECK(call_chat_endpoint(render_prompt(frames(2), TaskType::A), endpoint_for(mock)) == "ok");
  CHECK(hits == 3);
}

TEST_CASE("client does not retry client errors") {
  ::setenv("MANILONG_TEST_KEY", "k", 1);
  MockServer mock;
  std::atomic<int> hits{0};
  mock.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  CHECK_THROWS_AS(call_chat_endpoint(render_prompt(frames(2), TaskType::A), endpoint_for(mock)), Error);
  CHECK(hits == 1);
}

TEST_CASE("client timeout and bad envelope") {
  ::setenv("MANILONG_TEST_KEY", "k", 1);
  MockServer mock;
  mock.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(chat_envelope("late"), "application/json");
  });
  mock.server().Post("/garbled", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"choices\": []}", "application/json");
  });
  EndpointConfig cfg = endpoint_for(mock);
  cfg.timeout_s = 0.2;
  cfg.max_retries = 0;
  try {
    call_chat_endpoint(render_prompt(frames(2), TaskType::A), cfg);
    FAIL("expected Timeout");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Timeout);
  }
  cfg.url = replace_once(cfg.url, "/v1/chat/completions", "/garbled");
  cfg.timeout_s = 2.0;
  try {
    call_chat_endpoint(render_prompt(frames(2), TaskType::A), cfg);
    FAIL("expected MalformedJson");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedJson);
  }
}

TEST_CASE("unreachable endpoint is a transport error") {
  ::setenv("MANILONG_TEST_KEY", "k", 1);
  EndpointConfig cfg;
  cfg.url = "http://127.0.0.1:1/v1/chat/completions";
  cfg.api_key_env = "MANILONG_TEST_KEY";
  cfg.max_retries = 1;
  cfg.backoff_ms = 1;
  cfg.timeout_s = 1.0;
  try {
    call_chat_endpoint(render_prompt(frames(2), TaskType::A), cfg);
    FAIL("expected Transport");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Transport);
  }
}
