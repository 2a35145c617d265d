#include "manilong/vlm.hpp"

#include <cstdio>
#include <sstream>

#include "manilong/error.hpp"

namespace manilong {

namespace {

constexpr std::string_view kObjective =
    "Task Objective:\n"
    "Please review a time-ordered sequence of data and identify the key phases or sub-tasks "
    "within it. The task should be segmented into the following repeating phases: "
    "`pre-contact`, `grasping`, `post-contact`. Continue identifying and segmenting the phases "
    "in this sequence (pre-contact → grasping → post-contact → pre-contact → grasping → "
    "post-contact...) until the entire task is completed.\n";

constexpr std::string_view kInputFormat =
    "Input Format Explanation:\n"
    "You will receive a sequence of data with multiple time steps. Each time step will contain "
    "the following fields (which can be omitted or replaced as per the actual task):\n"
    "[\n"
    "  {\n"
    "    \"t\": 0,\n"
    "    \"obs\": \"observation at timestep 0\",\n"
    "    \"action\": \"action taken at timestep 0\",\n"
    "    \"event\": \"optional event log\",\n"
    "    \"sensor\": {\"gripper_state\": ..., \"joint_velocity\": ..., ...}\n"
    "  },\n"
    "  ...\n"
    "]\n";

constexpr std::string_view kOutputFormat =
    "Output Format Requirements:\n"
    "Please return the identified phases in JSON format. Each phase should contain the "
    "following fields:\n"
    "[\n"
    "  {\n"
    "    \"stage\": \"name of the stage (e.g., pre-contact, grasping, post-contact)\",\n"
    "    \"start\": start_timestep,\n"
    "    \"end\": end_timestep,\n"
    "    \"reason\": \"brief reason for identifying this segment\"\n"
    "  },\n"
    "  ...\n"
    "]\n"
    "Please ensure:\n"
    "- All phases are continuous and non-overlapping.\n"
    "- Each phase boundary is determined based on input data (e.g., changes in gripper state, "
    "joint velocity, action intent, or state transitions).\n"
    "- The sequence of phases must repeat in the following order until the entire task is "
    "completed: `pre-contact → grasping → post-contact → pre-contact → grasping → "
    "post-contact ...`\n";

std::string_view task_instruction(TaskType type) {
  switch (type) {
    case TaskType::A:
      return "[Task Type A]: Physical Interaction Phase Identification\n"
             "Segment physical interaction phases based on signals like object contact, "
             "grasping, placing, etc.\n";
    case TaskType::B:
      return "[Task Type B]: Language Instruction Task Phase Analysis\n"
             "Segment the sequence of sub-tasks based on robot actions performed as per "
             "language instructions (e.g., \"open drawer and place cup\").\n";
    case TaskType::C:
      return "[Task Type C]: Anomaly Detection & Phase Re-labeling\n"
             "Detect any failed or interrupted phases and re-label the task phases "
             "accordingly.\n";
    case TaskType::D:
      return "[Task Type D]: Multi-Modal Cooperative Understanding\n"
             "Identify structured semantic phases based on image + action/sensor data for task "
             "progress.\n";
  }
  return "";
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

TaskType parse_task_type(std::string_view s) {
  if (s == "A" || s == "a") return TaskType::A;
  if (s == "B" || s == "b") return TaskType::B;
  if (s == "C" || s == "c") return TaskType::C;
  if (s == "D" || s == "d") return TaskType::D;
  throw Error(ErrorCode::InvalidInput, "task type must be one of A, B, C, D");
}

PromptDocument render_prompt(std::span<const ProprioFrame> frames, TaskType task_type) {
  if (frames.empty()) throw Error(ErrorCode::InvalidInput, "prompt needs at least one frame");
  PromptDocument doc;
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const ProprioFrame& f = frames[i];
    TimestepRecord r;
    r.t = f.timestep;
    r.gripper_open = f.gripper_open;
    r.joint_velocity = f.max_abs_velocity();
    const Vec3& p = f.ee_pose.translation();
    r.obs = "end-effector at (" + fixed(p.x, 4) + ", " + fixed(p.y, 4) + ", " + fixed(p.z, 4) + ")";
    r.action = f.gripper_open ? "gripper open" : "gripper close";
    if (i > 0 && frames[i - 1].gripper_open != f.gripper_open)
      r.event = f.gripper_open ? "gripper opened" : "gripper closed";
    doc.records.push_back(r);

    nlohmann::ordered_json rec;
    rec["t"] = r.t;
    rec["obs"] = r.obs;
    rec["action"] = r.action;
    rec["event"] = r.event;
    rec["sensor"] = {{"gripper_state", r.gripper_open ? "open" : "closed"},
                     {"joint_velocity", fixed(r.joint_velocity, 6)}};
    records.push_back(std::move(rec));
  }

  std::ostringstream text;
  text << kObjective << '\n'
       << kInputFormat << '\n'
       << kOutputFormat << '\n'
       << "Task Instructions:\n"
       << task_instruction(task_type) << '\n'
       << "Trajectory Data:\n"
       << records.dump(2) << '\n';
  doc.text = text.str();
  return doc;
}

namespace {

std::string_view strip_fence(std::string_view body) {
  const std::size_t open = body.find("```");
  if (open == std::string_view::npos) return body;
  std::size_t content = body.find('\n', open);
  if (content == std::string_view::npos) return body.substr(open + 3);
  ++content;
  const std::size_t close = body.find("```", content);
  return body.substr(content, close == std::string_view::npos ? std::string_view::npos
                                                              : close - content);
}

int read_int(const nlohmann::json& rec, const char* key, int index) {
  if (!rec.contains(key) || !rec[key].is_number_integer())
    throw Error(ErrorCode::MalformedJson, std::string("record needs integer '") + key + "'", index);
  const auto v = rec[key].get<long long>();
  if (v < -(1LL << 30) || v > (1LL << 30))
    throw Error(ErrorCode::RangeMismatch, std::string("'") + key + "' out of range", index);
  return static_cast<int>(v);
}

}  // namespace

Decomposition parse_response(std::string_view body, int trajectory_len, ParseOptions options) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(strip_fence(body));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedJson, e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::MalformedJson, "response must be a JSON array");
  if (doc.empty()) throw Error(ErrorCode::RangeMismatch, "no stages in response");

  Decomposition out;
  out.source = DecompositionSource::Vlm;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const int idx = static_cast<int>(i);
    const nlohmann::json& rec = doc[i];
    if (!rec.is_object()) throw Error(ErrorCode::MalformedJson, "stage record must be an object", idx);
    if (!rec.contains("stage") || !rec["stage"].is_string())
      throw Error(ErrorCode::MalformedJson, "record needs string 'stage'", idx);
    if (rec.contains("reason") && !rec["reason"].is_string())
      throw Error(ErrorCode::MalformedJson, "'reason' must be a string", idx);
    const auto stage = rec["stage"].get<std::string>();
    const auto kind = parse_stage_name(stage);
    if (!kind) throw Error(ErrorCode::UnknownStageName, "unknown stage '" + stage + "'", idx);
    const int start = read_int(rec, "start", idx);
    const int end = read_int(rec, "end", idx);

    if (static_cast<int>(*kind) != idx % 3)
      throw Error(ErrorCode::CycleOrder, "expected '" +
                  std::string(stage_name(static_cast<PhaseKind>(idx % 3))) + "'", idx);
    if (start > end) throw Error(ErrorCode::RangeMismatch, "start after end", idx);
    if (i == 0) {
      if (start != 0) throw Error(ErrorCode::RangeMismatch, "first stage must start at 0", idx);
    } else {
      InteractionPhase& prev = out.phases.back();
      if (start <= prev.end) throw Error(ErrorCode::Overlap, "stage overlaps its predecessor", idx);
      if (start > prev.end + 1) {
        if (options.lenient && start == prev.end + 2)
          prev.end = start - 1;
        else
          throw Error(ErrorCode::Gap, "frames missing before stage", idx);
      }
    }
    out.phases.push_back({*kind, start, end});
  }
  if (out.phases.size() % 3 != 0)
    throw Error(ErrorCode::CycleOrder, "response ends mid-cycle", static_cast<int>(out.phases.size()));
  if (out.phases.back().end != trajectory_len - 1)
    throw Error(ErrorCode::RangeMismatch,
                "stages cover [0, " + std::to_string(out.phases.back().end) + "] but trajectory has " +
                    std::to_string(trajectory_len) + " frames",
                static_cast<int>(out.phases.size()) - 1);
  return out;
}

nlohmann::ordered_json decomposition_to_json(const Decomposition& d, const std::string& reason) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const InteractionPhase& p : d.phases) {
    nlohmann::ordered_json rec;
    rec["stage"] = std::string(stage_name(p.kind));
    rec["start"] = p.start;
    rec["end"] = p.end;
    rec["reason"] = reason;
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace manilong
