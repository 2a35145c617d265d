#include <doctest.h>

#include "manilong/error.hpp"
#include "manilong/segmenter.hpp"

using namespace manilong;

namespace {

ProprioFrame frame(int t, bool open, double v) {
  ProprioFrame f;
  f.timestep = t;
  f.gripper_open = open;
  f.joint_velocities.fill(v);
  return f;
}

// Open 0-9 slowing to rest at 9, close command 10-11 at rest, closed and moving 12-19, open at 20.
std::vector<ProprioFrame> single_cycle(int offset = 0) {
  std::vector<ProprioFrame> out;
  for (int t = 0; t < 21; ++t) {
    double v = 0.2;
    bool open = true;
    if (t == 9) v = 0.0;
    if (t >= 10 && t <= 11) open = false, v = 0.0;
    if (t >= 12 && t <= 19) open = false, v = 0.3;
    if (t == 20) v = 0.1;
    out.push_back(frame(t + offset, open, v));
  }
  return out;
}

}  // namespace

TEST_CASE("single cycle boundaries") {
  const Decomposition d = segment_rule_based(single_cycle());
  REQUIRE(d.phases.size() == 3);
  CHECK(d.phases[0] == InteractionPhase{PhaseKind::PreContact, 0, 9});
  CHECK(d.phases[1] == InteractionPhase{PhaseKind::Grasping, 10, 11});
  CHECK(d.phases[2] == InteractionPhase{PhaseKind::PostContact, 12, 20});
  CHECK(d.source == DecompositionSource::RuleBased);
}

TEST_CASE("two cycles") {
  auto frames = single_cycle();
  const auto second = single_cycle(21);
  frames.insert(frames.end(), second.begin(), second.end());
  const Decomposition d = segment_rule_based(frames);
  REQUIRE(d.phases.size() == 6);
  const PhaseKind kinds[] = {PhaseKind::PreContact, PhaseKind::Grasping, PhaseKind::PostContact};
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(d.phases[i].kind == kinds[i % 3]);
    CHECK(d.phases[i].start == d.phases[i % 3].start + (i >= 3 ? 21 : 0));
    CHECK(d.phases[i].end == d.phases[i % 3].end + (i >= 3 ? 21 : 0));
  }
  validate_phases(d.phases);
}

TEST_CASE("grasp phase stops at motion") {
  auto frames = single_cycle();
  frames[11].joint_velocities.fill(0.5);
  const Decomposition d = segment_rule_based(frames);
  CHECK(d.phases[1] == InteractionPhase{PhaseKind::Grasping, 10, 10});
  CHECK(d.phases[2].start == 11);
}

TEST_CASE("segmenter errors") {
  std::vector<ProprioFrame> open;
  for (int t = 0; t < 10; ++t) open.push_back(frame(t, true, 0.1));
  try {
    segment_rule_based(open);
    FAIL("expected NoGraspDetected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoGraspDetected);
  }

  auto truncated = single_cycle();
  truncated.resize(15);
  try {
    segment_rule_based(truncated);
    FAIL("expected TruncatedCycle");
  } catch (const TruncatedCycleError& e) {
    CHECK(e.code() == ErrorCode::TruncatedCycle);
    REQUIRE(e.partial().phases.size() == 3);
    CHECK(e.partial().phases[2] == InteractionPhase{PhaseKind::PostContact, 12, 14});
  }

  auto repeated = single_cycle();
  repeated[5].timestep = 4;
  CHECK_THROWS_AS(segment_rule_based(repeated), Error);
  CHECK_THROWS_AS(segment_rule_based(std::vector<ProprioFrame>{frame(0, true, 0)}), Error);
}

TEST_CASE("macro-step sampling") {
  CHECK(sample_macro_steps({PhaseKind::PreContact, 0, 14}, 5) == std::vector<int>{0, 5, 10, 14});
  CHECK(sample_macro_steps({PhaseKind::PreContact, 0, 10}, 5) == std::vector<int>{0, 5, 10});
  CHECK(sample_macro_steps({PhaseKind::Grasping, 3, 3}, 5) == std::vector<int>{3});
  CHECK_THROWS_AS(sample_macro_steps({PhaseKind::Grasping, 3, 3}, 0), Error);
}

TEST_CASE("horizon classification") {
  auto with = [](int n) {
    Decomposition d;
    for (int i = 0; i < n; ++i) d.phases.push_back({static_cast<PhaseKind>(i % 3), i, i});
    return classify_horizon(d);
  };
  CHECK_FALSE(with(3).long_horizon);
  CHECK(with(6).long_horizon);
  CHECK(with(6).level == 1);
  CHECK(with(9).level == 2);
  CHECK(with(12).level == 3);
  CHECK(with(12).canonical);
  CHECK_FALSE(with(8).canonical);
  CHECK(with(8).level == 2);
  CHECK_THROWS_AS(with(0), Error);
}

TEST_CASE("stage names") {
  CHECK(stage_name(PhaseKind::PreContact) == "pre-contact");
  CHECK(parse_stage_name("grasping") == PhaseKind::Grasping);
  CHECK_FALSE(parse_stage_name("Grasping").has_value());
}
