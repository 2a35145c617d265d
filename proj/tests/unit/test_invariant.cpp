#include <doctest.h>

#include "manilong/error.hpp"
#include "manilong/invariant.hpp"
#include "test_util.hpp"

using namespace manilong;
using namespace testutil;

namespace {

void add_box(LabeledCloud& c, const Vec3& center, double half, int instance, int cls) {
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j)
      for (int k = -1; k <= 1; ++k) c.push_back(center + Vec3{i * half, j * half, k * half}, instance, cls);
}

TrajectoryState state_of(LabeledCloud c, std::optional<int> attached = std::nullopt) {
  TrajectoryState s;
  s.cloud = std::move(c);
  s.attached_instance = attached;
  return s;
}

}  // namespace

TEST_CASE("invariant point check") {
  LabeledCloud c;
  add_box(c, {0, 0, 0}, 0.05, 1, 1);
  const TrajectoryState s = state_of(c);
  const StatePair self{&s, &s, Pose::identity(), Pose::identity()};
  for (const Vec3& p : c.points) CHECK(check_invariant_point(p, {&self, 1}, 1e-6));

  LabeledCloud far;
  far.push_back({0.05, 0, 0}, 1, 1);
  const TrajectoryState f = state_of(far);
  const StatePair offset{&s, &f, Pose::identity(), Pose::identity()};
  CHECK_FALSE(check_invariant_point({0, 0, 0}, {&offset, 1}, 0.01));
  CHECK(check_invariant_point({0, 0, 0}, {&offset, 1}, 10.0));

  // Moving the action frame with the cloud cancels the displacement.
  const Pose t = Pose::from_translation({0.3, 0, 0});
  const TrajectoryState moved = state_of(transformed(c, t));
  const StatePair co{&s, &moved, Pose::identity(), t};
  for (const Vec3& p : c.points) CHECK(check_invariant_point(p, {&co, 1}, 1e-9));
  CHECK_THROWS_AS(check_invariant_point({0, 0, 0}, {&co, 1}, 0.0), Error);
}

TEST_CASE("ground-truth region examples") {
  LabeledCloud one;
  add_box(one, {0, 0, 0}, 0.05, 3, 1);
  const TrajectoryState s1 = state_of(one);
  const StatePair p1{&s1, &s1, Pose::identity(), Pose::identity()};
  CHECK(gt_invariant_region({&p1, 1}, PhaseKind::PreContact).instance_id == 3);

  // A moves with the action frame, B stays in the world.
  LabeledCloud a_state, b_state;
  const Pose t = Pose::from_translation({0.3, 0, 0});
  add_box(a_state, {0, 0, 0}, 0.05, 1, 1);
  add_box(a_state, {0.5, 0.5, 0}, 0.05, 2, 2);
  add_box(b_state, t.apply({0, 0, 0}), 0.05, 1, 1);
  add_box(b_state, {0.5, 0.5, 0}, 0.05, 2, 2);
  const TrajectoryState sa = state_of(a_state), sb = state_of(b_state);
  const StatePair pair{&sa, &sb, Pose::identity(), t};
  const auto scores = score_segments({&pair, 1});
  REQUIRE(scores.size() == 2);
  CHECK(scores[0].mean_displacement < 1e-12);
  // Brute force: each B point shifted by +0.3 in x against the unshifted B grid.
  double expect = 0.0;
  const auto b_idx = a_state.indices_of_instance(2);
  for (std::size_t i : b_idx) {
    double best = 1e9;
    for (std::size_t j : b_idx) best = std::min(best, (a_state.points[i] + Vec3{0.3, 0, 0} - a_state.points[j]).norm());
    expect += best / static_cast<double>(b_idx.size());
  }
  CHECK(scores[1].mean_displacement == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect > 0.2);
  const InvariantRegion r = gt_invariant_region({&pair, 1}, PhaseKind::PreContact);
  CHECK(r.instance_id == 1);
  CHECK(r.indices == a_state.indices_of_instance(1));
}

TEST_CASE("post-contact excludes the grasped segment") {
  // Grasped block (0) rides with the gripper; target slab (1) sits under the release
  // pose; distractor (2) is 0.5 m away in the action frame.
  const Pose release_a = Pose::from_translation({0.0, 0.0, 0.1});
  const Pose release_b = Pose::from_translation({0.2, 0.1, 0.1});
  LabeledCloud ca, cb;
  add_box(ca, release_a.apply({0, 0, -0.02}), 0.02, 0, 1);
  add_box(ca, {0, 0, 0}, 0.04, 1, 5);
  add_box(ca, {0.4, -0.2, 0}, 0.04, 2, 9);
  add_box(cb, release_b.apply({0, 0, -0.02}), 0.02, 0, 1);
  add_box(cb, {0.2, 0.1, 0}, 0.04, 1, 5);
  add_box(cb, {-0.1, -0.6, 0}, 0.04, 2, 9);
  const TrajectoryState sa = state_of(ca, 0), sb = state_of(cb, 0);
  const StatePair pair{&sa, &sb, release_a, release_b};
  CHECK(gt_invariant_region({&pair, 1}, PhaseKind::PreContact).instance_id == 0);
  CHECK(gt_invariant_region({&pair, 1}, PhaseKind::PostContact).instance_id == 1);
  CHECK(gt_invariant_region({&pair, 1}, PhaseKind::PostContact, 1).instance_id == 0);

  LabeledCloud only;
  add_box(only, {0, 0, 0}, 0.02, 0, 1);
  const TrajectoryState so = state_of(only, 0);
  const StatePair lone{&so, &so, Pose::identity(), Pose::identity()};
  try {
    gt_invariant_region({&lone, 1}, PhaseKind::PostContact);
    FAIL("expected NoFeasibleSegment");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoFeasibleSegment);
  }
}

TEST_CASE("missing class gives infinite cost") {
  LabeledCloud ca, cb;
  add_box(ca, {0, 0, 0}, 0.05, 1, 1);
  add_box(ca, {0.3, 0, 0}, 0.05, 2, 2);
  add_box(cb, {0.3, 0, 0}, 0.05, 2, 2);
  const TrajectoryState sa = state_of(ca), sb = state_of(cb);
  const StatePair pair{&sa, &sb, Pose::identity(), Pose::identity()};
  const auto scores = score_segments({&pair, 1});
  CHECK(std::isinf(scores[0].mean_displacement));
  CHECK(gt_invariant_region({&pair, 1}, PhaseKind::PreContact).instance_id == 2);
}

TEST_CASE("ground-truth correspondences") {
  std::mt19937_64 rng(41);
  LabeledCloud c;
  for (int i = 0; i < 30; ++i) c.push_back(random_vec(rng, -0.1, 0.1), 4, 1);
  const InvariantRegion r = region_of_instance(c, 4);

  const auto same = gt_correspondences(c, r, c, r, Pose::identity(), Pose::identity());
  for (std::size_t i = 0; i < same.size(); ++i) CHECK(same[i] == std::pair<std::size_t, std::size_t>{i, i});

  const Pose t = Pose::from_translation({0.25, -0.1, 0.05});
  const LabeledCloud moved = transformed(c, t);
  const auto shifted = gt_correspondences(c, r, moved, r, Pose::identity(), t);
  for (std::size_t i = 0; i < shifted.size(); ++i) CHECK(shifted[i].second == i);

  LabeledCloud reversed;
  for (std::size_t i = c.size(); i-- > 0;) reversed.push_back(c.points[i], 4, 1);
  const auto rev = gt_correspondences(c, r, reversed, region_of_instance(reversed, 4), Pose::identity(), Pose::identity());
  for (std::size_t i = 0; i < rev.size(); ++i) CHECK(rev[i].second == c.size() - 1 - i);

  CHECK_THROWS_AS(gt_correspondences(c, InvariantRegion{}, c, r, Pose::identity(), Pose::identity()), Error);
}

TEST_CASE("region json round trip") {
  const InvariantRegion r{2, 7, {1, 4, 9}};
  CHECK(region_from_json(to_json(r)) == r);
  CHECK_THROWS_AS(region_from_json(nlohmann::json{{"state_ref", 0}, {"instance_id", 1}, {"indices", {3, 1}}}), Error);
  CHECK_THROWS_AS(region_from_json(nlohmann::json{{"state_ref", 0}}), Error);
}
