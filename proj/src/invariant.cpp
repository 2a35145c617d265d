#include "manilong/invariant.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "manilong/error.hpp"
#include "manilong/kernels.hpp"

namespace manilong {

namespace {

// |a^-1 p - b^-1 q| = |b a^-1 p - q|: query the other cloud in its own frame.
Pose relative(const StatePair& pair) { return compose(pair.pose_b, inverse(pair.pose_a)); }

void check_pairs(std::span<const StatePair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::InvalidInput, "need at least one state pair");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].state_a == nullptr || pairs[i].state_b == nullptr)
      throw Error(ErrorCode::InvalidInput, "state pair has a null state", static_cast<int>(i));
    if (pairs[i].state_a != pairs[0].state_a &&
        pairs[i].state_a->cloud.points != pairs[0].state_a->cloud.points)
      throw Error(ErrorCode::InvalidInput, "state_a differs across pairs", static_cast<int>(i));
  }
}

}  // namespace

bool check_invariant_point(const Vec3& p, std::span<const StatePair> pairs, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidInput, "epsilon must be positive");
  const auto& k = kernels::active_kernels();
  for (const StatePair& pair : pairs) {
    const LabeledCloud& cloud = pair.state_b->cloud;
    if (cloud.empty()) return false;
    const kernels::PointBlock block(cloud.points);
    const auto hit = k.nearest(block.view(), relative(pair).apply(p));
    if (!(std::sqrt(hit.squared_distance) < epsilon)) return false;
  }
  return true;
}

std::vector<SegmentScore> score_segments(std::span<const StatePair> pairs) {
  check_pairs(pairs);
  const LabeledCloud& cloud_a = pairs[0].state_a->cloud;
  const auto& k = kernels::active_kernels();

  std::vector<std::map<int, kernels::PointBlock>> by_class(pairs.size());
  std::vector<Pose> rel(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const LabeledCloud& b = pairs[i].state_b->cloud;
    for (std::size_t j = 0; j < b.size(); ++j) by_class[i][b.class_id[j]].push_back(b.points[j]);
    rel[i] = relative(pairs[i]);
  }

  std::vector<SegmentScore> out;
  for (int instance : cloud_a.instances()) {
    const auto idx = cloud_a.indices_of_instance(instance);
    SegmentScore score;
    score.instance_id = instance;
    score.class_id = cloud_a.class_id[idx.front()];
    double sum = 0.0;
    double worst = 0.0;
    bool feasible = true;
    for (std::size_t i = 0; i < pairs.size() && feasible; ++i) {
      auto it = by_class[i].find(score.class_id);
      if (it == by_class[i].end()) {
        feasible = false;
        break;
      }
      const auto view = it->second.view();
      for (std::size_t j : idx) {
        const double d = std::sqrt(k.nearest(view, rel[i].apply(cloud_a.points[j])).squared_distance);
        sum += d;
        worst = std::max(worst, d);
      }
    }
    if (feasible) {
      score.mean_displacement = sum / static_cast<double>(idx.size() * pairs.size());
      score.max_displacement = worst;
    }
    out.push_back(score);
  }
  return out;
}

InvariantRegion gt_invariant_region(std::span<const StatePair> pairs, PhaseKind phase_kind,
                                    std::optional<int> grasped_instance) {
  auto scores = score_segments(pairs);
  if (scores.empty()) throw Error(ErrorCode::InvalidInput, "state_a has no points");
  if (phase_kind == PhaseKind::PostContact) {
    const std::optional<int> grasped =
        grasped_instance ? grasped_instance : pairs[0].state_a->attached_instance;
    if (grasped)
      for (SegmentScore& s : scores)
        if (s.instance_id == *grasped) s.excluded = true;
  }
  const SegmentScore* best = nullptr;
  for (const SegmentScore& s : scores) {
    if (s.excluded || !std::isfinite(s.mean_displacement)) continue;
    if (best == nullptr || s.mean_displacement < best->mean_displacement) best = &s;
  }
  if (best == nullptr) throw Error(ErrorCode::NoFeasibleSegment, "every segment was excluded");
  return region_of_instance(pairs[0].state_a->cloud, best->instance_id);
}

std::vector<std::pair<std::size_t, std::size_t>> gt_correspondences(
    const LabeledCloud& cloud_a, const InvariantRegion& region_a, const LabeledCloud& cloud_b,
    const InvariantRegion& region_b, const Pose& pose_a, const Pose& pose_b) {
  if (region_a.indices.empty() || region_b.indices.empty())
    throw Error(ErrorCode::InvalidInput, "regions must be non-empty");
  kernels::PointBlock block;
  for (std::size_t j : region_b.indices) block.push_back(cloud_b.points.at(j));
  const Pose rel = compose(pose_b, inverse(pose_a));
  const auto& k = kernels::active_kernels();
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(region_a.indices.size());
  for (std::size_t i : region_a.indices) {
    const auto hit = k.nearest(block.view(), rel.apply(cloud_a.points.at(i)));
    out.emplace_back(i, region_b.indices[hit.index]);
  }
  return out;
}

InvariantRegion region_of_instance(const LabeledCloud& cloud, int instance, int state_ref) {
  InvariantRegion r;
  r.state_ref = state_ref;
  r.instance_id = instance;
  r.indices = cloud.indices_of_instance(instance);
  return r;
}

nlohmann::json to_json(const InvariantRegion& region) {
  return nlohmann::json{{"state_ref", region.state_ref},
                        {"instance_id", region.instance_id},
                        {"indices", region.indices}};
}

InvariantRegion region_from_json(const nlohmann::json& j) {
  try {
    InvariantRegion r;
    r.state_ref = j.at("state_ref").get<int>();
    r.instance_id = j.at("instance_id").get<int>();
    r.indices = j.at("indices").get<std::vector<std::size_t>>();
    if (!std::is_sorted(r.indices.begin(), r.indices.end()) ||
        std::adjacent_find(r.indices.begin(), r.indices.end()) != r.indices.end())
      throw Error(ErrorCode::InvalidInput, "region indices must be ascending and unique");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedJson, e.what());
  }
}

}  // namespace manilong
