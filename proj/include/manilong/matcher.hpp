#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "manilong/cloud.hpp"
#include "manilong/se3.hpp"

namespace manilong {

inline constexpr double kDefaultTemperature = 1.0;
inline constexpr double kDefaultMatchThreshold = 0.1;

/// Routing key: scene descriptor plus gripper state and normalized timestep.
struct RouteFeature {
  std::vector<double> scene;
  bool gripper_open = true;
  double normalized_t = 0.0;
};

struct RoutingResult {
  std::size_t demo_index = 0;
  double distance = 0.0;
};

/// Macro-step whose feature vector (scene, w_g * gripper_open, normalized_t) is nearest
/// in Euclidean distance; ties to the lowest index. Throws InvalidInput for an empty
/// list and DimensionMismatch for scene descriptors of different length.
RoutingResult route_state(const RouteFeature& current, std::span<const RouteFeature> steps,
                          double gripper_weight = 1.0);

/// Dense row-major N x M matrix.
struct SoftMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
};

/// Row-softmax of L = h_region h_scene^T / temperature and the transposed row-softmax of
/// L^T (each column of `column_factor` sums to one).
struct SoftmaxFactors {
  SoftMatrix row_factor;
  SoftMatrix column_factor;
};

SoftmaxFactors softmax_factors(const DescriptorSet& h_region, const DescriptorSet& h_scene,
                               double temperature);

/// Elementwise product of the two softmax factors. Throws DimensionMismatch (different
/// D) or InvalidInput (empty input, temperature <= 0).
SoftMatrix dual_softmax(const DescriptorSet& h_region, const DescriptorSet& h_scene,
                        double temperature = kDefaultTemperature);

struct MatchPair {
  std::size_t i = 0;
  std::size_t j = 0;
  double weight = 0.0;
};

/// Mutual row/column argmax pairs (ties to the lowest index) with soft >= threshold,
/// ordered by row.
std::vector<MatchPair> binarize(const SoftMatrix& soft, double match_threshold = kDefaultMatchThreshold);

struct CorrespondenceMatrix {
  SoftMatrix soft;
  std::vector<MatchPair> pairs;
  std::size_t n_region = 0;
  std::size_t m_scene = 0;
};

CorrespondenceMatrix match_descriptors(const DescriptorSet& h_region, const DescriptorSet& h_scene,
                                       double temperature = kDefaultTemperature,
                                       double match_threshold = kDefaultMatchThreshold);

enum class PairWeighting { Soft, Uniform };

/// Pose T_j with T_j * demo_pose^-1 * region ~ scene over the binary pairs, weighted by
/// the soft values (or uniformly). Throws InsufficientMatches (< 3 pairs) and propagates
/// DegenerateInput from the solver.
Pose regress_pose(const CorrespondenceMatrix& corr, std::span<const Vec3> region_points,
                  std::span<const Vec3> scene_points, const Pose& demo_pose,
                  PairWeighting weighting = PairWeighting::Soft);

/// Objective value of `t` for the same pairs and weights as regress_pose.
double regression_residual(const CorrespondenceMatrix& corr, std::span<const Vec3> region_points,
                           std::span<const Vec3> scene_points, const Pose& demo_pose, const Pose& t,
                           PairWeighting weighting = PairWeighting::Soft);

/// Debug dump `{pairs: [[i, j, w], ...], residual: r}`.
nlohmann::json correspondence_dump(const CorrespondenceMatrix& corr, double residual);

/// Lifts rows to [h, -|h|^2/2, 1] (region) and [h, 1, -|h|^2/2] (scene) after
/// standardizing every column with the region's mean and spread (floored at 5% of the
/// spread over both sets), so that region-scene dot products equal -|a - b|^2 / 2.
void lift_for_distance_logits(DescriptorSet& region, DescriptorSet& scene);

}  // namespace manilong
