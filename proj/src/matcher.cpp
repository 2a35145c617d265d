#include "manilong/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "manilong/error.hpp"
#include "manilong/kernels.hpp"

namespace manilong {

namespace {
constexpr double kSpreadFloor = 0.05;
}  // namespace

RoutingResult route_state(const RouteFeature& current, std::span<const RouteFeature> steps,
                          double gripper_weight) {
  if (steps.empty()) throw Error(ErrorCode::InvalidInput, "no macro-steps to route to");
  RoutingResult best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const RouteFeature& f = steps[s];
    if (f.scene.size() != current.scene.size())
      throw Error(ErrorCode::DimensionMismatch, "scene descriptor length differs", static_cast<int>(s));
    double sq = 0.0;
    for (std::size_t d = 0; d < f.scene.size(); ++d) {
      const double diff = f.scene[d] - current.scene[d];
      sq += diff * diff;
    }
    const double g = gripper_weight * ((f.gripper_open ? 1.0 : 0.0) - (current.gripper_open ? 1.0 : 0.0));
    const double t = f.normalized_t - current.normalized_t;
    sq += g * g + t * t;
    const double dist = std::sqrt(sq);
    if (dist < best.distance) best = {s, dist};
  }
  return best;
}

namespace {

void softmax_inplace(std::span<double> v) {
  const double peak = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - peak);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

}  // namespace

SoftmaxFactors softmax_factors(const DescriptorSet& h_region, const DescriptorSet& h_scene,
                               double temperature) {
  if (h_region.dims != h_scene.dims)
    throw Error(ErrorCode::DimensionMismatch, "descriptor dimensions differ: " +
                std::to_string(h_region.dims) + " vs " + std::to_string(h_scene.dims));
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidInput, "temperature must be positive");
  const std::size_t n = h_region.size();
  const std::size_t m = h_scene.size();
  if (n == 0 || m == 0) throw Error(ErrorCode::InvalidInput, "descriptor sets must be non-empty");
  const std::size_t dims = h_region.dims;

  std::vector<double> scene_t(dims * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t d = 0; d < dims; ++d) scene_t[d * m + j] = h_scene.values[j * dims + d];

  SoftMatrix logits{n, m, std::vector<double>(n * m)};
  const auto& k = kernels::active_kernels();
  for (std::size_t i = 0; i < n; ++i)
    k.dot_row(&h_region.values[i * dims], scene_t.data(), dims, m, 1.0 / temperature,
              &logits.values[i * m]);

  SoftmaxFactors out{logits, SoftMatrix{n, m, std::vector<double>(n * m)}};
  for (std::size_t i = 0; i < n; ++i)
    softmax_inplace(std::span<double>(out.row_factor.values).subspan(i * m, m));
  std::vector<double> column(n);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = logits(i, j);
    softmax_inplace(column);
    for (std::size_t i = 0; i < n; ++i) out.column_factor(i, j) = column[i];
  }
  return out;
}

SoftMatrix dual_softmax(const DescriptorSet& h_region, const DescriptorSet& h_scene,
                        double temperature) {
  SoftmaxFactors f = softmax_factors(h_region, h_scene, temperature);
  SoftMatrix out = std::move(f.row_factor);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= f.column_factor.values[i];
  return out;
}

std::vector<MatchPair> binarize(const SoftMatrix& soft, double match_threshold) {
  std::vector<std::size_t> col_best(soft.cols, 0);
  for (std::size_t j = 0; j < soft.cols; ++j)
    for (std::size_t i = 1; i < soft.rows; ++i)
      if (soft(i, j) > soft(col_best[j], j)) col_best[j] = i;
  std::vector<MatchPair> out;
  for (std::size_t i = 0; i < soft.rows; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < soft.cols; ++j)
      if (soft(i, j) > soft(i, best)) best = j;
    if (soft.cols == 0 || col_best[best] != i) continue;
    const double w = soft(i, best);
    if (w >= match_threshold) out.push_back({i, best, w});
  }
  return out;
}

CorrespondenceMatrix match_descriptors(const DescriptorSet& h_region, const DescriptorSet& h_scene,
                                       double temperature, double match_threshold) {
  CorrespondenceMatrix c;
  c.soft = dual_softmax(h_region, h_scene, temperature);
  c.pairs = binarize(c.soft, match_threshold);
  c.n_region = c.soft.rows;
  c.m_scene = c.soft.cols;
  return c;
}

namespace {

std::pair<WeightedPointSet, WeightedPointSet> paired_sets(const CorrespondenceMatrix& corr,
                                                          std::span<const Vec3> region_points,
                                                          std::span<const Vec3> scene_points,
                                                          const Pose& demo_pose,
                                                          PairWeighting weighting) {
  const Pose to_action = inverse(demo_pose);
  WeightedPointSet src, dst;
  for (const MatchPair& p : corr.pairs) {
    if (p.i >= region_points.size() || p.j >= scene_points.size())
      throw Error(ErrorCode::InvalidInput, "correspondence index out of range");
    src.points.push_back(to_action.apply(region_points[p.i]));
    dst.points.push_back(scene_points[p.j]);
    src.weights.push_back(weighting == PairWeighting::Soft ? p.weight : 1.0);
    dst.weights.push_back(1.0);
  }
  return {std::move(src), std::move(dst)};
}

}  // namespace

Pose regress_pose(const CorrespondenceMatrix& corr, std::span<const Vec3> region_points,
                  std::span<const Vec3> scene_points, const Pose& demo_pose,
                  PairWeighting weighting) {
  if (corr.pairs.size() < 3)
    throw Error(ErrorCode::InsufficientMatches,
                std::to_string(corr.pairs.size()) + " matches, need at least 3");
  const auto [src, dst] = paired_sets(corr, region_points, scene_points, demo_pose, weighting);
  return solve_weighted_procrustes(src, dst);
}

double regression_residual(const CorrespondenceMatrix& corr, std::span<const Vec3> region_points,
                           std::span<const Vec3> scene_points, const Pose& demo_pose, const Pose& t,
                           PairWeighting weighting) {
  const auto [src, dst] = paired_sets(corr, region_points, scene_points, demo_pose, weighting);
  return weighted_residual(t, src, dst);
}

nlohmann::json correspondence_dump(const CorrespondenceMatrix& corr, double residual) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const MatchPair& p : corr.pairs) pairs.push_back({p.i, p.j, p.weight});
  return nlohmann::json{{"pairs", pairs}, {"residual", residual}};
}

void lift_for_distance_logits(DescriptorSet& region, DescriptorSet& scene) {
  if (region.dims != scene.dims)
    throw Error(ErrorCode::DimensionMismatch, "descriptor dimensions differ");
  const std::size_t dims = region.dims;
  const std::size_t total = region.size() + scene.size();
  if (total == 0) return;

  // Centre and scale by the region's own spread; a floor at a fraction of the pooled
  // spread keeps dimensions that are constant over the region (class, say) decisive.
  std::vector<double> mean(dims, 0.0), region_var(dims, 0.0), pooled_mean(dims, 0.0),
      pooled_var(dims, 0.0), scale(dims, 0.0);
  const double n_region = static_cast<double>(std::max<std::size_t>(region.size(), 1));
  for (std::size_t i = 0; i < region.size(); ++i)
    for (std::size_t d = 0; d < dims; ++d) mean[d] += region.row(i)[d] / n_region;
  for (std::size_t i = 0; i < region.size(); ++i)
    for (std::size_t d = 0; d < dims; ++d) region_var[d] += (region.row(i)[d] - mean[d]) * (region.row(i)[d] - mean[d]) / n_region;
  for (DescriptorSet* set : {&region, &scene})
    for (std::size_t i = 0; i < set->size(); ++i)
      for (std::size_t d = 0; d < dims; ++d) pooled_mean[d] += set->row(i)[d] / static_cast<double>(total);
  for (DescriptorSet* set : {&region, &scene})
    for (std::size_t i = 0; i < set->size(); ++i)
      for (std::size_t d = 0; d < dims; ++d) {
        const double diff = set->row(i)[d] - pooled_mean[d];
        pooled_var[d] += diff * diff / static_cast<double>(total);
      }
  for (std::size_t d = 0; d < dims; ++d) {
    const double spread = std::max(std::sqrt(region_var[d]), kSpreadFloor * std::sqrt(pooled_var[d]));
    scale[d] = spread > 1e-12 ? 1.0 / spread : 0.0;
  }

  auto lift = [&](DescriptorSet& set, bool is_region) {
    DescriptorSet out;
    out.dims = dims + 2;
    out.values.reserve(set.size() * out.dims);
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto r = set.row(i);
      double sq = 0.0;
      for (std::size_t d = 0; d < dims; ++d) {
        const double v = (r[d] - mean[d]) * scale[d];
        out.values.push_back(v);
        sq += v * v;
      }
      out.values.push_back(is_region ? -0.5 * sq : 1.0);
      out.values.push_back(is_region ? 1.0 : -0.5 * sq);
    }
    set = std::move(out);
  };
  lift(region, true);
  lift(scene, false);
}

}  // namespace manilong
