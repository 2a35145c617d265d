#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "manilong/kernels.hpp"
#include "manilong/se3.hpp"

namespace manilong {

/// Point cloud with per-point instance and class labels.
struct LabeledCloud {
  std::vector<Vec3> points;
  std::vector<int> instance_id;
  std::vector<int> class_id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void push_back(const Vec3& p, int instance, int cls);

  /// Throws InvalidInput when label arrays disagree in length or an instance maps to
  /// more than one class.
  void validate() const;

  /// Sorted distinct instance ids.
  std::vector<int> instances() const;
  std::vector<std::size_t> indices_of_instance(int instance) const;
  LabeledCloud select(std::span<const std::size_t> indices) const;
};

LabeledCloud transformed(const LabeledCloud& cloud, const Pose& pose);

/// k-nearest-neighbour index. Brute force below kGridThreshold points, a uniform grid
/// above; both return identical results (ascending distance, ties by ascending index).
class KnnIndex {
 public:
  static constexpr std::size_t kGridThreshold = 2048;

  explicit KnnIndex(std::span<const Vec3> points);

  std::vector<std::size_t> query(const Vec3& q, std::size_t k) const;
  std::size_t size() const { return block_.size(); }
  bool uses_grid() const { return !cells_.empty(); }

 private:
  std::vector<std::size_t> query_brute(const Vec3& q, std::size_t k) const;
  std::vector<std::size_t> query_grid(const Vec3& q, std::size_t k) const;

  kernels::PointBlock block_;
  Vec3 origin_{};
  double cell_ = 0.0;
  long dims_[3] = {0, 0, 0};
  std::vector<std::vector<std::size_t>> cells_;
};

/// Throws KTooLarge if k > cloud size.
std::vector<std::size_t> knn(const LabeledCloud& cloud, const Vec3& query, std::size_t k);

/// One centroid per occupied voxel, ordered by voxel key; labels by majority instance
/// (ties to the lowest id), class taken from that instance.
LabeledCloud voxel_downsample(const LabeledCloud& cloud, double voxel);

/// Row-major N x dims matrix of per-point feature vectors.
struct DescriptorSet {
  std::size_t dims = 0;
  std::vector<double> values;

  std::size_t size() const { return dims == 0 ? 0 : values.size() / dims; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * dims, dims);
  }
  std::span<double> row(std::size_t i) { return std::span<double>(values).subspan(i * dims, dims); }
};

/// Layout of the handcrafted point descriptor.
namespace descriptor {
inline constexpr std::size_t kLinearity = 0;
inline constexpr std::size_t kPlanarity = 1;
inline constexpr std::size_t kScattering = 2;
inline constexpr std::size_t kHeight = 3;
inline constexpr std::size_t kCentroidDistance = 4;
inline constexpr std::size_t kPcaOffset = 5;  // 3 entries
inline constexpr std::size_t kDensity = 8;
inline constexpr std::size_t kClass = 9;
inline constexpr std::size_t kDims = 10;
inline constexpr double kDensityCap = 1e4;
}  // namespace descriptor

/// Per-point descriptors from the k-NN neighbourhood (self included) and the cloud's
/// global frame. Requires size >= k >= 4 (KTooLarge / InvalidInput otherwise).
DescriptorSet point_descriptors(const LabeledCloud& cloud, std::size_t k);

/// Per-class point-count histogram over `vocabulary`, then centroid and axis-aligned
/// extents. Throws UnknownClass for a class outside the vocabulary.
std::vector<double> scene_descriptor(const LabeledCloud& cloud, std::span<const int> vocabulary);

/// Text format: one `x y z instance_id class_id` line per point.
void write_cloud_text(std::ostream& out, const LabeledCloud& cloud);
LabeledCloud read_cloud_text(std::istream& in);

}  // namespace manilong
