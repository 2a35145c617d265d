#include "manilong/cloud.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "manilong/error.hpp"

namespace manilong {

void LabeledCloud::push_back(const Vec3& p, int instance, int cls) {
  points.push_back(p);
  instance_id.push_back(instance);
  class_id.push_back(cls);
}

void LabeledCloud::validate() const {
  if (instance_id.size() != points.size() || class_id.size() != points.size())
    throw Error(ErrorCode::InvalidInput, "label arrays must match the point count");
  std::unordered_map<int, int> class_of;
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto [it, inserted] = class_of.emplace(instance_id[i], class_id[i]);
    if (!inserted && it->second != class_id[i])
      throw Error(ErrorCode::InvalidInput,
                  "instance " + std::to_string(instance_id[i]) + " maps to two classes");
  }
}

std::vector<int> LabeledCloud::instances() const {
  std::vector<int> out = instance_id;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> LabeledCloud::indices_of_instance(int instance) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < instance_id.size(); ++i)
    if (instance_id[i] == instance) out.push_back(i);
  return out;
}

LabeledCloud LabeledCloud::select(std::span<const std::size_t> indices) const {
  LabeledCloud out;
  out.points.reserve(indices.size());
  out.instance_id.reserve(indices.size());
  out.class_id.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(points.at(i), instance_id.at(i), class_id.at(i));
  return out;
}

LabeledCloud transformed(const LabeledCloud& cloud, const Pose& pose) {
  LabeledCloud out = cloud;
  for (Vec3& p : out.points) p = pose.apply(p);
  return out;
}

// ---------------------------------------------------------------------------
// KnnIndex

namespace {

using Candidate = std::pair<double, std::size_t>;

std::vector<std::size_t> take_sorted(std::vector<Candidate>& cand, std::size_t k) {
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = cand[i].second;
  return out;
}

}  // namespace

KnnIndex::KnnIndex(std::span<const Vec3> points) : block_(points) {
  if (points.size() < kGridThreshold) return;
  Vec3 lo = points[0], hi = points[0];
  for (const Vec3& p : points) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  const Vec3 ext = hi - lo;
  // Aim for roughly 4 points per occupied cell on surface-like clouds.
  const double area_proxy =
      std::max({ext.x * ext.y, ext.y * ext.z, ext.x * ext.z, 1e-12});
  cell_ = std::max(std::sqrt(4.0 * area_proxy / static_cast<double>(points.size())), 1e-6);
  origin_ = lo;
  for (int a = 0; a < 3; ++a) dims_[a] = static_cast<long>(std::floor(ext[a] / cell_)) + 1;
  cells_.resize(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]));
  for (std::size_t i = 0; i < points.size(); ++i) {
    long c[3];
    for (int a = 0; a < 3; ++a)
      c[a] = std::clamp(static_cast<long>(std::floor((points[i][a] - origin_[a]) / cell_)), 0L,
                        dims_[a] - 1);
    cells_[static_cast<std::size_t>((c[2] * dims_[1] + c[1]) * dims_[0] + c[0])].push_back(i);
  }
}

std::vector<std::size_t> KnnIndex::query(const Vec3& q, std::size_t k) const {
  if (k > block_.size())
    throw Error(ErrorCode::KTooLarge,
                "k=" + std::to_string(k) + " exceeds cloud size " + std::to_string(block_.size()));
  if (k == 0) return {};
  return uses_grid() ? query_grid(q, k) : query_brute(q, k);
}

std::vector<std::size_t> KnnIndex::query_brute(const Vec3& q, std::size_t k) const {
  std::vector<double> d2(block_.size());
  kernels::active_kernels().squared_distances(block_.view(), q, d2.data());
  std::vector<Candidate> cand(d2.size());
  for (std::size_t i = 0; i < d2.size(); ++i) cand[i] = {d2[i], i};
  return take_sorted(cand, k);
}

std::vector<std::size_t> KnnIndex::query_grid(const Vec3& q, std::size_t k) const {
  long qc[3];
  for (int a = 0; a < 3; ++a)
    qc[a] = std::clamp(static_cast<long>(std::floor((q[a] - origin_[a]) / cell_)), 0L,
                       dims_[a] - 1);
  // The query may sit outside the grid; its clamped cell is at most this far away.
  double outside = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double lo = origin_[a] + static_cast<double>(qc[a]) * cell_;
    const double hi = lo + cell_;
    outside = std::max(outside, std::max(lo - q[a], q[a] - hi));
  }
  const long max_ring = std::max({dims_[0], dims_[1], dims_[2]});

  std::vector<Candidate> cand;
  for (long ring = 0; ring <= max_ring; ++ring) {
    for (long z = qc[2] - ring; z <= qc[2] + ring; ++z) {
      if (z < 0 || z >= dims_[2]) continue;
      for (long y = qc[1] - ring; y <= qc[1] + ring; ++y) {
        if (y < 0 || y >= dims_[1]) continue;
        for (long x = qc[0] - ring; x <= qc[0] + ring; ++x) {
          if (x < 0 || x >= dims_[0]) continue;
          const long cheb =
              std::max({std::abs(x - qc[0]), std::abs(y - qc[1]), std::abs(z - qc[2])});
          if (cheb != ring) continue;
          for (std::size_t i : cells_[static_cast<std::size_t>((z * dims_[1] + y) * dims_[0] + x)]) {
            const double dx = block_.view().x[i] - q.x;
            const double dy = block_.view().y[i] - q.y;
            const double dz = block_.view().z[i] - q.z;
            cand.emplace_back((dx * dx + dy * dy) + dz * dz, i);
          }
        }
      }
    }
    if (cand.size() >= k) {
      // Anything beyond this ring is at least `bound` away.
      const double bound = std::max(0.0, static_cast<double>(ring) * cell_ - outside);
      std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k - 1), cand.end());
      if (cand[k - 1].first < bound * bound) break;
    }
  }
  return take_sorted(cand, k);
}

std::vector<std::size_t> knn(const LabeledCloud& cloud, const Vec3& query, std::size_t k) {
  if (k > cloud.size())
    throw Error(ErrorCode::KTooLarge,
                "k=" + std::to_string(k) + " exceeds cloud size " + std::to_string(cloud.size()));
  return KnnIndex(cloud.points).query(query, k);
}

// ---------------------------------------------------------------------------

LabeledCloud voxel_downsample(const LabeledCloud& cloud, double voxel) {
  if (!(voxel > 0.0)) throw Error(ErrorCode::InvalidInput, "voxel size must be positive");
  cloud.validate();
  using Key = std::array<long long, 3>;
  std::map<Key, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    groups[{static_cast<long long>(std::floor(p.x / voxel)),
            static_cast<long long>(std::floor(p.y / voxel)),
            static_cast<long long>(std::floor(p.z / voxel))}]
        .push_back(i);
  }
  LabeledCloud out;
  for (const auto& [key, members] : groups) {
    Vec3 sum{};
    std::map<int, std::size_t> votes;
    for (std::size_t i : members) {
      sum += cloud.points[i];
      ++votes[cloud.instance_id[i]];
    }
    int instance = votes.begin()->first;
    std::size_t best = 0;
    for (const auto& [id, count] : votes)
      if (count > best) {
        best = count;
        instance = id;
      }
    int cls = 0;
    for (std::size_t i : members)
      if (cloud.instance_id[i] == instance) {
        cls = cloud.class_id[i];
        break;
      }
    out.push_back(members.size() == 1 ? cloud.points[members[0]]
                                      : sum / static_cast<double>(members.size()),
                  instance, cls);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Vec3 centroid_of(std::span<const Vec3> pts) {
  Vec3 c{};
  for (const Vec3& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

Mat3 covariance_of(std::span<const Vec3> pts, const Vec3& c) {
  Mat3 cov = Mat3::zero();
  for (const Vec3& p : pts) cov = cov + Mat3::outer(p - c, p - c);
  return cov * (1.0 / static_cast<double>(pts.size()));
}

/// Flips each eigenvector so its largest-magnitude component is positive.
Mat3 canonical_axes(const Mat3& vectors) {
  Mat3 out = vectors;
  for (int c = 0; c < 3; ++c) {
    const Vec3 e = vectors.column(c);
    int dominant = 0;
    for (int a = 1; a < 3; ++a)
      if (std::abs(e[a]) > std::abs(e[dominant])) dominant = a;
    if (e[dominant] < 0.0)
      for (int r = 0; r < 3; ++r) out(r, c) = -out(r, c);
  }
  return out;
}

}  // namespace

DescriptorSet point_descriptors(const LabeledCloud& cloud, std::size_t k) {
  namespace d = descriptor;
  if (k < 4) throw Error(ErrorCode::InvalidInput, "descriptor neighbourhood k must be >= 4");
  if (k > cloud.size())
    throw Error(ErrorCode::KTooLarge,
                "k=" + std::to_string(k) + " exceeds cloud size " + std::to_string(cloud.size()));
  cloud.validate();

  const std::size_t n = cloud.size();
  const Vec3 centroid = centroid_of(cloud.points);
  const Mat3 axes = canonical_axes(symmetric_eigen3(covariance_of(cloud.points, centroid)).vectors);
  double min_z = cloud.points[0].z;
  for (const Vec3& p : cloud.points) min_z = std::min(min_z, p.z);

  const KnnIndex index(cloud.points);
  DescriptorSet out{d::kDims, std::vector<double>(n * d::kDims, 0.0)};
  std::vector<Vec3> neigh(k);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& p = cloud.points[i];
    const std::vector<std::size_t> nn = index.query(p, k);
    double dist_sum = 0.0;
    std::size_t others = 0;
    for (std::size_t j = 0; j < k; ++j) {
      neigh[j] = cloud.points[nn[j]];
      if (nn[j] != i) {
        dist_sum += (neigh[j] - p).norm();
        ++others;
      }
    }
    const Vec3 local_c = centroid_of(neigh);
    const Vec3 ev = symmetric_eigen3(covariance_of(neigh, local_c)).values;
    auto row = out.row(i);
    const double l1 = std::max(ev.x, 0.0), l2 = std::max(ev.y, 0.0), l3 = std::max(ev.z, 0.0);
    if (l1 > 0.0) {
      row[d::kLinearity] = (l1 - l2) / l1;
      row[d::kPlanarity] = (l2 - l3) / l1;
      row[d::kScattering] = l3 / l1;
    }
    row[d::kHeight] = p.z - min_z;
    const Vec3 off = p - centroid;
    row[d::kCentroidDistance] = off.norm();
    for (int a = 0; a < 3; ++a) row[d::kPcaOffset + static_cast<std::size_t>(a)] = axes.column(a).dot(off);
    const double mean_dist = others ? dist_sum / static_cast<double>(others) : 0.0;
    row[d::kDensity] = mean_dist > 1.0 / d::kDensityCap ? 1.0 / mean_dist : d::kDensityCap;
    row[d::kClass] = static_cast<double>(cloud.class_id[i]);
  }
  return out;
}

std::vector<double> scene_descriptor(const LabeledCloud& cloud, std::span<const int> vocabulary) {
  if (cloud.empty()) throw Error(ErrorCode::InvalidInput, "scene descriptor needs a point");
  std::vector<double> out(vocabulary.size() + 6, 0.0);
  Vec3 lo = cloud.points[0], hi = cloud.points[0], sum{};
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto it = std::find(vocabulary.begin(), vocabulary.end(), cloud.class_id[i]);
    if (it == vocabulary.end())
      throw Error(ErrorCode::UnknownClass,
                  "class " + std::to_string(cloud.class_id[i]) + " not in vocabulary");
    out[static_cast<std::size_t>(it - vocabulary.begin())] += 1.0;
    const Vec3& p = cloud.points[i];
    sum += p;
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  const Vec3 c = sum / static_cast<double>(cloud.size());
  const std::size_t v = vocabulary.size();
  out[v + 0] = c.x;
  out[v + 1] = c.y;
  out[v + 2] = c.z;
  out[v + 3] = hi.x - lo.x;
  out[v + 4] = hi.y - lo.y;
  out[v + 5] = hi.z - lo.z;
  return out;
}

void write_cloud_text(std::ostream& out, const LabeledCloud& cloud) {
  std::ostringstream line;
  line << std::setprecision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    line.str("");
    line << p.x << ' ' << p.y << ' ' << p.z << ' ' << cloud.instance_id[i] << ' '
         << cloud.class_id[i] << '\n';
    out << line.str();
  }
}

LabeledCloud read_cloud_text(std::istream& in) {
  LabeledCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    Vec3 p;
    int inst = 0, cls = 0;
    if (!(fields >> p.x >> p.y >> p.z >> inst >> cls))
      throw Error(ErrorCode::InvalidInput, "malformed cloud line " + std::to_string(lineno));
    cloud.push_back(p, inst, cls);
  }
  return cloud;
}

}  // namespace manilong
