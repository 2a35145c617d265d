#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "manilong/cloud.hpp"
#include "manilong/error.hpp"
#include "test_util.hpp"

using namespace manilong;
using namespace testutil;

namespace {

LabeledCloud cloud_of(std::vector<Vec3> pts, int instance = 0, int cls = 0) {
  LabeledCloud c;
  for (const Vec3& p : pts) c.push_back(p, instance, cls);
  return c;
}

LabeledCloud random_cloud(std::mt19937_64& rng, std::size_t n, double extent) {
  LabeledCloud c;
  for (std::size_t i = 0; i < n; ++i) c.push_back(random_vec(rng, -extent, extent), static_cast<int>(i % 3), static_cast<int>(i % 3));
  return c;
}

// Full sort by (distance, index).
std::vector<std::size_t> brute_knn(const LabeledCloud& c, const Vec3& q, std::size_t k) {
  std::vector<std::size_t> idx(c.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return (c.points[a] - q).squared_norm() < (c.points[b] - q).squared_norm();
  });
  idx.resize(k);
  return idx;
}

}  // namespace

TEST_CASE("knn examples") {
  CHECK(knn(cloud_of({{0, 0, 0}}), {5, 5, 5}, 1) == std::vector<std::size_t>{0});
  CHECK(knn(cloud_of({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}), {0.9, 0, 0}, 2) == std::vector<std::size_t>{1, 0});
  CHECK(knn(cloud_of({{1, 0, 0}, {-1, 0, 0}}), {0, 0, 0}, 1) == std::vector<std::size_t>{0});
  try {
    knn(cloud_of({{0, 0, 0}}), {0, 0, 0}, 2);
    FAIL("expected KTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::KTooLarge);
  }
}

TEST_CASE("knn matches brute force, grid and linear paths") {
  std::mt19937_64 rng(21);
  for (std::size_t n : {50u, 3000u}) {
    const LabeledCloud c = random_cloud(rng, n, 1.0);
    const KnnIndex index(c.points);
    CHECK(index.uses_grid() == (n >= KnnIndex::kGridThreshold));
    for (int q = 0; q < 40; ++q) {
      const Vec3 query = random_vec(rng, -1.5, 1.5);
      for (std::size_t k : {1u, 7u, 25u}) CHECK(index.query(query, k) == brute_knn(c, query, k));
    }
  }
}

TEST_CASE("knn grid keeps index ties") {
  // Lattice points produce many exact distance ties.
  LabeledCloud c;
  for (int i = 0; i < 15; ++i)
    for (int j = 0; j < 15; ++j)
      for (int k = 0; k < 15; ++k) c.push_back({0.1 * i, 0.1 * j, 0.1 * k}, 0, 0);
  const KnnIndex index(c.points);
  CHECK(index.uses_grid());
  for (const Vec3& q : {Vec3{0.7, 0.7, 0.7}, Vec3{0.75, 0.7, 0.7}, Vec3{0, 0, 0}, Vec3{1.4, 0.05, 0.7}})
    CHECK(index.query(q, 19) == brute_knn(c, q, 19));
}

TEST_CASE("voxel downsample") {
  const LabeledCloud spread = cloud_of({{0, 0, 0}, {0.3, 0, 0}, {0, 0.6, 0.9}});
  const LabeledCloud one = voxel_downsample(spread, 10.0);
  REQUIRE(one.size() == 1);
  CHECK((one.points[0] - Vec3{0.1, 0.2, 0.3}).norm() < 1e-12);

  CHECK(voxel_downsample(cloud_of({{0, 0, 0}, {1, 0, 0}}), 0.1).size() == 2);

  const LabeledCloud square = cloud_of({{0.02, 0.02, 0.01}, {0.07, 0.02, 0.01}, {0.02, 0.07, 0.01}, {0.07, 0.07, 0.01}});
  const LabeledCloud single = voxel_downsample(square, 0.1);
  REQUIRE(single.size() == 1);
  CHECK((single.points[0] - Vec3{0.045, 0.045, 0.01}).norm() < 1e-12);

  LabeledCloud mixed;
  mixed.push_back({0.01, 0.01, 0.01}, 4, 2);
  mixed.push_back({0.02, 0.01, 0.01}, 7, 3);
  mixed.push_back({0.03, 0.01, 0.01}, 7, 3);
  const LabeledCloud m = voxel_downsample(mixed, 0.1);
  REQUIRE(m.size() == 1);
  CHECK(m.instance_id[0] == 7);
  CHECK(m.class_id[0] == 3);
  CHECK_THROWS_AS(voxel_downsample(mixed, 0.0), Error);
}

TEST_CASE("labels validation") {
  LabeledCloud c;
  c.push_back({0, 0, 0}, 1, 2);
  c.push_back({1, 0, 0}, 1, 3);
  CHECK_THROWS_AS(c.validate(), Error);
  LabeledCloud d = cloud_of({{0, 0, 0}});
  d.class_id.push_back(1);
  CHECK_THROWS_AS(d.validate(), Error);
}

TEST_CASE("descriptors on a plane") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  LabeledCloud plane;
  for (int i = 0; i < 400; ++i) plane.push_back({u(rng), u(rng), 0.2}, 0, 1);
  const DescriptorSet d = point_descriptors(plane, 12);
  CHECK(d.dims == descriptor::kDims);
  CHECK(d.size() == plane.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(d.row(i)[descriptor::kScattering] < 1e-9);
    CHECK(d.row(i)[descriptor::kHeight] == 0.0);
    CHECK(d.row(i)[descriptor::kClass] == 1.0);
  }
}

TEST_CASE("descriptor rigid invariance") {
  std::mt19937_64 rng(23);
  const LabeledCloud c = random_cloud(rng, 300, 0.3);
  const DescriptorSet base = point_descriptors(c, 10);
  const std::size_t invariant[] = {descriptor::kLinearity, descriptor::kPlanarity, descriptor::kScattering,
                                   descriptor::kCentroidDistance, descriptor::kDensity, descriptor::kClass};
  for (int t = 0; t < 20; ++t) {
    const Pose p = random_pose(rng, 2.0);
    const DescriptorSet moved = point_descriptors(transformed(c, p), 10);
    double worst = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t f : invariant) worst = std::max(worst, std::abs(moved.row(i)[f] - base.row(i)[f]));
    CHECK(worst < 1e-6);

    // Height is relative to the lowest point, so only tilt-free motions preserve it.
    const Pose flat(Mat3::rot_z(std::uniform_real_distribution<double>(-3, 3)(rng)), random_vec(rng, -2, 2));
    const DescriptorSet level = point_descriptors(transformed(c, flat), 10);
    double worst_h = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
      worst_h = std::max(worst_h, std::abs(level.row(i)[descriptor::kHeight] - base.row(i)[descriptor::kHeight]));
    CHECK(worst_h < 1e-6);
  }
}

TEST_CASE("descriptor class component separates clouds") {
  std::mt19937_64 rng(24);
  LabeledCloud a, b;
  for (int i = 0; i < 30; ++i) {
    const Vec3 p = random_vec(rng, -1, 1);
    a.push_back(p, 0, 2);
    b.push_back(p, 0, 5);
  }
  const DescriptorSet da = point_descriptors(a, 6), db = point_descriptors(b, 6);
  for (std::size_t i = 0; i < da.size(); ++i) CHECK(da.row(i)[descriptor::kClass] != db.row(i)[descriptor::kClass]);
  CHECK_THROWS_AS(point_descriptors(a, 3), Error);
  CHECK_THROWS_AS(point_descriptors(a, 31), Error);
}

TEST_CASE("scene descriptor") {
  const std::vector<int> vocab{0, 1, 2, 3};
  LabeledCloud c;
  c.push_back({0, 0, 0}, 0, 1);
  c.push_back({2, 0, 0}, 0, 1);
  c.push_back({1, 3, 0}, 1, 3);
  const auto d = scene_descriptor(c, vocab);
  CHECK(d == scene_descriptor(c, vocab));
  REQUIRE(d.size() == 10);
  CHECK(d[0] == 0.0);
  CHECK(d[1] == 2.0);
  CHECK(d[2] == 0.0);
  CHECK(d[3] == 1.0);
  CHECK(d[4] == doctest::Approx(1.0));
  CHECK(d[5] == doctest::Approx(1.0));
  CHECK(d[7] == 2.0);
  CHECK(d[8] == 3.0);

  const auto s = scene_descriptor(transformed(c, Pose::from_translation({1, 0, 0})), vocab);
  for (std::size_t i = 0; i < 4; ++i) CHECK(s[i] == d[i]);
  CHECK(s[4] - d[4] == doctest::Approx(1.0));
  CHECK(s[5] == doctest::Approx(d[5]));
  CHECK(s[6] == doctest::Approx(d[6]));

  LabeledCloud bad = c;
  bad.class_id[0] = 9;
  bad.class_id[1] = 9;
  try {
    scene_descriptor(bad, vocab);
    FAIL("expected UnknownClass");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownClass);
  }
}

TEST_CASE("cloud text round trip") {
  std::mt19937_64 rng(25);
  const LabeledCloud c = random_cloud(rng, 40, 1.0);
  std::stringstream ss;
  write_cloud_text(ss, c);
  const LabeledCloud back = read_cloud_text(ss);
  CHECK(back.points == c.points);
  CHECK(back.instance_id == c.instance_id);
  CHECK(back.class_id == c.class_id);
  std::stringstream bad("0 0 0 1\n");
  CHECK_THROWS_AS(read_cloud_text(bad), Error);
}
