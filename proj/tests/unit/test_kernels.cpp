#include <doctest.h>

#include <cstring>

#include "manilong/kernels.hpp"
#include "test_util.hpp"

using namespace manilong;
using namespace manilong::kernels;

namespace {

std::vector<Vec3> random_points(std::mt19937_64& rng, std::size_t n) {
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(testutil::random_vec(rng, -3, 3));
  return pts;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("scalar kernels match direct evaluation") {
  std::mt19937_64 rng(11);
  const auto pts = random_points(rng, 37);
  const PointBlock block(pts);
  const Vec3 q{0.1, -0.2, 0.3};
  std::vector<double> d(pts.size());
  scalar_kernels().squared_distances(block.view(), q, d.data());
  std::size_t best = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 v = pts[i] - q;
    CHECK(same_bits(d[i], (v.x * v.x + v.y * v.y) + v.z * v.z));
    if (d[i] < d[best]) best = i;
  }
  CHECK(scalar_kernels().nearest(block.view(), q).index == best);

  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{1, 0, 2, 0, 1, 0, 1, 1, 1};  // 3 x 3
  std::vector<double> out(3);
  scalar_kernels().dot_row(a.data(), b.data(), 3, 3, 0.5, out.data());
  CHECK(out[0] == 2.0);
  CHECK(out[1] == 2.5);
  CHECK(out[2] == 2.5);
}

TEST_CASE("nearest tie goes to the lowest index") {
  const std::vector<Vec3> pts{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {1, 0, 0}, {0, 0, 1}, {0, -1, 0}};
  const PointBlock block(pts);
  CHECK(scalar_kernels().nearest(block.view(), {0, 0, 0}).index == 0);
  if (const KernelTable* avx = avx2_kernels()) CHECK(avx->nearest(block.view(), {0, 0, 0}).index == 0);
  std::vector<Vec3> many(21, Vec3{2, 2, 2});
  many[13] = {0.5, 0, 0};
  many[17] = {0, 0.5, 0};
  const PointBlock mb(many);
  CHECK(scalar_kernels().nearest(mb.view(), {0, 0, 0}).index == 13);
  if (const KernelTable* avx = avx2_kernels()) CHECK(avx->nearest(mb.view(), {0, 0, 0}).index == 13);
}

TEST_CASE("avx2 kernels are bit-identical to scalar") {
  const KernelTable* avx = avx2_kernels();
  if (avx == nullptr) {
    MESSAGE("AVX2 variant unavailable; equivalence skipped");
    return;
  }
  CHECK(avx->backend == Backend::Avx2);
  std::mt19937_64 rng(12);
  for (std::size_t n = 1; n < 70; ++n) {
    const auto pts = random_points(rng, n);
    const PointBlock block(pts);
    const Vec3 q = testutil::random_vec(rng, -3, 3);
    std::vector<double> ds(n), dv(n);
    scalar_kernels().squared_distances(block.view(), q, ds.data());
    avx->squared_distances(block.view(), q, dv.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(same_bits(ds[i], dv[i]));
    const Nearest ns = scalar_kernels().nearest(block.view(), q);
    const Nearest nv = avx->nearest(block.view(), q);
    CHECK(ns.index == nv.index);
    CHECK(same_bits(ns.squared_distance, nv.squared_distance));
  }
  std::uniform_real_distribution<double> u(-2, 2);
  for (std::size_t dims = 1; dims < 14; ++dims)
    for (std::size_t m = 1; m < 40; m += 3) {
      std::vector<double> a(dims), b(dims * m);
      for (double& v : a) v = u(rng);
      for (double& v : b) v = u(rng);
      std::vector<double> os(m), ov(m);
      scalar_kernels().dot_row(a.data(), b.data(), dims, m, 0.7, os.data());
      avx->dot_row(a.data(), b.data(), dims, m, 0.7, ov.data());
      for (std::size_t j = 0; j < m; ++j) CHECK(same_bits(os[j], ov[j]));
    }
}

TEST_CASE("active table is one of the variants") {
  const Backend b = active_kernels().backend;
  CHECK((b == Backend::Scalar || b == Backend::Avx2));
  CHECK(to_string(Backend::Scalar) == "scalar");
  CHECK(to_string(Backend::Avx2) == "avx2");
}
