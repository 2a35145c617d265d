// Compiled with -mavx2 (no -mfma) and -ffp-contract=off; only reached after a runtime
// CPU check in dispatch.cpp.

#include <immintrin.h>

#include "kernels_impl.hpp"

namespace manilong::kernels::detail {

namespace {

inline __m256d lane_d2(const double* x, const double* y, const double* z, __m256d qx, __m256d qy,
                       __m256d qz) {
  const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x), qx);
  const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y), qy);
  const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(z), qz);
  const __m256d xy = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
  return _mm256_add_pd(xy, _mm256_mul_pd(dz, dz));
}

}  // namespace

void squared_distances_avx2(PointsView points, Vec3 q, double* out) {
  const __m256d qx = _mm256_set1_pd(q.x);
  const __m256d qy = _mm256_set1_pd(q.y);
  const __m256d qz = _mm256_set1_pd(q.z);
  std::size_t i = 0;
  for (; i + 4 <= points.size; i += 4)
    _mm256_storeu_pd(out + i, lane_d2(points.x + i, points.y + i, points.z + i, qx, qy, qz));
  PointsView tail{points.x + i, points.y + i, points.z + i, points.size - i};
  squared_distances_scalar(tail, q, out + i);
}

Nearest nearest_avx2(PointsView points, Vec3 q) {
  if (points.size < 8) return nearest_scalar(points, q);
  const __m256d qx = _mm256_set1_pd(q.x);
  const __m256d qy = _mm256_set1_pd(q.y);
  const __m256d qz = _mm256_set1_pd(q.z);

  // Per-lane running minimum; strict '<' keeps the earliest index within a lane.
  __m256d best = lane_d2(points.x, points.y, points.z, qx, qy, qz);
  __m256d best_idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  __m256d idx = best_idx;
  const __m256d four = _mm256_set1_pd(4.0);
  std::size_t i = 4;
  for (; i + 4 <= points.size; i += 4) {
    idx = _mm256_add_pd(idx, four);
    const __m256d d2 = lane_d2(points.x + i, points.y + i, points.z + i, qx, qy, qz);
    const __m256d lt = _mm256_cmp_pd(d2, best, _CMP_LT_OQ);
    best = _mm256_blendv_pd(best, d2, lt);
    best_idx = _mm256_blendv_pd(best_idx, idx, lt);
  }

  alignas(32) double lane_best[4];
  alignas(32) double lane_idx[4];
  _mm256_store_pd(lane_best, best);
  _mm256_store_pd(lane_idx, best_idx);
  Nearest out{static_cast<std::size_t>(lane_idx[0]), lane_best[0]};
  for (int l = 1; l < 4; ++l) {
    const auto li = static_cast<std::size_t>(lane_idx[l]);
    if (lane_best[l] < out.squared_distance ||
        (lane_best[l] == out.squared_distance && li < out.index))
      out = {li, lane_best[l]};
  }
  // Tail points have larger indices than every lane candidate, so strict '<' suffices.
  for (; i < points.size; ++i) {
    const double dx = points.x[i] - q.x;
    const double dy = points.y[i] - q.y;
    const double dz = points.z[i] - q.z;
    const double d2 = (dx * dx + dy * dy) + dz * dz;
    if (d2 < out.squared_distance) out = {i, d2};
  }
  return out;
}

void dot_row_avx2(const double* a, const double* b, std::size_t dims, std::size_t m, double scale,
                  double* out) {
  const __m256d vscale = _mm256_set1_pd(scale);
  std::size_t j = 0;
  for (; j + 4 <= m; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t d = 0; d < dims; ++d) {
      const __m256d ad = _mm256_set1_pd(a[d]);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(ad, _mm256_loadu_pd(b + d * m + j)));
    }
    _mm256_storeu_pd(out + j, _mm256_mul_pd(acc, vscale));
  }
  for (; j < m; ++j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dims; ++d) acc = acc + a[d] * b[d * m + j];
    out[j] = acc * scale;
  }
}

}  // namespace manilong::kernels::detail
