#include "kernels_impl.hpp"

namespace manilong::kernels::detail {

void squared_distances_scalar(PointsView points, Vec3 q, double* out) {
  for (std::size_t i = 0; i < points.size; ++i) {
    const double dx = points.x[i] - q.x;
    const double dy = points.y[i] - q.y;
    const double dz = points.z[i] - q.z;
    out[i] = (dx * dx + dy * dy) + dz * dz;
  }
}

Nearest nearest_scalar(PointsView points, Vec3 q) {
  Nearest best{0, 0.0};
  bool found = false;
  for (std::size_t i = 0; i < points.size; ++i) {
    const double dx = points.x[i] - q.x;
    const double dy = points.y[i] - q.y;
    const double dz = points.z[i] - q.z;
    const double d2 = (dx * dx + dy * dy) + dz * dz;
    if (!found || d2 < best.squared_distance) {
      best = {i, d2};
      found = true;
    }
  }
  return best;
}

void dot_row_scalar(const double* a, const double* b, std::size_t dims, std::size_t m,
                    double scale, double* out) {
  for (std::size_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dims; ++d) acc = acc + a[d] * b[d * m + j];
    out[j] = acc * scale;
  }
}

}  // namespace manilong::kernels::detail
