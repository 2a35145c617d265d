#pragma once

#include "manilong/kernels.hpp"

namespace manilong::kernels::detail {

void squared_distances_scalar(PointsView points, Vec3 q, double* out);
Nearest nearest_scalar(PointsView points, Vec3 q);
void dot_row_scalar(const double* a, const double* b, std::size_t dims, std::size_t m,
                    double scale, double* out);

#if defined(MANILONG_HAVE_AVX2)
void squared_distances_avx2(PointsView points, Vec3 q, double* out);
Nearest nearest_avx2(PointsView points, Vec3 q);
void dot_row_avx2(const double* a, const double* b, std::size_t dims, std::size_t m, double scale,
                  double* out);
#endif

}  // namespace manilong::kernels::detail
