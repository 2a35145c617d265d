#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"

namespace manilong::kernels {

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "unknown";
}

PointBlock::PointBlock(std::span<const Vec3> points) {
  x_.reserve(points.size());
  y_.reserve(points.size());
  z_.reserve(points.size());
  for (const Vec3& p : points) push_back(p);
}

void PointBlock::push_back(const Vec3& p) {
  x_.push_back(p.x);
  y_.push_back(p.y);
  z_.push_back(p.z);
}

const KernelTable& scalar_kernels() {
  static const KernelTable table{Backend::Scalar, &detail::squared_distances_scalar,
                                 &detail::nearest_scalar, &detail::dot_row_scalar};
  return table;
}

const KernelTable* avx2_kernels() {
#if defined(MANILONG_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  static const KernelTable table{Backend::Avx2, &detail::squared_distances_avx2,
                                 &detail::nearest_avx2, &detail::dot_row_avx2};
  return supported ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() {
  static const KernelTable& chosen = []() -> const KernelTable& {
    const char* env = std::getenv("MANILONG_KERNELS");
    const std::string request = env ? env : "";
    if (request == "scalar") return scalar_kernels();
    if (const KernelTable* avx2 = avx2_kernels()) return *avx2;
    return scalar_kernels();
  }();
  return chosen;
}

}  // namespace manilong::kernels
