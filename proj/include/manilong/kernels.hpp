#pragma once

// Data-parallel inner loops shared by the cloud, invariant and matcher modules.
//
// Each kernel has a scalar reference implementation and, on x86-64, an AVX2 variant.
// The variant is picked once at first use from the running CPU; the environment
// variable MANILONG_KERNELS=scalar|avx2 overrides the choice. Both variants evaluate
// the same floating-point expression tree in the same order, so results are
// bit-identical (checked by tests/unit/test_kernels.cpp).

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "manilong/se3.hpp"

namespace manilong::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view to_string(Backend backend);

/// Structure-of-arrays view over a point set.
struct PointsView {
  const double* x = nullptr;
  const double* y = nullptr;
  const double* z = nullptr;
  std::size_t size = 0;
};

/// Owning structure-of-arrays copy of a point set.
class PointBlock {
 public:
  PointBlock() = default;
  explicit PointBlock(std::span<const Vec3> points);

  void push_back(const Vec3& p);
  std::size_t size() const { return x_.size(); }
  bool empty() const { return x_.empty(); }
  Vec3 at(std::size_t i) const { return {x_[i], y_[i], z_[i]}; }
  PointsView view() const { return {x_.data(), y_.data(), z_.data(), x_.size()}; }

 private:
  std::vector<double> x_, y_, z_;
};

struct Nearest {
  std::size_t index = 0;
  double squared_distance = 0.0;
};

struct KernelTable {
  Backend backend;
  /// out[i] = |p_i - q|^2, evaluated as (dx*dx + dy*dy) + dz*dz.
  void (*squared_distances)(PointsView points, Vec3 query, double* out);
  /// Nearest point to `query`; ties resolve to the lowest index. Requires size > 0.
  Nearest (*nearest)(PointsView points, Vec3 query);
  /// out[j] = (sum_d a[d] * b[d * m + j]) * scale, d ascending. `b` is dims x m row-major.
  void (*dot_row)(const double* a, const double* b, std::size_t dims, std::size_t m, double scale,
                  double* out);
};

const KernelTable& scalar_kernels();
/// nullptr when the AVX2 variant is not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_kernels();
/// The table used by library code.
const KernelTable& active_kernels();

}  // namespace manilong::kernels
