#include "manilong/se3.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "manilong/error.hpp"

namespace manilong {

Mat3 Mat3::rot_x(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return Mat3{{1, 0, 0, 0, c, -s, 0, s, c}};
}

Mat3 Mat3::rot_y(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return Mat3{{c, 0, s, 0, 1, 0, -s, 0, c}};
}

Mat3 Mat3::rot_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return Mat3{{c, -s, 0, s, c, 0, 0, 0, 1}};
}

Mat3 Mat3::axis_angle(const Vec3& axis, double angle) {
  const Vec3 k = axis / axis.norm();
  const double c = std::cos(angle), s = std::sin(angle), v = 1.0 - c;
  return Mat3{{k.x * k.x * v + c, k.x * k.y * v - k.z * s, k.x * k.z * v + k.y * s,
               k.y * k.x * v + k.z * s, k.y * k.y * v + c, k.y * k.z * v - k.x * s,
               k.z * k.x * v - k.y * s, k.z * k.y * v + k.x * s, k.z * k.z * v + c}};
}

double Mat3::frobenius_norm() const {
  double acc = 0.0;
  for (double v : m) acc += v * v;
  return std::sqrt(acc);
}

namespace {

void rotate_columns(Mat3& a, int p, int q, double c, double s) {
  for (int k = 0; k < 3; ++k) {
    const double ap = a(k, p);
    const double aq = a(k, q);
    a(k, p) = c * ap - s * aq;
    a(k, q) = s * ap + c * aq;
  }
}

void swap_columns(Mat3& a, int p, int q) {
  for (int k = 0; k < 3; ++k) std::swap(a(k, p), a(k, q));
}

Vec3 any_orthogonal(const Vec3& v) {
  const Vec3 trial = std::abs(v.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const Vec3 o = v.cross(trial);
  return o / o.norm();
}

}  // namespace

Svd3 svd3(const Mat3& a) {
  // One-sided Jacobi: orthogonalize the columns of A, accumulating the rotations in V.
  Mat3 work = a;
  Mat3 v = Mat3::identity();
  constexpr std::pair<int, int> kPairs[] = {{0, 1}, {0, 2}, {1, 2}};
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (auto [p, q] : kPairs) {
      const Vec3 cp = work.column(p), cq = work.column(q);
      const double alpha = cp.squared_norm();
      const double beta = cq.squared_norm();
      const double gamma = cp.dot(cq);
      if (gamma == 0.0 || std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
      const double zeta = (beta - alpha) / (2.0 * gamma);
      const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
      const double c = 1.0 / std::sqrt(1.0 + t * t);
      const double s = c * t;
      rotate_columns(work, p, q, c, s);
      rotate_columns(v, p, q, c, s);
      rotated = true;
    }
    if (!rotated) break;
  }

  std::array<double, 3> sigma{work.column(0).norm(), work.column(1).norm(), work.column(2).norm()};
  // Sort descending (3-element selection sort keeps U/V columns in step).
  for (int i = 0; i < 2; ++i) {
    int best = i;
    for (int j = i + 1; j < 3; ++j)
      if (sigma[static_cast<std::size_t>(j)] > sigma[static_cast<std::size_t>(best)]) best = j;
    if (best != i) {
      std::swap(sigma[static_cast<std::size_t>(i)], sigma[static_cast<std::size_t>(best)]);
      swap_columns(work, i, best);
      swap_columns(v, i, best);
    }
  }

  const double tiny = std::max(sigma[0], 1.0) * 1e-14;
  Vec3 u0, u1, u2;
  if (sigma[0] <= std::numeric_limits<double>::min()) {
    u0 = {1, 0, 0};
    u1 = {0, 1, 0};
    sigma = {0.0, 0.0, 0.0};
  } else {
    u0 = work.column(0) / sigma[0];
    if (sigma[1] > tiny) {
      u1 = work.column(1) / sigma[1];
    } else {
      u1 = any_orthogonal(u0);
      sigma[1] = 0.0;
    }
  }
  if (sigma[2] > tiny) {
    u2 = work.column(2) / sigma[2];
  } else {
    u2 = u0.cross(u1);
    sigma[2] = 0.0;
  }
  return Svd3{Mat3::from_columns(u0, u1, u2), Vec3{sigma[0], sigma[1], sigma[2]}, v};
}

SymmetricEigen3 symmetric_eigen3(const Mat3& input) {
  // Cyclic Jacobi on a symmetric matrix.
  Mat3 a = input;
  Mat3 vecs = Mat3::identity();
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double diag = a(0, 0) * a(0, 0) + a(1, 1) * a(1, 1) + a(2, 2) * a(2, 2);
    if (off <= 1e-32 * diag || off == 0.0) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t =
            (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J^T A J with J the Givens rotation in the (p, q) plane.
        for (int k = 0; k < 3; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        rotate_columns(vecs, p, q, c, s);
      }
    }
  }
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });
  SymmetricEigen3 out;
  out.values = {a(order[0], order[0]), a(order[1], order[1]), a(order[2], order[2])};
  out.vectors = Mat3::from_columns(vecs.column(order[0]), vecs.column(order[1]),
                                   vecs.column(order[2]));
  return out;
}

double rotation_angle(const Mat3& r) {
  const double sin_part =
      0.5 * Vec3{r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)}.norm();
  const double cos_part = 0.5 * (r(0, 0) + r(1, 1) + r(2, 2) - 1.0);
  return std::atan2(sin_part, cos_part);
}

Pose Pose::from_matrix(std::span<const double, 16> values) {
  if (values[12] != 0.0 || values[13] != 0.0 || values[14] != 0.0 || values[15] != 1.0)
    throw Error(ErrorCode::InvalidInput, "pose matrix last row must be (0,0,0,1)");
  Mat3 r{{values[0], values[1], values[2], values[4], values[5], values[6], values[8], values[9],
          values[10]}};
  const Mat3 err = r.transpose() * r - Mat3::identity();
  if (err.frobenius_norm() > 1e-6 || std::abs(r.determinant() - 1.0) > 1e-6)
    throw Error(ErrorCode::InvalidInput, "pose rotation block is not a proper rotation");
  return Pose{r, Vec3{values[3], values[7], values[11]}};
}

std::array<double, 16> Pose::to_matrix() const {
  const Mat3& r = rotation_;
  const Vec3& t = translation_;
  return {r(0, 0), r(0, 1), r(0, 2), t.x, r(1, 0), r(1, 1), r(1, 2), t.y,
          r(2, 0), r(2, 1), r(2, 2), t.z, 0.0,     0.0,     0.0,     1.0};
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose{a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation()};
}

Pose inverse(const Pose& p) {
  const Mat3 rt = p.rotation().transpose();
  return Pose{rt, -(rt * p.translation())};
}

double translation_error(const Pose& a, const Pose& b) {
  return (a.translation() - b.translation()).norm();
}

double rotation_error(const Pose& a, const Pose& b) {
  return rotation_angle(a.rotation().transpose() * b.rotation());
}

Mat3 orthonormalize(const Mat3& r) {
  const Svd3 svd = svd3(r);
  Mat3 out = svd.u * svd.v.transpose();
  if (out.determinant() < 0.0) {
    Mat3 u = svd.u;
    for (int k = 0; k < 3; ++k) u(k, 2) = -u(k, 2);
    out = u * svd.v.transpose();
  }
  return out;
}

std::array<double, 18> Action::to_array() const {
  std::array<double, 18> out{};
  const auto m = pose.to_matrix();
  std::copy(m.begin(), m.end(), out.begin());
  out[16] = gripper_open ? 1.0 : 0.0;
  out[17] = allow_collision ? 1.0 : 0.0;
  return out;
}

Action Action::from_array(std::span<const double, 18> values) {
  Action a;
  a.pose = Pose::from_matrix(values.first<16>());
  auto flag = [](double v) {
    if (v != 0.0 && v != 1.0) throw Error(ErrorCode::InvalidInput, "action flags must be 0 or 1");
    return v == 1.0;
  };
  a.gripper_open = flag(values[16]);
  a.allow_collision = flag(values[17]);
  return a;
}

namespace {

std::vector<double> pair_weights(const WeightedPointSet& src, const WeightedPointSet& dst) {
  const std::size_t n = src.points.size();
  if (dst.points.size() != n || src.weights.size() != n || dst.weights.size() != n)
    throw Error(ErrorCode::InvalidInput, "point and weight arrays must have equal length");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = src.weights[i] * dst.weights[i];
    if (!std::isfinite(w[i]) || w[i] < 0.0)
      throw Error(ErrorCode::InvalidInput, "weights must be finite and nonnegative");
  }
  return w;
}

bool rank_below_two(const Mat3& scatter) {
  const SymmetricEigen3 eig = symmetric_eigen3(scatter);
  return !(eig.values.x > 0.0) || eig.values.y <= 1e-12 * eig.values.x;
}

}  // namespace

Pose solve_weighted_procrustes(const WeightedPointSet& src, const WeightedPointSet& dst) {
  const std::vector<double> w = pair_weights(src, dst);
  const std::size_t n = w.size();
  if (n < 3) throw Error(ErrorCode::DegenerateInput, "need at least 3 correspondences");
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (total <= 0.0) throw Error(ErrorCode::AllZeroWeights, "every correspondence weight is zero");

  Vec3 cs{}, cd{};
  for (std::size_t i = 0; i < n; ++i) {
    cs += src.points[i] * w[i];
    cd += dst.points[i] * w[i];
  }
  cs = cs / total;
  cd = cd / total;

  Mat3 cross = Mat3::zero(), scatter_src = Mat3::zero(), scatter_dst = Mat3::zero();
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] == 0.0) continue;
    const Vec3 a = src.points[i] - cs;
    const Vec3 b = dst.points[i] - cd;
    cross = cross + Mat3::outer(a, b) * w[i];
    scatter_src = scatter_src + Mat3::outer(a, a) * w[i];
    scatter_dst = scatter_dst + Mat3::outer(b, b) * w[i];
  }
  if (rank_below_two(scatter_src) || rank_below_two(scatter_dst))
    throw Error(ErrorCode::DegenerateInput, "weighted point set is collinear");

  // cross = U S V^T; R = V diag(1, 1, d) U^T with d fixing reflections.
  const Svd3 svd = svd3(cross);
  const double d = (svd.v * svd.u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  Mat3 v = svd.v;
  for (int k = 0; k < 3; ++k) v(k, 2) *= d;
  const Mat3 r = v * svd.u.transpose();
  return Pose{r, cd - r * cs};
}

double weighted_residual(const Pose& t, const WeightedPointSet& src, const WeightedPointSet& dst) {
  const std::vector<double> w = pair_weights(src, dst);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    acc += w[i] * (t.apply(src.points[i]) - dst.points[i]).squared_norm();
  return acc;
}

Quat Quat::from_matrix(const Mat3& r) {
  Quat q;
  const double trace = r(0, 0) + r(1, 1) + r(2, 2);
  if (trace > 0.0) {
    const double s = 2.0 * std::sqrt(trace + 1.0);
    q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
  } else if (r(1, 1) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
    q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
    q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
  }
  return q.normalized();
}

Mat3 Quat::to_matrix() const {
  const double xx = x * x, yy = y * y, zz = z * z;
  const double xy = x * y, xz = x * z, yz = y * z;
  const double wx = w * x, wy = w * y, wz = w * z;
  return Mat3{{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy), 2 * (xy + wz), 1 - 2 * (xx + zz),
               2 * (yz - wx), 2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}};
}

Quat Quat::normalized() const {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  return {w / n, x / n, y / n, z / n};
}

double quat_angle(const Quat& a, const Quat& b) {
  const double d = std::min(1.0, std::abs(a.dot(b)));
  return 2.0 * std::acos(d);
}

Quat slerp(const Quat& a, const Quat& b_in, double t) {
  Quat b = b_in;
  double cos_theta = a.dot(b);
  if (cos_theta < 0.0) {
    b = {-b.w, -b.x, -b.y, -b.z};
    cos_theta = -cos_theta;
  }
  if (cos_theta > 1.0 - 1e-12) {
    return Quat{a.w + t * (b.w - a.w), a.x + t * (b.x - a.x), a.y + t * (b.y - a.y),
                a.z + t * (b.z - a.z)}
        .normalized();
  }
  const double theta = std::acos(cos_theta);
  const double sa = std::sin((1.0 - t) * theta) / std::sin(theta);
  const double sb = std::sin(t * theta) / std::sin(theta);
  return Quat{sa * a.w + sb * b.w, sa * a.x + sb * b.x, sa * a.y + sb * b.y, sa * a.z + sb * b.z}
      .normalized();
}

}  // namespace manilong
