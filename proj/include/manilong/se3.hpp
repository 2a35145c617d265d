#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace manilong {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr bool operator==(const Vec3&) const = default;

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  constexpr double squared_norm() const { return dot(*this); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{};

  static constexpr Mat3 identity() { return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }
  static constexpr Mat3 zero() { return Mat3{}; }
  static Mat3 rot_x(double angle);
  static Mat3 rot_y(double angle);
  static Mat3 rot_z(double angle);
  /// Rotation about a unit axis (Rodrigues).
  static Mat3 axis_angle(const Vec3& axis, double angle);
  static constexpr Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
    return Mat3{{c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z}};
  }
  static constexpr Mat3 outer(const Vec3& a, const Vec3& b) {
    return Mat3{{a.x * b.x, a.x * b.y, a.x * b.z, a.y * b.x, a.y * b.y, a.y * b.z, a.z * b.x,
                 a.z * b.y, a.z * b.z}};
  }

  constexpr double& operator()(int r, int c) { return m[static_cast<std::size_t>(r * 3 + c)]; }
  constexpr double operator()(int r, int c) const {
    return m[static_cast<std::size_t>(r * 3 + c)];
  }

  constexpr Vec3 column(int c) const { return {(*this)(0, c), (*this)(1, c), (*this)(2, c)}; }
  constexpr Vec3 row(int r) const { return {(*this)(r, 0), (*this)(r, 1), (*this)(r, 2)}; }

  constexpr Mat3 operator*(const Mat3& o) const {
    Mat3 out;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        out(r, c) = (*this)(r, 0) * o(0, c) + (*this)(r, 1) * o(1, c) + (*this)(r, 2) * o(2, c);
    return out;
  }
  constexpr Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  constexpr Mat3 operator+(const Mat3& o) const {
    Mat3 out;
    for (std::size_t i = 0; i < 9; ++i) out.m[i] = m[i] + o.m[i];
    return out;
  }
  constexpr Mat3 operator-(const Mat3& o) const {
    Mat3 out;
    for (std::size_t i = 0; i < 9; ++i) out.m[i] = m[i] - o.m[i];
    return out;
  }
  constexpr Mat3 operator*(double s) const {
    Mat3 out;
    for (std::size_t i = 0; i < 9; ++i) out.m[i] = m[i] * s;
    return out;
  }
  constexpr bool operator==(const Mat3&) const = default;

  constexpr Mat3 transpose() const {
    return Mat3{{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
  }
  constexpr double determinant() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }
  double frobenius_norm() const;
};

/// Singular value decomposition A = U diag(s) V^T of a 3x3 matrix, singular values
/// sorted descending. U and V are orthogonal; det(U) is forced to +1 when s[2] is zero.
struct Svd3 {
  Mat3 u;
  Vec3 s;
  Mat3 v;
};

Svd3 svd3(const Mat3& a);

/// Eigen-decomposition of a symmetric 3x3 matrix, eigenvalues descending; columns of
/// `vectors` are the matching unit eigenvectors.
struct SymmetricEigen3 {
  Vec3 values;
  Mat3 vectors;
};

SymmetricEigen3 symmetric_eigen3(const Mat3& a);

/// Geodesic angle (radians) of a rotation matrix.
double rotation_angle(const Mat3& r);

/// Rigid transform in SE(3). Applies rotation then translation.
class Pose {
 public:
  Pose() = default;
  Pose(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Mat3::identity(), t}; }
  static Pose from_rotation(const Mat3& r) { return {r, Vec3{}}; }

  /// Parses a row-major 4x4 homogeneous matrix. Throws InvalidInput if the last row is
  /// not (0,0,0,1) or the rotation block is not a proper rotation within 1e-6.
  static Pose from_matrix(std::span<const double, 16> values);
  std::array<double, 16> to_matrix() const;

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 apply_rotation(const Vec3& v) const { return rotation_ * v; }

  bool operator==(const Pose&) const = default;

 private:
  Mat3 rotation_ = Mat3::identity();
  Vec3 translation_{};
};

/// compose(a, b) applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

/// Translation distance and geodesic rotation angle between two poses.
double translation_error(const Pose& a, const Pose& b);
double rotation_error(const Pose& a, const Pose& b);

/// Re-orthonormalizes a nearly-orthonormal rotation (nearest proper rotation).
Mat3 orthonormalize(const Mat3& r);

struct Action {
  Pose pose;
  bool gripper_open = true;
  bool allow_collision = false;

  /// 16 pose entries row-major, then gripper flag, then collision flag.
  std::array<double, 18> to_array() const;
  static Action from_array(std::span<const double, 18> values);
};

struct WeightedPointSet {
  std::vector<Vec3> points;
  std::vector<double> weights;
};

/// Weighted rigid alignment: argmin_T sum_i w_i |T src_i - dst_i|^2 with
/// w_i = src.weights[i] * dst.weights[i]. Returns the best proper rotation even for
/// mirrored inputs. Throws DegenerateInput / AllZeroWeights.
Pose solve_weighted_procrustes(const WeightedPointSet& src, const WeightedPointSet& dst);

/// Weighted sum of squared residuals of `t` for the same pairing and weights.
double weighted_residual(const Pose& t, const WeightedPointSet& src, const WeightedPointSet& dst);

/// Unit quaternion (w, x, y, z) used by the planner for orientation interpolation.
struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quat from_matrix(const Mat3& r);
  Mat3 to_matrix() const;
  double dot(const Quat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
  Quat normalized() const;
};

/// Angle between two orientations (radians, in [0, pi]).
double quat_angle(const Quat& a, const Quat& b);
/// Shortest-arc spherical interpolation.
Quat slerp(const Quat& a, const Quat& b, double t);

}  // namespace manilong
