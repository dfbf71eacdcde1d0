#pragma once

// Rigid-transform arithmetic on SE(2) and SE(3).
//
// Tangent vectors are ordered translational part first, rotational part
// second: (rho, phi) for SE(3) and (rho_x, rho_y, theta) for SE(2).
// Perturbations are applied on the right: X <- X * exp(delta).

#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

namespace pgval {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into the half-open interval (-pi, pi].
inline double wrap_angle(double angle) {
  double wrapped = std::remainder(angle, 2.0 * kPi);
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  if (wrapped > kPi) wrapped -= 2.0 * kPi;
  return wrapped;
}

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

namespace detail {

inline constexpr double kSmallAngle = 1e-5;

// Brings a unit quaternion to the canonical hemisphere: w > 0, or for a half
// turn (|w| below rounding level) the largest vector component positive.
inline Quat canonical(Quat q) {
  q.normalize();
  if (std::abs(q.w()) < 1e-12) {
    const Vec3 v = q.vec();
    int axis = 0;
    v.cwiseAbs().maxCoeff(&axis);
    if (v[axis] < 0.0) q.coeffs() = -q.coeffs();
    return q;
  }
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

inline Quat so3_exp(const Vec3& phi) {
  const double theta = phi.norm();
  double half_sinc = 0.0;  // sin(theta / 2) / theta
  if (theta < kSmallAngle) {
    half_sinc = 0.5 - theta * theta / 48.0;
  } else {
    half_sinc = std::sin(0.5 * theta) / theta;
  }
  const Vec3 v = half_sinc * phi;
  return canonical(Quat(std::cos(0.5 * theta), v.x(), v.y(), v.z()));
}

// Expects a canonical quaternion (w >= 0). At exactly pi the rotation axis is
// the stored vector part, whose sign convention is fixed by canonical().
inline Vec3 so3_log(const Quat& q) {
  const double w = q.w();
  const Vec3 v = q.vec();
  const double vn = v.norm();
  if (vn < 1e-10) {
    // theta ~ 2 vn / w; series of 2 atan(vn / w) / vn
    return (2.0 / w) * (1.0 - vn * vn / (3.0 * w * w)) * v;
  }
  const double theta = 2.0 * std::atan2(vn, w);
  return (theta / vn) * v;
}

// Coefficients of the SO(3) Jacobians: a = (1 - cos t) / t^2,
// b = (t - sin t) / t^3.
inline void so3_jacobian_coeffs(double theta, double& a, double& b) {
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    a = 0.5 - t2 / 24.0;
    b = 1.0 / 6.0 - t2 / 120.0;
  } else {
    const double t2 = theta * theta;
    a = (1.0 - std::cos(theta)) / t2;
    b = (theta - std::sin(theta)) / (t2 * theta);
  }
}

inline Mat3 so3_left_jacobian(const Vec3& phi) {
  double a = 0.0;
  double b = 0.0;
  so3_jacobian_coeffs(phi.norm(), a, b);
  const Mat3 k = skew(phi);
  return Mat3::Identity() + a * k + b * k * k;
}

inline Mat3 so3_left_jacobian_inverse(const Vec3& phi) {
  const double theta = phi.norm();
  double c = 0.0;  // 1/t^2 - cot(t/2) / (2 t)
  if (theta < kSmallAngle) {
    c = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    c = 1.0 / (theta * theta) -
        std::cos(0.5 * theta) / (std::sin(0.5 * theta) * 2.0 * theta);
  }
  const Mat3 k = skew(phi);
  return Mat3::Identity() - 0.5 * k + c * k * k;
}

// Off-diagonal block of the SE(3) left Jacobian.
inline Mat3 se3_q_block(const Vec3& rho, const Vec3& phi) {
  const double theta = phi.norm();
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  if (theta < 1e-3) {
    const double t2 = theta * theta;
    c1 = 1.0 / 6.0 - t2 / 120.0;
    c2 = 1.0 / 24.0 - t2 / 720.0;
    c3 = 1.0 / 120.0 - t2 / 2520.0;
  } else {
    const double t2 = theta * theta;
    const double t4 = t2 * t2;
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    c1 = (theta - s) / (t2 * theta);
    c2 = (t2 + 2.0 * c - 2.0) / (2.0 * t4);
    c3 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t4 * theta);
  }
  const Mat3 p = skew(phi);
  const Mat3 r = skew(rho);
  const Mat3 pr = p * r;
  const Mat3 rp = r * p;
  const Mat3 prp = pr * p;
  return 0.5 * r + c1 * (pr + rp + prp) + c2 * (p * pr + rp * p - 3.0 * prp) +
         c3 * (prp * p + p * prp);
}

// (sin t / t, (1 - cos t) / t) for the SE(2) V matrix.
inline void se2_v_coeffs(double theta, double& s, double& c) {
  if (std::abs(theta) < kSmallAngle) {
    const double t2 = theta * theta;
    s = 1.0 - t2 / 6.0;
    c = 0.5 * theta - t2 * theta / 24.0;
  } else {
    s = std::sin(theta) / theta;
    c = (1.0 - std::cos(theta)) / theta;
  }
}

}  // namespace detail

/// Tangent-space element of SE(3).
struct Twist3 {
  Vec3 rotational = Vec3::Zero();     // axis-angle, radians
  Vec3 translational = Vec3::Zero();  // meters

  Twist3() = default;
  Twist3(const Vec3& rot, const Vec3& trans)
      : rotational(rot), translational(trans) {}

  static Twist3 from_vector(const Vec6& v) {
    return Twist3(v.tail<3>(), v.head<3>());
  }
  Vec6 to_vector() const {
    Vec6 v;
    v << translational, rotational;
    return v;
  }
};

class Pose2;

/// Rigid transform in 3D: unit quaternion rotation plus translation.
class Pose3 {
 public:
  static constexpr int kDof = 6;
  static constexpr int kTransDim = 3;
  using Tangent = Vec6;
  using Jacobian = Mat6;

  Pose3() : rotation_(Quat::Identity()), translation_(Vec3::Zero()) {}
  Pose3(const Quat& rotation, const Vec3& translation)
      : rotation_(detail::canonical(rotation)), translation_(translation) {}

  static Pose3 identity() { return Pose3(); }
  static Pose3 translate(double x, double y, double z) {
    return Pose3(Quat::Identity(), Vec3(x, y, z));
  }
  static Pose3 from_yaw(double yaw) {
    return Pose3(Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())), Vec3::Zero());
  }
  /// Intrinsic Z-Y-X (yaw, pitch, roll) construction.
  static Pose3 from_euler(double yaw, double pitch, double roll,
                          const Vec3& translation = Vec3::Zero()) {
    const Quat q = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())) *
                   Quat(Eigen::AngleAxisd(pitch, Vec3::UnitY())) *
                   Quat(Eigen::AngleAxisd(roll, Vec3::UnitX()));
    return Pose3(q, translation);
  }

  const Quat& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Mat3 rotation_matrix() const { return rotation_.toRotationMatrix(); }

  Pose3 operator*(const Pose3& other) const {
    return Pose3(rotation_ * other.rotation_,
                 translation_ + rotation_ * other.translation_);
  }
  Vec3 operator*(const Vec3& point) const {
    return translation_ + rotation_ * point;
  }

  Pose3 inverse() const {
    const Quat inv = rotation_.conjugate();
    return Pose3(inv, -(inv * translation_));
  }

  static Pose3 exp(const Vec6& xi) {
    const Vec3 rho = xi.head<3>();
    const Vec3 phi = xi.tail<3>();
    return Pose3(detail::so3_exp(phi), detail::so3_left_jacobian(phi) * rho);
  }

  Vec6 log() const {
    const Vec3 phi = detail::so3_log(rotation_);
    Vec6 xi;
    xi << detail::so3_left_jacobian_inverse(phi) * translation_, phi;
    return xi;
  }

  Mat6 adjoint() const {
    const Mat3 r = rotation_matrix();
    Mat6 ad = Mat6::Zero();
    ad.topLeftCorner<3, 3>() = r;
    ad.topRightCorner<3, 3>() = skew(translation_) * r;
    ad.bottomRightCorner<3, 3>() = r;
    return ad;
  }

  /// Inverse of the right Jacobian: log(exp(xi) exp(d)) ~ xi + Jr^-1(xi) d.
  static Mat6 right_jacobian_inverse(const Vec6& xi) {
    const Vec3 rho = -xi.head<3>();
    const Vec3 phi = -xi.tail<3>();
    const Mat3 a_inv = detail::so3_left_jacobian_inverse(phi);
    const Mat3 q = detail::se3_q_block(rho, phi);
    Mat6 j = Mat6::Zero();
    j.topLeftCorner<3, 3>() = a_inv;
    j.topRightCorner<3, 3>() = -a_inv * q * a_inv;
    j.bottomRightCorner<3, 3>() = a_inv;
    return j;
  }

  Pose3 retract(const Vec6& delta) const { return *this * exp(delta); }

 private:
  Quat rotation_;
  Vec3 translation_;
};

/// Rigid transform in the plane: yaw plus 2D translation.
class Pose2 {
 public:
  static constexpr int kDof = 3;
  static constexpr int kTransDim = 2;
  using Tangent = Vec3;
  using Jacobian = Mat3;

  Pose2() = default;
  Pose2(double x, double y, double yaw)
      : translation_(x, y), yaw_(wrap_angle(yaw)) {}
  Pose2(const Vec2& translation, double yaw)
      : translation_(translation), yaw_(wrap_angle(yaw)) {}

  static Pose2 identity() { return Pose2(); }

  double x() const { return translation_.x(); }
  double y() const { return translation_.y(); }
  double yaw() const { return yaw_; }
  const Vec2& translation() const { return translation_; }
  Mat2 rotation_matrix() const {
    const double c = std::cos(yaw_);
    const double s = std::sin(yaw_);
    Mat2 r;
    r << c, -s, s, c;
    return r;
  }

  Pose2 operator*(const Pose2& other) const {
    return Pose2(translation_ + rotation_matrix() * other.translation_,
                 yaw_ + other.yaw_);
  }
  Vec2 operator*(const Vec2& point) const {
    return translation_ + rotation_matrix() * point;
  }

  Pose2 inverse() const {
    return Pose2(-(rotation_matrix().transpose() * translation_), -yaw_);
  }

  static Pose2 exp(const Vec3& xi) {
    const double theta = xi.z();
    double s = 0.0;
    double c = 0.0;
    detail::se2_v_coeffs(theta, s, c);
    Mat2 v;
    v << s, -c, c, s;
    return Pose2(v * xi.head<2>(), theta);
  }

  Vec3 log() const {
    const double theta = yaw_;
    double s = 0.0;
    double c = 0.0;
    detail::se2_v_coeffs(theta, s, c);
    // V^-1 = 1 / (s^2 + c^2) * [s c; -c s]
    const double det = s * s + c * c;
    Mat2 v_inv;
    v_inv << s, c, -c, s;
    Vec3 xi;
    xi << (v_inv * translation_) / det, theta;
    return xi;
  }

  Mat3 adjoint() const {
    Mat3 ad = Mat3::Identity();
    ad.topLeftCorner<2, 2>() = rotation_matrix();
    ad(0, 2) = translation_.y();
    ad(1, 2) = -translation_.x();
    return ad;
  }

  static Mat3 right_jacobian(const Vec3& xi) {
    const double theta = xi.z();
    const double r1 = xi.x();
    const double r2 = xi.y();
    double s = 0.0;
    double c = 0.0;
    detail::se2_v_coeffs(theta, s, c);
    // (t - sin t) / t^2 and (1 - cos t) / t^2
    double d = 0.0;
    double e = 0.0;
    if (std::abs(theta) < detail::kSmallAngle) {
      d = theta / 6.0;
      e = 0.5 - theta * theta / 24.0;
    } else {
      const double t2 = theta * theta;
      d = (theta - std::sin(theta)) / t2;
      e = (1.0 - std::cos(theta)) / t2;
    }
    Mat3 j;
    j << s, c, r1 * d - r2 * e,
         -c, s, r1 * e + r2 * d,
         0.0, 0.0, 1.0;
    return j;
  }

  static Mat3 right_jacobian_inverse(const Vec3& xi) {
    return right_jacobian(xi).inverse();
  }

  Pose2 retract(const Vec3& delta) const { return *this * exp(delta); }

 private:
  Vec2 translation_ = Vec2::Zero();
  double yaw_ = 0.0;
};

// Free-function API shared by both groups.

template <class G>
G compose(const G& a, const G& b) {
  return a * b;
}

template <class G>
G inverse(const G& p) {
  return p.inverse();
}

/// inverse(a) * b
template <class G>
G relative(const G& a, const G& b) {
  return a.inverse() * b;
}

inline Pose3 exp(const Twist3& t) { return Pose3::exp(t.to_vector()); }
inline Twist3 log(const Pose3& p) { return Twist3::from_vector(p.log()); }

/// Geodesic (screw) interpolation; endpoints are returned unchanged.
template <class G>
G interpolate(const G& p0, const G& p1, double alpha) {
  if (alpha <= 0.0) return p0;
  if (alpha >= 1.0) return p1;
  return p0 * G::exp(alpha * relative(p0, p1).log());
}

/// Geodesic rotation magnitude in degrees, in [0, 180].
inline double rotation_angle_deg(const Pose3& p) {
  const Quat& q = p.rotation();
  return rad_to_deg(2.0 * std::atan2(q.vec().norm(), std::abs(q.w())));
}
inline double rotation_angle_deg(const Pose2& p) {
  return rad_to_deg(std::abs(p.yaw()));
}

inline double translation_norm(const Pose3& p) { return p.translation().norm(); }
inline double translation_norm(const Pose2& p) { return p.translation().norm(); }

/// Keeps (x, y, yaw); yaw is the Z component of a Z-Y-X decomposition.
inline Pose2 project_planar(const Pose3& p) {
  const Mat3 r = p.rotation_matrix();
  return Pose2(p.translation().x(), p.translation().y(),
               std::atan2(r(1, 0), r(0, 0)));
}

inline Pose3 lift_planar(const Pose2& p) {
  return Pose3(Quat(Eigen::AngleAxisd(p.yaw(), Vec3::UnitZ())),
               Vec3(p.x(), p.y(), 0.0));
}

/// Common 3D view of either group, used by I/O and reporting.
inline Pose3 to_pose3(const Pose3& p) { return p; }
inline Pose3 to_pose3(const Pose2& p) { return lift_planar(p); }

template <class G>
G from_pose3(const Pose3& p);
template <>
inline Pose3 from_pose3<Pose3>(const Pose3& p) {
  return p;
}
template <>
inline Pose2 from_pose3<Pose2>(const Pose3& p) {
  return project_planar(p);
}

}  // namespace pgval
