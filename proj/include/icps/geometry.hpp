#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "icps/errors.hpp"

namespace icps {

// World frame: right-handed, z up, one universal origin shared by all
// scenes. Positions are meters.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3() = default;
  Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }

  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
};

// Scalar-first quaternion (w, p, q, r). A unit quaternion encodes a
// rotation from the camera frame to the world frame; the camera looks
// along its local -Z axis.
struct QuaternionWPQR {
  double w = 1.0;
  double p = 0.0;
  double q = 0.0;
  double r = 0.0;

  QuaternionWPQR() = default;
  QuaternionWPQR(double w_, double p_, double q_, double r_)
      : w(w_), p(p_), q(q_), r(r_) {}

  double dot(const QuaternionWPQR& o) const {
    return w * o.w + p * o.p + q * o.q + r * o.r;
  }
  double norm() const { return std::sqrt(dot(*this)); }

  /// Rotate a world-frame vector: v' = q v q*. Uses only +,-,* so the
  /// result rounds identically on any IEEE implementation.
  Vec3 rotate(const Vec3& v) const {
    const Vec3 u{p, q, r};
    const Vec3 t = u.cross(v) * 2.0;
    return v + t * w + u.cross(t);
  }
};

struct Pose {
  Vec3 position;
  QuaternionWPQR orientation;  // unit, canonical
};

// Per-scene min/max positions used by the [-1,1] coordinate mapping.
struct NormalizationBounds {
  Vec3 min;
  Vec3 max;

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return (min + max) * 0.5; }

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      if (!(max[a] > min[a]))
        throw DegenerateBounds("bounds degenerate on axis " +
                               std::to_string(a));
    }
  }

  bool contains_strict(const Vec3& v) const {
    for (int a = 0; a < 3; ++a)
      if (!(v[a] > min[a] && v[a] < max[a])) return false;
    return true;
  }
};

inline QuaternionWPQR quat_normalize(const QuaternionWPQR& q) {
  const double n = q.norm();
  if (n <= 1e-12) throw ZeroNormQuaternion();
  return {q.w / n, q.p / n, q.q / n, q.r / n};
}

/// Resolve the q == -q double cover: flip sign so w >= 0; when w is 0
/// exactly, the first nonzero of (p,q,r) is made nonnegative.
inline QuaternionWPQR quat_canonicalize(const QuaternionWPQR& q) {
  double lead = q.w;
  if (lead == 0.0) lead = q.p;
  if (lead == 0.0) lead = q.q;
  if (lead == 0.0) lead = q.r;
  if (lead < 0.0) return {-q.w, -q.p, -q.q, -q.r};
  return q;
}

/// Geodesic rotation distance in degrees: 2*acos(min(1,|a.b|)).
/// Invariant under negating either argument.
inline double quat_angular_error_deg(const QuaternionWPQR& a,
                                     const QuaternionWPQR& b) {
  if (std::abs(a.norm() - 1.0) > 1e-6 || std::abs(b.norm() - 1.0) > 1e-6)
    throw NonUnitQuaternion();
  const double d = std::min(1.0, std::abs(a.dot(b)));
  return 2.0 * std::acos(d) * (180.0 / 3.14159265358979323846);
}

/// Per-axis map 2*(p-min)/(max-min) - 1. Inputs inside the bounds land in
/// [-1,1]; out-of-bounds inputs extrapolate linearly (no clamping).
inline Vec3 normalize_position(const Vec3& pos,
                               const NormalizationBounds& bounds) {
  bounds.validate();
  Vec3 out;
  for (int a = 0; a < 3; ++a)
    out[a] = 2.0 * (pos[a] - bounds.min[a]) / (bounds.max[a] - bounds.min[a]) -
             1.0;
  return out;
}

inline Vec3 denormalize_position(const Vec3& pn,
                                 const NormalizationBounds& bounds) {
  bounds.validate();
  Vec3 out;
  for (int a = 0; a < 3; ++a)
    out[a] = bounds.min[a] + (pn[a] + 1.0) * 0.5 * (bounds.max[a] - bounds.min[a]);
  return out;
}

inline NormalizationBounds compute_bounds(const std::vector<Vec3>& positions) {
  if (positions.empty()) throw EmptyInput("compute_bounds: empty input");
  NormalizationBounds b{positions.front(), positions.front()};
  for (const Vec3& p : positions) {
    for (int a = 0; a < 3; ++a) {
      if (p[a] < b.min[a]) b.min[a] = p[a];
      if (p[a] > b.max[a]) b.max[a] = p[a];
    }
  }
  b.validate();  // zero extent on any axis is an error
  return b;
}

/// Rotation matrix (columns = camera axes in world frame) to quaternion,
/// Shepperd's method. Result is unit and canonical.
inline QuaternionWPQR quat_from_columns(const Vec3& cx, const Vec3& cy,
                                        const Vec3& cz) {
  const double m00 = cx.x, m01 = cy.x, m02 = cz.x;
  const double m10 = cx.y, m11 = cy.y, m12 = cz.y;
  const double m20 = cx.z, m21 = cy.z, m22 = cz.z;
  const double tr = m00 + m11 + m22;
  QuaternionWPQR q;
  if (tr > 0.0) {
    const double s = std::sqrt(tr + 1.0) * 2.0;
    q = {0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s};
  } else if (m00 > m11 && m00 > m22) {
    const double s = std::sqrt(1.0 + m00 - m11 - m22) * 2.0;
    q = {(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s};
  } else if (m11 > m22) {
    const double s = std::sqrt(1.0 + m11 - m00 - m22) * 2.0;
    q = {(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s};
  } else {
    const double s = std::sqrt(1.0 + m22 - m00 - m11) * 2.0;
    q = {(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s};
  }
  return quat_canonicalize(quat_normalize(q));
}

}  // namespace icps
