#pragma once

#include <cmath>

namespace tracklab {

struct Vec2 {
  double x = 0.0;
  double z = 0.0;

  Vec2() = default;
  Vec2(double x_, double z_) : x(x_), z(z_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, z + o.z}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, z - o.z}; }
  Vec2 operator*(double s) const { return {x * s, z * s}; }
  Vec2 operator-() const { return {-x, -z}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    z += o.z;
    return *this;
  }
  Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    z -= o.z;
    return *this;
  }

  double dot(const Vec2& o) const { return x * o.x + z * o.z; }
  double norm2() const { return x * x + z * z; }
  double norm() const { return std::sqrt(norm2()); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// 90-degree counterclockwise rotation; cross(w, r) == w * perp(r) in the
// (x up-right, z up) plane convention used throughout.
inline Vec2 perp(const Vec2& v) { return {-v.z, v.x}; }

// Planar rotation stored as a unit (cos, sin) pair.
struct Rot2 {
  double c = 1.0;
  double s = 0.0;

  Rot2() = default;
  Rot2(double c_, double s_) : c(c_), s(s_) {}
  static Rot2 from_angle(double a) { return {std::cos(a), std::sin(a)}; }

  double angle() const { return std::atan2(s, c); }
  bool is_unit(double tol = 1e-9) const {
    return std::fabs(c * c + s * s - 1.0) <= tol;
  }

  Vec2 rotate(const Vec2& v) const { return {c * v.x - s * v.z, s * v.x + c * v.z}; }
  Vec2 inv_rotate(const Vec2& v) const { return {c * v.x + s * v.z, -s * v.x + c * v.z}; }

  // Composition r2 * r1 (apply r1 then r2).
  Rot2 compose(const Rot2& r1) const { return {c * r1.c - s * r1.s, s * r1.c + c * r1.s}; }
  Rot2 inverse() const { return {c, -s}; }

  // Relative rotation base^-1 * this, i.e. this expressed in the base frame.
  Rot2 relative_to(const Rot2& base) const {
    return {c * base.c + s * base.s, s * base.c - c * base.s};
  }

  Rot2 normalized() const {
    double n = std::sqrt(c * c + s * s);
    return {c / n, s / n};
  }
};

}  // namespace tracklab
