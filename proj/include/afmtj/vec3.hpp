#pragma once

#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace afmtj {

/// Plain 3-vector used for fields (T), torques (1/s) and magnetization.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

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

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
  }
};

constexpr double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Direction vector whose Euclidean norm is 1 (to ~1e-15) by construction.
class UnitVector3 {
 public:
  /// Normalizes `v`; throws std::invalid_argument for a zero vector.
  explicit UnitVector3(const Vec3& v) : v_(normalized(v)) {}
  UnitVector3(double x, double y, double z) : UnitVector3(Vec3{x, y, z}) {}

  static UnitVector3 x_hat() { return UnitVector3{1.0, 0.0, 0.0}; }
  static UnitVector3 y_hat() { return UnitVector3{0.0, 1.0, 0.0}; }
  static UnitVector3 z_hat() { return UnitVector3{0.0, 0.0, 1.0}; }

  double x() const { return v_.x; }
  double y() const { return v_.y; }
  double z() const { return v_.z; }
  const Vec3& vec() const { return v_; }
  operator const Vec3&() const { return v_; }

  UnitVector3 operator-() const { return UnitVector3(-v_); }
  friend bool operator==(const UnitVector3&, const UnitVector3&) = default;

 private:
  static Vec3 normalized(const Vec3& v) {
    const double n = norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw std::invalid_argument("UnitVector3: cannot normalize a zero or non-finite vector");
    }
    return (1.0 / n) * v;
  }

  Vec3 v_;
};

}  // namespace afmtj
