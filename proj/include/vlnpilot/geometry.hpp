#pragma once

// Planar geometry in the X-Z ground plane. All primitives are templated on
// the scalar type; the rest of the library instantiates them with double.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace vlnpilot {

template <typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3T = Eigen::Matrix<Scalar, 3, 1>;

using Vec2 = Vec2T<double>;
using Vec3 = Vec3T<double>;

template <typename Scalar>
constexpr Scalar kPi = Scalar(3.14159265358979323846264338327950288);

template <typename Scalar>
constexpr Scalar deg2rad(Scalar deg) {
  return deg * kPi<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad2deg(Scalar rad) {
  return rad * Scalar(180) / kPi<Scalar>;
}

/// Wraps an angle in degrees into [0, 360).
template <typename Scalar>
Scalar wrap_degrees(Scalar deg) {
  Scalar r = std::fmod(deg, Scalar(360));
  if (r < Scalar(0)) r += Scalar(360);
  // fmod of a tiny negative number can round back up to exactly 360
  if (r >= Scalar(360)) r -= Scalar(360);
  return r;
}

/// Wraps an angle in degrees into (-180, 180].
template <typename Scalar>
Scalar wrap_signed_degrees(Scalar deg) {
  Scalar r = wrap_degrees(deg);
  return r > Scalar(180) ? r - Scalar(360) : r;
}

template <typename Scalar>
Scalar cross2(const Vec2T<Scalar>& a, const Vec2T<Scalar>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

/// Closed interval of a ray parameter, t_enter <= t_exit.
template <typename Scalar>
struct RayInterval {
  Scalar t_enter;
  Scalar t_exit;
  /// Index of the face the ray enters through (primitive-specific meaning).
  int face = 0;
};

/// Axis-aligned rectangle. `min` and `max` are opposite corners, x then z.
template <typename Scalar>
struct RectT {
  Vec2T<Scalar> min;
  Vec2T<Scalar> max;

  Scalar width() const { return max.x() - min.x(); }
  Scalar depth() const { return max.y() - min.y(); }
  Vec2T<Scalar> center() const { return (min + max) / Scalar(2); }

  /// Half-open containment, [min, max). Adjacent rectangles sharing an edge
  /// never both contain a point.
  bool contains(const Vec2T<Scalar>& p) const {
    return p.x() >= min.x() && p.x() < max.x() && p.y() >= min.y() && p.y() < max.y();
  }

  bool contains_closed(const Vec2T<Scalar>& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }

  bool overlaps(const RectT& o) const {
    return min.x() < o.max.x() && o.min.x() < max.x() && min.y() < o.max.y() &&
           o.min.y() < max.y();
  }

  Vec2T<Scalar> closest_point(const Vec2T<Scalar>& p) const {
    return p.cwiseMax(min).cwiseMin(max);
  }

  /// Euclidean distance from p to the filled rectangle (0 inside).
  Scalar distance(const Vec2T<Scalar>& p) const { return (p - closest_point(p)).norm(); }

  /// Slab test. Face: 0 = x-min, 1 = x-max, 2 = z-min, 3 = z-max.
  std::optional<RayInterval<Scalar>> intersect_ray(const Vec2T<Scalar>& origin,
                                                   const Vec2T<Scalar>& dir) const {
    Scalar t0 = -std::numeric_limits<Scalar>::infinity();
    Scalar t1 = std::numeric_limits<Scalar>::infinity();
    int face = 0;
    for (int axis = 0; axis < 2; ++axis) {
      if (dir[axis] == Scalar(0)) {
        if (origin[axis] < min[axis] || origin[axis] > max[axis]) return std::nullopt;
        continue;
      }
      const Scalar inv = Scalar(1) / dir[axis];
      Scalar a = (min[axis] - origin[axis]) * inv;
      Scalar b = (max[axis] - origin[axis]) * inv;
      int entering = axis * 2 + (inv < 0 ? 1 : 0);
      if (a > b) std::swap(a, b);
      if (a > t0) {
        t0 = a;
        face = entering;
      }
      t1 = std::min(t1, b);
      if (t0 > t1) return std::nullopt;
    }
    return RayInterval<Scalar>{t0, t1, face};
  }
};

template <typename Scalar>
struct SegmentT {
  Vec2T<Scalar> a;
  Vec2T<Scalar> b;

  Scalar length() const { return (b - a).norm(); }
  Vec2T<Scalar> midpoint() const { return (a + b) / Scalar(2); }

  Vec2T<Scalar> closest_point(const Vec2T<Scalar>& p) const {
    const Vec2T<Scalar> ab = b - a;
    const Scalar len2 = ab.squaredNorm();
    if (len2 == Scalar(0)) return a;
    const Scalar t = std::clamp((p - a).dot(ab) / len2, Scalar(0), Scalar(1));
    return a + t * ab;
  }

  Scalar distance(const Vec2T<Scalar>& p) const { return (p - closest_point(p)).norm(); }
};

/// True when the two segments share a point that is interior to both
/// (touching at an endpoint of either does not count).
template <typename Scalar>
bool segments_cross_interior(const SegmentT<Scalar>& s, const SegmentT<Scalar>& t,
                             Scalar eps = Scalar(1e-9)) {
  const Vec2T<Scalar> r = s.b - s.a;
  const Vec2T<Scalar> q = t.b - t.a;
  const Scalar denom = cross2(r, q);
  const Vec2T<Scalar> d = t.a - s.a;
  if (std::abs(denom) < eps) {
    // Parallel. Collinear overlap of positive length counts as crossing.
    if (std::abs(cross2(d, r)) > eps * std::max(Scalar(1), r.norm())) return false;
    const Scalar rr = r.squaredNorm();
    if (rr == Scalar(0)) return false;
    Scalar u0 = d.dot(r) / rr;
    Scalar u1 = (t.b - s.a).dot(r) / rr;
    if (u0 > u1) std::swap(u0, u1);
    return std::min(u1, Scalar(1)) - std::max(u0, Scalar(0)) > eps;
  }
  const Scalar u = cross2(d, q) / denom;
  const Scalar v = cross2(d, r) / denom;
  return u > eps && u < Scalar(1) - eps && v > eps && v < Scalar(1) - eps;
}

/// A segment swept perpendicular to itself by +-thickness/2: an oriented
/// rectangle without rounded caps.
template <typename Scalar>
struct ThickSegmentT {
  SegmentT<Scalar> axis;
  Scalar thickness;

  /// Point expressed in the local frame: (along-axis from `a`, signed offset).
  Vec2T<Scalar> to_local(const Vec2T<Scalar>& p) const {
    const Vec2T<Scalar> u = (axis.b - axis.a).normalized();
    const Vec2T<Scalar> n(-u.y(), u.x());
    const Vec2T<Scalar> d = p - axis.a;
    return {d.dot(u), d.dot(n)};
  }

  RectT<Scalar> local_box() const {
    const Scalar h = thickness / Scalar(2);
    return {{Scalar(0), -h}, {axis.length(), h}};
  }

  Vec2T<Scalar> closest_point(const Vec2T<Scalar>& p) const {
    const Vec2T<Scalar> u = (axis.b - axis.a).normalized();
    const Vec2T<Scalar> n(-u.y(), u.x());
    const Vec2T<Scalar> c = local_box().closest_point(to_local(p));
    return axis.a + c.x() * u + c.y() * n;
  }

  Scalar distance(const Vec2T<Scalar>& p) const { return local_box().distance(to_local(p)); }

  /// Face: 0 or 1 = end caps, 2 or 3 = long sides.
  std::optional<RayInterval<Scalar>> intersect_ray(const Vec2T<Scalar>& origin,
                                                   const Vec2T<Scalar>& dir) const {
    const Vec2T<Scalar> u = (axis.b - axis.a).normalized();
    const Vec2T<Scalar> n(-u.y(), u.x());
    const Vec2T<Scalar> o = to_local(origin);
    const Vec2T<Scalar> d(dir.dot(u), dir.dot(n));
    return local_box().intersect_ray(o, d);
  }
};

/// Vertical cylinder footprint.
template <typename Scalar>
struct CircleT {
  Vec2T<Scalar> center;
  Scalar radius;

  std::optional<RayInterval<Scalar>> intersect_ray(const Vec2T<Scalar>& origin,
                                                   const Vec2T<Scalar>& dir) const {
    const Vec2T<Scalar> oc = origin - center;
    const Scalar a = dir.squaredNorm();
    const Scalar b = oc.dot(dir);
    const Scalar c = oc.squaredNorm() - radius * radius;
    const Scalar disc = b * b - a * c;
    if (disc < Scalar(0) || a == Scalar(0)) return std::nullopt;
    const Scalar s = std::sqrt(disc);
    return RayInterval<Scalar>{(-b - s) / a, (-b + s) / a, 0};
  }
};

using Rect = RectT<double>;
using Segment = SegmentT<double>;
using ThickSegment = ThickSegmentT<double>;
using Circle = CircleT<double>;

}  // namespace vlnpilot
