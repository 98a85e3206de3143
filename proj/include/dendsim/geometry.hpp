#pragma once

#include <cmath>
#include <optional>

namespace dendsim {

/// 2-D point/vector in micrometers. The MEA plane is two-dimensional.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double k) const { return {x * k, y * k}; }
    bool operator==(const Vec2&) const = default;

    double norm() const { return std::hypot(x, y); }

    Vec2 normalized() const {
        double n = norm();
        if (n == 0.0) return {1.0, 0.0};
        return {x / n, y / n};
    }

    Vec2 rotated(double angle_rad) const {
        double c = std::cos(angle_rad), s = std::sin(angle_rad);
        return {c * x - s * y, s * x + c * y};
    }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

/// Closest point on segment [a,b] to p, returned as the parameter t in [0,1].
inline double closest_point_param(Vec2 a, Vec2 b, Vec2 p) {
    Vec2 ab = b - a;
    double len2 = dot(ab, ab);
    if (len2 == 0.0) return 0.0;
    double t = dot(p - a, ab) / len2;
    return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
}

inline double point_segment_distance(Vec2 a, Vec2 b, Vec2 p) {
    double t = closest_point_param(a, b, p);
    return distance(p, a + (b - a) * t);
}

/// Proper crossing of segments [a,b] and [c,d]. Returns the parameter along
/// [a,b] of the crossing point, or nullopt when the segments do not cross.
inline std::optional<double> segment_crossing_param(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    Vec2 r = b - a;
    Vec2 s = d - c;
    double denom = cross(r, s);
    if (std::abs(denom) < 1e-12) return std::nullopt; // parallel
    double t = cross(c - a, s) / denom;
    double u = cross(c - a, r) / denom;
    if (t <= 1e-9 || t >= 1.0 - 1e-9) return std::nullopt;
    if (u <= 1e-9 || u >= 1.0 - 1e-9) return std::nullopt;
    return t;
}

} // namespace dendsim
