#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace polydg {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return a -= b; }
    friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(b - a); }

/// Twice the signed area of triangle (a, b, c); positive when counter-clockwise.
constexpr double orient(Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); }

/// Signed area by the shoelace formula (positive for CCW loops).
inline double signed_area(std::span<const Vec2> poly)
{
    double s = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) s += cross(poly[i], poly[(i + 1) % n]);
    return 0.5 * s;
}

/// Area centroid of a simple polygon.
inline Vec2 centroid(std::span<const Vec2> poly)
{
    const std::size_t n = poly.size();
    // shift to the first vertex for round-off
    const Vec2 o = poly[0];
    double a = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 p = poly[i] - o;
        const Vec2 q = poly[(i + 1) % n] - o;
        const double c = cross(p, q);
        a += c;
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    return {o.x + cx / (3.0 * a), o.y + cy / (3.0 * a)};
}

/// Largest vertex-to-vertex distance.
inline double diameter(std::span<const Vec2> poly)
{
    double d = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i)
        for (std::size_t j = i + 1; j < poly.size(); ++j) d = std::max(d, distance(poly[i], poly[j]));
    return d;
}

/// True when p lies strictly inside segment (a, b), up to a relative tolerance.
inline bool on_segment_interior(Vec2 p, Vec2 a, Vec2 b, double tol = 1e-10)
{
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return false;
    const double len = std::sqrt(len2);
    if (std::abs(cross(ab, p - a)) > tol * len * len) return false;
    const double t = dot(p - a, ab) / len2;
    return t > tol && t < 1.0 - tol;
}

/// Proper or improper intersection test of closed segments (p1,p2) and (q1,q2).
inline bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2)
{
    auto sgn = [](double v) { return (v > 0.0) - (v < 0.0); };
    const int d1 = sgn(orient(q1, q2, p1));
    const int d2 = sgn(orient(q1, q2, p2));
    const int d3 = sgn(orient(p1, p2, q1));
    const int d4 = sgn(orient(p1, p2, q2));
    if (d1 * d2 < 0 && d3 * d4 < 0) return true;
    auto within = [](Vec2 a, Vec2 b, Vec2 p) {
        return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
               p.y <= std::max(a.y, b.y);
    };
    if (d1 == 0 && within(q1, q2, p1)) return true;
    if (d2 == 0 && within(q1, q2, p2)) return true;
    if (d3 == 0 && within(p1, p2, q1)) return true;
    if (d4 == 0 && within(p1, p2, q2)) return true;
    return false;
}

/// True when the closed loop has no two non-adjacent sides touching.
inline bool is_simple(std::span<const Vec2> poly)
{
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i], b = poly[(i + 1) % n];
        if (a == b) return false;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            if (segments_intersect(a, b, poly[j], poly[(j + 1) % n])) return false;
        }
    }
    return true;
}

/// Drop vertices whose two incident sides are collinear (and duplicated vertices).
inline std::vector<Vec2> remove_collinear(std::span<const Vec2> poly, double tol = 1e-12)
{
    std::vector<Vec2> out(poly.begin(), poly.end());
    bool changed = true;
    while (changed && out.size() > 3) {
        changed = false;
        for (std::size_t i = 0; i < out.size() && out.size() > 3; ++i) {
            const Vec2 prev = out[(i + out.size() - 1) % out.size()];
            const Vec2 next = out[(i + 1) % out.size()];
            const Vec2 cur = out[i];
            const double scale = std::max(dot(next - prev, next - prev), 1e-300);
            const bool straight = std::abs(orient(prev, cur, next)) <= tol * scale && dot(cur - prev, next - cur) >= 0.0;
            if (cur == prev || straight) {
                out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
    return out;
}

} // namespace polydg
