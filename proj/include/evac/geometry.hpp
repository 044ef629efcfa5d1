#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace evac {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

struct Segment {
    Vec2 a;
    Vec2 b;

    double length() const { return distance(a, b); }
    friend bool operator==(const Segment&, const Segment&) = default;
};

/// Closed polygon, vertices in order; the closing edge is implicit.
using Polygon = std::vector<Vec2>;

struct Box {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    Vec2 center() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }
    bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
    Polygon polygon() const { return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}; }
    friend bool operator==(const Box&, const Box&) = default;
};

double point_segment_distance(Vec2 p, const Segment& s);

/// True when the closed segments share at least one point.
bool segments_intersect(const Segment& s, const Segment& t);

/// Even-odd rule; points on the boundary count as inside.
bool point_in_polygon(Vec2 p, std::span<const Vec2> poly);

double polygon_area(std::span<const Vec2> poly);
Vec2 polygon_centroid(std::span<const Vec2> poly);
Box bounding_box(std::span<const Vec2> poly);

/// Distance from p to the polygon's boundary (0 inside is not implied).
double point_polygon_boundary_distance(Vec2 p, std::span<const Vec2> poly);

std::vector<Segment> polygon_edges(std::span<const Vec2> poly);

}  // namespace evac
