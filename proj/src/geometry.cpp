#include "evac/geometry.hpp"

#include <limits>

namespace evac {

double point_segment_distance(Vec2 p, const Segment& s) {
    const Vec2 d = s.b - s.a;
    const double len2 = dot(d, d);
    if (len2 == 0.0) return distance(p, s.a);
    const double t = std::clamp(dot(p - s.a, d) / len2, 0.0, 1.0);
    return distance(p, s.a + d * t);
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
    const double v = cross(b - a, c - a);
    if (v > 0) return 1;
    if (v < 0) return -1;
    return 0;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(const Segment& s, const Segment& t) {
    const int o1 = orientation(s.a, s.b, t.a);
    const int o2 = orientation(s.a, s.b, t.b);
    const int o3 = orientation(t.a, t.b, s.a);
    const int o4 = orientation(t.a, t.b, s.b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(s.a, s.b, t.a)) return true;
    if (o2 == 0 && on_segment(s.a, s.b, t.b)) return true;
    if (o3 == 0 && on_segment(t.a, t.b, s.a)) return true;
    if (o4 == 0 && on_segment(t.a, t.b, s.b)) return true;
    return false;
}

bool point_in_polygon(Vec2 p, std::span<const Vec2> poly) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 a = poly[j];
        const Vec2 b = poly[i];
        if (point_segment_distance(p, {a, b}) == 0.0) return true;
        if ((b.y > p.y) != (a.y > p.y)) {
            const double xint = b.x + (p.y - b.y) * (a.x - b.x) / (a.y - b.y);
            if (p.x < xint) inside = !inside;
        }
    }
    return inside;
}

double polygon_area(std::span<const Vec2> poly) {
    double acc = 0.0;
    for (std::size_t i = 0, n = poly.size(); i < n; ++i) acc += cross(poly[i], poly[(i + 1) % n]);
    return std::abs(acc) / 2.0;
}

Vec2 polygon_centroid(std::span<const Vec2> poly) {
    double a = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
        const Vec2 p = poly[i];
        const Vec2 q = poly[(i + 1) % n];
        const double c = cross(p, q);
        a += c;
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    if (a == 0.0) {
        Vec2 mean;
        for (const Vec2& p : poly) mean = mean + p;
        return poly.empty() ? mean : mean * (1.0 / static_cast<double>(poly.size()));
    }
    return {cx / (3.0 * a), cy / (3.0 * a)};
}

Box bounding_box(std::span<const Vec2> poly) {
    Box b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const Vec2& p : poly) {
        b.x0 = std::min(b.x0, p.x);
        b.y0 = std::min(b.y0, p.y);
        b.x1 = std::max(b.x1, p.x);
        b.y1 = std::max(b.y1, p.y);
    }
    return b;
}

double point_polygon_boundary_distance(Vec2 p, std::span<const Vec2> poly) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0, n = poly.size(); i < n; ++i)
        best = std::min(best, point_segment_distance(p, {poly[i], poly[(i + 1) % n]}));
    return best;
}

std::vector<Segment> polygon_edges(std::span<const Vec2> poly) {
    std::vector<Segment> out;
    out.reserve(poly.size());
    for (std::size_t i = 0, n = poly.size(); i < n; ++i) out.push_back({poly[i], poly[(i + 1) % n]});
    return out;
}

}  // namespace evac
