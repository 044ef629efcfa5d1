#include "evac/raster.hpp"

#include <fmt/format.h>

#include <cmath>

#include "evac/errors.hpp"

namespace evac {

namespace {

// Favors the higher-index pixel/cell when a coordinate lands on a boundary
// up to floating-point noise.
constexpr double kTieEps = 1e-9;

int content_px(double meters) { return static_cast<int>(std::lround(meters * kPxPerMeter)); }

void check_inside(double x, double y, const CanvasPlacement& at) {
    if (!(x >= -kTieEps && y >= -kTieEps && x <= at.site_length + kTieEps && y <= at.site_width + kTieEps))
        throw OutOfBounds(fmt::format("point ({}, {}) outside site {}x{} m", x, y, at.site_length, at.site_width));
}

struct PixelBox {
    int x0, y0, x1, y1;  // inclusive
};

PixelBox pixel_bounds(const Box& b, const CanvasPlacement& at, int margin) {
    return {std::max(0, at.offset_px + static_cast<int>(std::floor(b.x0 * kPxPerMeter)) - margin),
            std::max(0, at.offset_py + static_cast<int>(std::floor(b.y0 * kPxPerMeter)) - margin),
            std::min(kCanvasPx - 1, at.offset_px + static_cast<int>(std::ceil(b.x1 * kPxPerMeter)) + margin),
            std::min(kCanvasPx - 1, at.offset_py + static_cast<int>(std::ceil(b.y1 * kPxPerMeter)) + margin)};
}

void fill_polygon(Image& img, const Polygon& poly, const CanvasPlacement& at, Rgb color) {
    if (poly.size() < 3) return;
    const PixelBox r = pixel_bounds(bounding_box(poly), at, 1);
    for (int py = r.y0; py <= r.y1; ++py)
        for (int px = r.x0; px <= r.x1; ++px)
            if (point_in_polygon(pixel_to_world(px, py, at), poly)) img.set(px, py, color);
}

// Stroke of width 2 px: every pixel whose center is within 1 px of the segment.
void stroke_segment(Image& img, const Segment& s, const CanvasPlacement& at) {
    const PixelBox r = pixel_bounds(bounding_box(std::vector<Vec2>{s.a, s.b}), at, 2);
    const Segment px_seg{{at.offset_px + s.a.x * kPxPerMeter, at.offset_py + s.a.y * kPxPerMeter},
                         {at.offset_px + s.b.x * kPxPerMeter, at.offset_py + s.b.y * kPxPerMeter}};
    for (int py = r.y0; py <= r.y1; ++py)
        for (int px = r.x0; px <= r.x1; ++px)
            if (point_segment_distance({px + 0.5, py + 0.5}, px_seg) <= 1.0) img.set(px, py, kBlack);
}

FloorImage render(const Floorplan& fp, const Scenario* scenario) {
    FloorImage out{Image(kCanvasPx, kCanvasPx, kBlack), place_on_canvas(fp)};
    const CanvasPlacement& at = out.placement;
    Image& img = out.pixels;
    img.fill_rect(at.offset_px, at.offset_py, at.offset_px + content_px(fp.site_length),
                  at.offset_py + content_px(fp.site_width), kWhite);
    if (scenario) {
        for (const Origin& o : scenario->origins) fill_polygon(img, fp.rooms.at(o.room).polygon, at, kRed);
        for (int d : scenario->destinations) fill_polygon(img, fp.exit_zones.at(d), at, kGreen);
    }
    for (const Polygon& p : fp.obstacles) fill_polygon(img, p, at, kBlack);
    for (const Polygon& p : fp.bottleneck) fill_polygon(img, p, at, kBlack);
    for (const Segment& s : fp.walls) stroke_segment(img, s, at);
    return out;
}

}  // namespace

CanvasPlacement place_on_canvas(double site_length, double site_width) {
    if (site_length > 64.0 || site_width > 64.0)
        throw SiteTooLarge(fmt::format("site {}x{} m exceeds the 64x64 m canvas", site_length, site_width));
    if (!(site_length > 0.0 && site_width > 0.0)) throw OutOfBounds("site dimensions must be positive");
    return {(kCanvasPx - content_px(site_length)) / 2, (kCanvasPx - content_px(site_width)) / 2, site_length,
            site_width};
}

FloorImage rasterize(const Floorplan& fp, const Scenario& scenario) { return render(fp, &scenario); }
FloorImage rasterize(const Floorplan& fp) { return render(fp, nullptr); }

std::pair<int, int> world_to_pixel(double x, double y, const CanvasPlacement& at) {
    check_inside(x, y, at);
    const int px = at.offset_px + static_cast<int>(std::floor(x * kPxPerMeter + kTieEps));
    const int py = at.offset_py + static_cast<int>(std::floor(y * kPxPerMeter + kTieEps));
    return {std::clamp(px, 0, kCanvasPx - 1), std::clamp(py, 0, kCanvasPx - 1)};
}

Vec2 pixel_to_world(int px, int py, const CanvasPlacement& at) {
    return {(px - at.offset_px + 0.5) / kPxPerMeter, (py - at.offset_py + 0.5) / kPxPerMeter};
}

std::pair<int, int> cell_of(double x, double y, const CanvasPlacement& at, const GridSpec& grid) {
    check_inside(x, y, at);
    const double cell = grid.cell_px;
    const int cx = static_cast<int>(std::floor((at.offset_px + x * kPxPerMeter) / cell + kTieEps));
    const int cy = static_cast<int>(std::floor((at.offset_py + y * kPxPerMeter) / cell + kTieEps));
    return {std::clamp(cx, 0, grid.cells - 1), std::clamp(cy, 0, grid.cells - 1)};
}

}  // namespace evac
