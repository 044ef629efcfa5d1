#pragma once

#include <utility>

#include "evac/floorplan.hpp"
#include "evac/image.hpp"

namespace evac {

inline constexpr int kCanvasPx = 640;
inline constexpr double kPxPerMeter = 10.0;

/// 160x160 grid of 4x4 px (0.4x0.4 m) cells over the canvas.
struct GridSpec {
    int cell_px = 4;
    double cell_m = 0.4;
    int cells = 160;
};

inline constexpr GridSpec kGrid{};
static_assert(kGrid.cell_px * kGrid.cells == kCanvasPx);

/// Where a floorplan sits on the canvas: pixel of the world origin plus
/// the site extent used for bounds checks.
struct CanvasPlacement {
    int offset_px = 0;
    int offset_py = 0;
    double site_length = 0.0;
    double site_width = 0.0;

    friend bool operator==(const CanvasPlacement&, const CanvasPlacement&) = default;
};

/// Centers the site on the canvas at the fixed metric scale. Throws
/// SiteTooLarge above 64 m.
CanvasPlacement place_on_canvas(double site_length, double site_width);
inline CanvasPlacement place_on_canvas(const Floorplan& fp) {
    return place_on_canvas(fp.site_length, fp.site_width);
}

struct FloorImage {
    Image pixels;
    CanvasPlacement placement;
};

/// White interior, 2 px black walls, black obstacles, origin rooms red and
/// destination zones green, black padding.
FloorImage rasterize(const Floorplan& fp, const Scenario& scenario);
/// Same without origin/destination markings.
FloorImage rasterize(const Floorplan& fp);

/// Throw OutOfBounds for points outside the site.
std::pair<int, int> world_to_pixel(double x, double y, const CanvasPlacement& at);
inline std::pair<int, int> world_to_pixel(double x, double y, const FloorImage& img) {
    return world_to_pixel(x, y, img.placement);
}

/// World coordinates of a pixel center.
Vec2 pixel_to_world(int px, int py, const CanvasPlacement& at);

std::pair<int, int> cell_of(double x, double y, const CanvasPlacement& at, const GridSpec& grid = kGrid);
inline std::pair<int, int> cell_of(double x, double y, const FloorImage& img, const GridSpec& grid = kGrid) {
    return cell_of(x, y, img.placement, grid);
}

}  // namespace evac
