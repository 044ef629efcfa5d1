#pragma once

#include <limits>
#include <span>
#include <vector>

#include "evac/floorplan.hpp"

namespace evac {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Static floor field: geodesic distance (m) to the nearest destination
/// over the 8-connected free cells of an inflated occupancy grid.
struct NavField {
    OccupancyGrid grid;
    std::vector<double> dist;  // +inf on blocked or unreachable cells

    double at(int i, int j) const { return grid.in_range(i, j) ? dist[grid.index(i, j)] : kInfinity; }

    /// Bilinear interpolation of the four surrounding cell centers, blocked
    /// cells left out and the weights renormalized. Falls back to the best
    /// nearby cell plus straight-line distance when all four are blocked.
    double value(Vec2 q) const;
};

/// Multi-source Dijkstra from `sources` (cell indices) over free cells;
/// orthogonal steps cost one resolution, diagonal steps sqrt(2) of it.
NavField compute_nav_field(OccupancyGrid grid, std::span<const std::size_t> sources);

/// Field toward the given exit zones. Throws NoDestination when the list is
/// empty or none of the zones has a free cell, DisconnectedSpace when some
/// room door cannot reach them.
NavField compute_nav_field(const Floorplan& fp, std::span<const int> destinations, double resolution = 0.1,
                           double inflation = 0.23);

}  // namespace evac
