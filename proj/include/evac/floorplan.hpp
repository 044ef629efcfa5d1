#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evac/geometry.hpp"

namespace evac {

/// The three office archetypes: rooms along a straight, T-shaped or
/// L-shaped hallway.
enum class Archetype { A, B, C };

std::string archetype_name(Archetype a);
Archetype parse_archetype(const std::string& s);

struct GeometryParams {
    Archetype archetype = Archetype::A;
    double length = 20.0;          // site extent along x (m)
    double width = 10.0;           // site extent along y (m)
    double corridor_width = 3.0;   // m
    int num_rooms = 4;
    bool has_bottleneck = false;
    bool has_obstacles = false;

    friend bool operator==(const GeometryParams&, const GeometryParams&) = default;
};

struct Room {
    Polygon polygon;
    Segment door;  // lies on the room boundary, opens onto the hallway

    friend bool operator==(const Room&, const Room&) = default;
};

struct Floorplan {
    double site_length = 0.0;
    double site_width = 0.0;
    std::vector<Segment> walls;
    std::vector<Polygon> obstacles;
    std::vector<Room> rooms;
    std::vector<Polygon> exit_zones;
    /// Blocks that narrow the hallway in front of each exit; empty when the
    /// variant has no bottleneck.
    std::vector<Polygon> bottleneck;

    friend bool operator==(const Floorplan&, const Floorplan&) = default;
};

/// Fixed dimensions of the generated layouts (meters).
namespace layout {
inline constexpr double kMaxSite = 64.0;
inline constexpr double kMinSite = 4.0;
inline constexpr double kMinRoomDepth = 2.0;
inline constexpr double kMinRoomWidth = 1.2;
inline constexpr double kDoorWidth = 1.0;
inline constexpr double kExitDepth = 1.0;
inline constexpr double kEndHall = 2.0;  // hallway stretch without rooms at each exit
inline constexpr double kBottleneckGap = 1.0;
inline constexpr double kBottleneckDepth = 0.5;
inline constexpr double kColumnSize = 0.8;
inline constexpr double kMinPassage = 1.0;
}  // namespace layout

/// Throws InfeasibleParams naming the violated constraint.
Floorplan build_floorplan(const GeometryParams& params);

/// The documented 12-row version table of one archetype:
/// {short, long} x {narrow, wide hallway} x {plain, bottleneck, obstacles}.
std::vector<GeometryParams> enumerate_versions(Archetype archetype);

/// All 36 geometries in archetype-major order; index = geometry id.
std::vector<GeometryParams> enumerate_all_versions();

struct Origin {
    int room = 0;
    int agent_count = 0;

    friend bool operator==(const Origin&, const Origin&) = default;
};

struct Scenario {
    Floorplan floorplan;
    std::vector<Origin> origins;
    std::vector<int> destinations;  // exit-zone indices
    double mean_speed = 1.34;
    double speed_sigma = 0.26;
    std::uint64_t seed = 0;

    int total_agents() const;
    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Full-precision text form; equal scenarios give equal text. Used for
/// fingerprinting.
std::string canonical_text(const Scenario& s);

/// Throws InvalidScenario. paper_mode additionally restricts agent counts to
/// {10, 20, 30}.
void validate_scenario(const Scenario& s, bool paper_mode = false);

struct SweepConfig {
    std::vector<int> agents{10, 20, 30};
    std::vector<double> speeds{1.0, 1.34, 2.0};
    double speed_sigma = 0.26;
    std::uint64_t base_seed = 0;
    /// Keeps only the first N origin/destination layouts per floorplan.
    std::optional<int> layouts_per_geometry;

    friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

/// Origin choices (all rooms; first ceil(R/2) rooms; the single room farthest
/// from any exit) x destination choices (each exit alone; all exits) x agents
/// x speeds, layout-major. Seeds derive from base_seed and scenario index.
std::vector<Scenario> enumerate_scenarios(const Floorplan& fp, const SweepConfig& sweep);

/// Number of origin/destination layouts enumerate_scenarios produces.
int layout_count(const Floorplan& fp);

/// Boolean occupancy on a regular grid over the site, cells blocked when
/// their center is closer than `inflation` to a wall or obstacle.
struct OccupancyGrid {
    double resolution = 0.1;
    int nx = 0;
    int ny = 0;
    std::vector<std::uint8_t> blocked;

    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
    bool in_range(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
    bool free(int i, int j) const { return in_range(i, j) && !blocked[index(i, j)]; }
    Vec2 center(int i, int j) const { return {(i + 0.5) * resolution, (j + 0.5) * resolution}; }
    /// Cell containing p, clamped to the grid.
    std::pair<int, int> cell_of(Vec2 p) const;
};

OccupancyGrid make_occupancy_grid(const Floorplan& fp, double resolution = 0.1,
                                  double inflation = 0.23);

/// Cells whose centers fall inside the polygon.
std::vector<std::size_t> cells_in_polygon(const OccupancyGrid& grid, std::span<const Vec2> poly);

struct ConnectivityReport {
    struct Pair {
        int room = 0;
        int exit = 0;
        bool reachable = false;
    };
    std::vector<Pair> pairs;

    bool all_reachable() const;
};

ConnectivityReport validate_connectivity(const Floorplan& fp);

/// Line-oriented text format, versioned ("evac-floorplan 1"), 6-decimal
/// fixed coordinates.
void write_floorplan(std::ostream& os, const Floorplan& fp);
Floorplan read_floorplan(std::istream& is);

}  // namespace evac
