#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "evac/geometry.hpp"

namespace evac {

struct TrajectoryRow {
    double t = 0.0;
    int agent_id = 0;
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const TrajectoryRow&, const TrajectoryRow&) = default;
};

/// (t, agent id, x, y) rows sorted by (t, agent id). Each agent starts at
/// t = 0 and ends at its arrival time.
struct TrajectoryTable {
    std::vector<TrajectoryRow> rows;

    int agent_count() const;
    double end_time() const;
    friend bool operator==(const TrajectoryTable&, const TrajectoryTable&) = default;
};

/// Per-agent view of a trajectory table, for time queries.
class AgentTracks {
public:
    struct Point {
        double t;
        Vec2 p;
    };

    explicit AgentTracks(const TrajectoryTable& table);

    int agent_count() const { return static_cast<int>(tracks_.size()); }
    double end_time() const { return end_time_; }
    const std::vector<Point>& track(int agent) const { return tracks_.at(agent); }
    double arrival(int agent) const { return tracks_.at(agent).back().t; }

    /// Linear interpolation of one agent; t clamped to its track.
    Vec2 position(int agent, double t) const;

private:
    std::vector<std::vector<Point>> tracks_;
    double end_time_ = 0.0;
};

/// Positions of agents present at time t (arrival >= t), by agent id.
/// Throws OutOfRange outside [0, end time].
std::vector<std::pair<int, Vec2>> interpolate(const AgentTracks& tracks, double t);
std::vector<std::pair<int, Vec2>> interpolate(const TrajectoryTable& table, double t);

/// CSV with header `t,agent_id,x,y`, 4-decimal fixed point.
void write_trajectory_csv(std::ostream& os, const TrajectoryTable& table);
TrajectoryTable read_trajectory_csv(std::istream& is);

}  // namespace evac
