#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evac/floorplan.hpp"
#include "evac/navfield.hpp"
#include "evac/trajectory.hpp"

namespace evac {

/// Constants of the stepping model. Defaults are the documented values.
struct EngineConfig {
    // Stride s = clamp(stride_factor * desired_speed, stride_min, stride_max).
    double stride_factor = 0.5;
    double stride_min = 0.3;
    double stride_max = 1.0;
    // Agent repulsion -strength * exp(-dist / range) inside cutoff.
    double agent_repulsion = 1.0;
    double agent_repulsion_range = 0.5;
    double agent_repulsion_cutoff = 2.0;
    // Wall repulsion -strength * exp(-wall_dist / range) inside cutoff.
    double wall_repulsion = 0.5;
    double wall_repulsion_range = 0.3;
    double wall_repulsion_cutoff = 1.0;

    double min_speed = 0.3;
    double radius_min = 0.21;
    double radius_max = 0.23;
    double t_max = 3600.0;
    int max_placement_attempts = 10000;
    double nav_resolution = 0.1;
    double nav_inflation = 0.23;

    double stride(double desired_speed) const;
    friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

enum class AgentState { Active, Arrived };

struct Agent {
    int id = 0;
    double radius = 0.22;
    double desired_speed = 1.34;
    Vec2 position;
    AgentState state = AgentState::Active;

    friend bool operator==(const Agent&, const Agent&) = default;
};

/// Walls, obstacle and bottleneck outlines bucketed on a uniform grid for
/// short-range clearance and crossing queries.
class StaticGeometry {
public:
    explicit StaticGeometry(const Floorplan& fp, double reach = 1.0);

    /// Distance to the nearest wall or obstacle edge, capped at reach();
    /// 0 inside an obstacle.
    double clearance(Vec2 q) const;
    /// True when the straight move p -> q touches a wall or obstacle edge.
    /// Valid for moves no longer than reach().
    bool crosses(Vec2 p, Vec2 q) const;
    bool inside_site(Vec2 q) const;
    double reach() const { return reach_; }

private:
    const std::vector<int>& bucket(Vec2 q) const;

    double length_ = 0.0, width_ = 0.0, reach_ = 1.0, cell_ = 1.0;
    int nx_ = 0, ny_ = 0;
    std::vector<Segment> segments_;
    std::vector<Polygon> solids_;
    std::vector<std::vector<int>> buckets_;      // segment ids per cell
    std::vector<std::vector<int>> solid_buckets_;
    std::vector<int> empty_;
};

/// Everything a run shares across agents and never mutates.
struct Environment {
    Floorplan floorplan;
    std::vector<int> destinations;
    NavField nav;
    StaticGeometry geometry;
    EngineConfig config;

    Environment(const Floorplan& fp, std::vector<int> destinations, const EngineConfig& config = {});
    bool at_destination(Vec2 p) const;
};

/// Live agent positions with a uniform-grid neighbor index.
class World {
public:
    World(const std::vector<Agent>& agents, double site_length, double site_width, double cell = 1.5);

    const std::vector<Agent>& agents() const { return agents_; }
    const Agent& agent(int id) const { return agents_.at(id); }
    /// Active agents other than `self` within `radius` of p, ascending id.
    void neighbors(Vec2 p, double radius, int self, std::vector<int>& out) const;
    void move(int id, Vec2 to);
    void retire(int id);

private:
    std::size_t cell_index(Vec2 p) const;

    std::vector<Agent> agents_;
    double cell_;
    int nx_, ny_;
    std::vector<std::vector<int>> cells_;
};

struct Candidate {
    int index = 0;  // 0 = stay, 1..16 full stride ring, 17..24 half stride ring
    Vec2 position;
    bool feasible = false;
    double nav = kInfinity;
    double utility = -kInfinity;
};

/// The 25 step candidates of one agent with feasibility and utility.
std::vector<Candidate> evaluate_candidates(const Agent& agent, const World& world, const Environment& env);

/// Best feasible candidate: one inside a destination zone if any, then
/// highest utility, then lowest nav value, then lowest index. Staying put is
/// always feasible.
Vec2 step_agent(const Agent& agent, const World& world, const Environment& env);

/// Radii, speeds and positions drawn from the scenario seed, one random
/// substream per agent. Throws PlacementFailure.
std::vector<Agent> sample_agents(const Scenario& scenario, const Environment& env);

struct SimResult {
    TrajectoryTable trajectory;
    double tet = 0.0;
    std::vector<double> arrivals;  // by agent id
    std::uint64_t seed = 0;
    std::string scenario_hash;
};

/// Event-driven run of pre-placed agents until every agent has arrived.
/// Throws Timeout past config.t_max.
SimResult simulate(const Environment& env, std::vector<Agent> agents);

/// validate -> nav field -> placement -> simulate.
SimResult run(const Scenario& scenario, const EngineConfig& config = {});

}  // namespace evac
