#include "evac/engine.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <queue>

#include "evac/errors.hpp"
#include "evac/hash.hpp"
#include "evac/random.hpp"

namespace evac {

double EngineConfig::stride(double desired_speed) const {
    return std::clamp(stride_factor * desired_speed, stride_min, stride_max);
}

// --- StaticGeometry ---------------------------------------------------------

StaticGeometry::StaticGeometry(const Floorplan& fp, double reach)
    : length_(fp.site_length), width_(fp.site_width), reach_(reach), cell_(1.0) {
    nx_ = static_cast<int>(std::ceil(length_ / cell_)) + 1;
    ny_ = static_cast<int>(std::ceil(width_ / cell_)) + 1;
    buckets_.resize(static_cast<std::size_t>(nx_) * ny_);
    solid_buckets_.resize(buckets_.size());

    segments_ = fp.walls;
    auto add_solid = [&](const Polygon& p) {
        if (p.size() < 3 || polygon_area(p) <= 0.0) return;
        solids_.push_back(p);
        for (const Segment& e : polygon_edges(p)) segments_.push_back(e);
    };
    for (const Polygon& p : fp.obstacles) add_solid(p);
    for (const Polygon& p : fp.bottleneck) add_solid(p);

    auto register_box = [&](Box b, int id, std::vector<std::vector<int>>& into) {
        const int i0 = std::max(0, static_cast<int>(std::floor((b.x0 - reach_) / cell_)));
        const int j0 = std::max(0, static_cast<int>(std::floor((b.y0 - reach_) / cell_)));
        const int i1 = std::min(nx_ - 1, static_cast<int>(std::floor((b.x1 + reach_) / cell_)));
        const int j1 = std::min(ny_ - 1, static_cast<int>(std::floor((b.y1 + reach_) / cell_)));
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) into[static_cast<std::size_t>(j) * nx_ + i].push_back(id);
    };
    for (std::size_t k = 0; k < segments_.size(); ++k)
        register_box(bounding_box(std::vector<Vec2>{segments_[k].a, segments_[k].b}), static_cast<int>(k), buckets_);
    for (std::size_t k = 0; k < solids_.size(); ++k)
        register_box(bounding_box(solids_[k]), static_cast<int>(k), solid_buckets_);
}

const std::vector<int>& StaticGeometry::bucket(Vec2 q) const {
    const int i = static_cast<int>(std::floor(q.x / cell_));
    const int j = static_cast<int>(std::floor(q.y / cell_));
    if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return empty_;
    return buckets_[static_cast<std::size_t>(j) * nx_ + i];
}

double StaticGeometry::clearance(Vec2 q) const {
    const int i = static_cast<int>(std::floor(q.x / cell_));
    const int j = static_cast<int>(std::floor(q.y / cell_));
    if (i >= 0 && j >= 0 && i < nx_ && j < ny_)
        for (int s : solid_buckets_[static_cast<std::size_t>(j) * nx_ + i])
            if (point_in_polygon(q, solids_[s])) return 0.0;
    double best = reach_;
    for (int s : bucket(q)) best = std::min(best, point_segment_distance(q, segments_[s]));
    return best;
}

bool StaticGeometry::crosses(Vec2 p, Vec2 q) const {
    const Segment move{p, q};
    for (int s : bucket(q))
        if (segments_intersect(move, segments_[s])) return true;
    return false;
}

bool StaticGeometry::inside_site(Vec2 q) const { return q.x >= 0 && q.y >= 0 && q.x <= length_ && q.y <= width_; }

// --- Environment ------------------------------------------------------------

Environment::Environment(const Floorplan& fp, std::vector<int> dests, const EngineConfig& cfg)
    : floorplan(fp),
      destinations(std::move(dests)),
      nav(compute_nav_field(fp, destinations, cfg.nav_resolution, cfg.nav_inflation)),
      geometry(fp, std::max({cfg.stride_max, cfg.wall_repulsion_cutoff, cfg.radius_max})),
      config(cfg) {}

bool Environment::at_destination(Vec2 p) const {
    for (int d : destinations)
        if (point_in_polygon(p, floorplan.exit_zones[d])) return true;
    return false;
}

// --- World ------------------------------------------------------------------

World::World(const std::vector<Agent>& agents, double site_length, double site_width, double cell)
    : agents_(agents), cell_(cell) {
    nx_ = static_cast<int>(std::ceil(site_length / cell_)) + 1;
    ny_ = static_cast<int>(std::ceil(site_width / cell_)) + 1;
    cells_.resize(static_cast<std::size_t>(nx_) * ny_);
    for (const Agent& a : agents_)
        if (a.state == AgentState::Active) cells_[cell_index(a.position)].push_back(a.id);
}

std::size_t World::cell_index(Vec2 p) const {
    const int i = std::clamp(static_cast<int>(std::floor(p.x / cell_)), 0, nx_ - 1);
    const int j = std::clamp(static_cast<int>(std::floor(p.y / cell_)), 0, ny_ - 1);
    return static_cast<std::size_t>(j) * nx_ + i;
}

void World::neighbors(Vec2 p, double radius, int self, std::vector<int>& out) const {
    out.clear();
    const int i0 = std::max(0, static_cast<int>(std::floor((p.x - radius) / cell_)));
    const int j0 = std::max(0, static_cast<int>(std::floor((p.y - radius) / cell_)));
    const int i1 = std::min(nx_ - 1, static_cast<int>(std::floor((p.x + radius) / cell_)));
    const int j1 = std::min(ny_ - 1, static_cast<int>(std::floor((p.y + radius) / cell_)));
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i)
            for (int id : cells_[static_cast<std::size_t>(j) * nx_ + i])
                if (id != self && distance(agents_[id].position, p) <= radius) out.push_back(id);
    std::sort(out.begin(), out.end());
}

void World::move(int id, Vec2 to) {
    Agent& a = agents_.at(id);
    const std::size_t from = cell_index(a.position);
    const std::size_t dest = cell_index(to);
    if (from != dest && a.state == AgentState::Active) {
        auto& v = cells_[from];
        v.erase(std::find(v.begin(), v.end(), id));
        cells_[dest].push_back(id);
    }
    a.position = to;
}

void World::retire(int id) {
    Agent& a = agents_.at(id);
    if (a.state == AgentState::Arrived) return;
    auto& v = cells_[cell_index(a.position)];
    v.erase(std::find(v.begin(), v.end(), id));
    a.state = AgentState::Arrived;
}

// --- Stepping ---------------------------------------------------------------

namespace {

constexpr int kOuterRing = 16;
constexpr int kInnerRing = 8;

struct RingDirections {
    Vec2 outer[kOuterRing];
    Vec2 inner[kInnerRing];
};

const RingDirections& ring_directions() {
    static const RingDirections dirs = [] {
        RingDirections d;
        for (int k = 0; k < kOuterRing; ++k) {
            const double a = 2.0 * std::numbers::pi * k / kOuterRing;
            d.outer[k] = {std::cos(a), std::sin(a)};
        }
        for (int k = 0; k < kInnerRing; ++k) {
            const double a = 2.0 * std::numbers::pi * k / kInnerRing;
            d.inner[k] = {std::cos(a), std::sin(a)};
        }
        return d;
    }();
    return dirs;
}

}  // namespace

std::vector<Candidate> evaluate_candidates(const Agent& agent, const World& world, const Environment& env) {
    const EngineConfig& cfg = env.config;
    const double s = cfg.stride(agent.desired_speed);
    const Vec2 p = agent.position;

    thread_local std::vector<int> near;
    world.neighbors(p, s + std::max(cfg.agent_repulsion_cutoff, 2 * cfg.radius_max) + 1e-9, agent.id, near);

    const RingDirections& dirs = ring_directions();
    std::vector<Candidate> out(1 + kOuterRing + kInnerRing);
    out[0].position = p;
    for (int k = 0; k < kOuterRing; ++k) out[1 + k].position = p + dirs.outer[k] * s;
    for (int k = 0; k < kInnerRing; ++k) out[1 + kOuterRing + k].position = p + dirs.inner[k] * (s / 2);

    for (int k = 0; k < static_cast<int>(out.size()); ++k) {
        Candidate& c = out[k];
        c.index = k;
        const Vec2 q = c.position;
        const double wall = env.geometry.clearance(q);
        bool ok = true;
        if (k > 0) ok = env.geometry.inside_site(q) && wall >= agent.radius && !env.geometry.crosses(p, q);

        double repulsion = 0.0;
        for (int j : near) {
            const Agent& other = world.agent(j);
            const double dist = distance(q, other.position);
            if (k > 0 && dist < agent.radius + other.radius) {
                ok = false;
                break;
            }
            if (dist < cfg.agent_repulsion_cutoff)
                repulsion -= cfg.agent_repulsion * std::exp(-dist / cfg.agent_repulsion_range);
        }
        if (!ok) continue;

        c.nav = env.nav.value(q);
        if (k > 0 && !std::isfinite(c.nav)) continue;
        c.feasible = true;
        double u = -c.nav + repulsion;
        if (wall < cfg.wall_repulsion_cutoff) u -= cfg.wall_repulsion * std::exp(-wall / cfg.wall_repulsion_range);
        c.utility = u;
    }
    return out;
}

Vec2 step_agent(const Agent& agent, const World& world, const Environment& env) {
    const auto cands = evaluate_candidates(agent, world, env);
    // A step into a destination zone ends the walk and beats any step that
    // does not; otherwise wall repulsion at the exit can pin an agent just
    // short of the zone, where the nav field is flat.
    const Candidate* best = &cands[0];
    bool best_arrives = false;
    for (std::size_t k = 1; k < cands.size(); ++k) {
        const Candidate& c = cands[k];
        if (!c.feasible) continue;
        const bool arrives = env.at_destination(c.position);
        if (arrives != best_arrives) {
            if (arrives) best = &c, best_arrives = true;
            continue;
        }
        if (c.utility > best->utility || (c.utility == best->utility && c.nav < best->nav)) best = &c;
    }
    return best->position;
}

// --- Placement --------------------------------------------------------------

std::vector<Agent> sample_agents(const Scenario& scenario, const Environment& env) {
    const EngineConfig& cfg = env.config;
    std::vector<Agent> agents;
    agents.reserve(static_cast<std::size_t>(scenario.total_agents()));
    for (const Origin& origin : scenario.origins) {
        const Polygon& room = scenario.floorplan.rooms.at(origin.room).polygon;
        const Box box = bounding_box(room);
        for (int k = 0; k < origin.agent_count; ++k) {
            Agent a;
            a.id = static_cast<int>(agents.size());
            Rng rng = make_rng(scenario.seed, static_cast<std::uint64_t>(a.id));
            a.radius = std::uniform_real_distribution<double>(cfg.radius_min, cfg.radius_max)(rng);
            if (scenario.speed_sigma > 0.0) {
                std::normal_distribution<double> speed(scenario.mean_speed, scenario.speed_sigma);
                a.desired_speed = speed(rng);
                for (int tries = 0; a.desired_speed < cfg.min_speed && tries < 1000; ++tries) a.desired_speed = speed(rng);
            } else {
                a.desired_speed = scenario.mean_speed;
            }
            a.desired_speed = std::max(a.desired_speed, cfg.min_speed);

            std::uniform_real_distribution<double> ux(box.x0 + a.radius, box.x1 - a.radius);
            std::uniform_real_distribution<double> uy(box.y0 + a.radius, box.y1 - a.radius);
            bool placed = false;
            for (int attempt = 0; attempt < cfg.max_placement_attempts && !placed; ++attempt) {
                const Vec2 q{ux(rng), uy(rng)};
                if (!point_in_polygon(q, room) || env.geometry.clearance(q) < a.radius) continue;
                bool overlap = false;
                for (const Agent& b : agents)
                    if (distance(q, b.position) < a.radius + b.radius) {
                        overlap = true;
                        break;
                    }
                if (overlap || !std::isfinite(env.nav.value(q))) continue;
                a.position = q;
                placed = true;
            }
            if (!placed)
                throw PlacementFailure(fmt::format("could not place agent {} in room {} after {} attempts", a.id,
                                                   origin.room, cfg.max_placement_attempts));
            agents.push_back(a);
        }
    }
    return agents;
}

// --- Event loop -------------------------------------------------------------

SimResult simulate(const Environment& env, std::vector<Agent> agents) {
    const EngineConfig& cfg = env.config;
    for (std::size_t k = 0; k < agents.size(); ++k)
        if (agents[k].id != static_cast<int>(k)) throw InvalidScenario("agent ids must be 0..n-1 in order");
    if (agents.empty()) throw InvalidScenario("no agents to simulate");

    World world(agents, env.floorplan.site_length, env.floorplan.site_width);
    SimResult result;
    result.arrivals.assign(agents.size(), std::numeric_limits<double>::quiet_NaN());
    auto& rows = result.trajectory.rows;

    using Event = std::pair<double, int>;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
    std::vector<double> interval(agents.size());
    for (const Agent& a : agents) {
        rows.push_back({0.0, a.id, a.position.x, a.position.y});
        interval[a.id] = cfg.stride(a.desired_speed) / a.desired_speed;
        if (env.at_destination(a.position)) {
            result.arrivals[a.id] = 0.0;
            world.retire(a.id);
        } else {
            queue.push({interval[a.id], a.id});
        }
    }

    while (!queue.empty()) {
        const auto [t, id] = queue.top();
        queue.pop();
        if (t > cfg.t_max)
            throw Timeout(fmt::format("simulated time exceeded {} s with {} agents still walking", cfg.t_max,
                                      queue.size() + 1));
        const Vec2 next = step_agent(world.agent(id), world, env);
        world.move(id, next);
        rows.push_back({t, id, next.x, next.y});
        if (env.at_destination(next)) {
            result.arrivals[id] = t;
            world.retire(id);
        } else {
            queue.push({t + interval[id], id});
        }
    }
    result.tet = *std::max_element(result.arrivals.begin(), result.arrivals.end());
    return result;
}

SimResult run(const Scenario& scenario, const EngineConfig& config) {
    validate_scenario(scenario);
    const Environment env(scenario.floorplan, scenario.destinations, config);
    SimResult result = simulate(env, sample_agents(scenario, env));
    result.seed = scenario.seed;
    result.scenario_hash = sha256_hex(canonical_text(scenario));
    return result;
}

}  // namespace evac
