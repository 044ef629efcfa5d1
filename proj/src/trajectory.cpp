#include "evac/trajectory.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "evac/errors.hpp"

namespace evac {

int TrajectoryTable::agent_count() const {
    int n = 0;
    for (const auto& r : rows) n = std::max(n, r.agent_id + 1);
    return n;
}

double TrajectoryTable::end_time() const {
    double t = 0.0;
    for (const auto& r : rows) t = std::max(t, r.t);
    return t;
}

AgentTracks::AgentTracks(const TrajectoryTable& table) {
    tracks_.resize(static_cast<std::size_t>(table.agent_count()));
    for (const auto& r : table.rows) {
        if (r.agent_id < 0) throw FormatError("negative agent id in trajectory");
        tracks_[r.agent_id].push_back({r.t, {r.x, r.y}});
        end_time_ = std::max(end_time_, r.t);
    }
    for (std::size_t a = 0; a < tracks_.size(); ++a) {
        auto& tr = tracks_[a];
        if (tr.empty()) throw FormatError(fmt::format("agent {} has no trajectory rows", a));
        std::stable_sort(tr.begin(), tr.end(), [](const Point& p, const Point& q) { return p.t < q.t; });
    }
}

Vec2 AgentTracks::position(int agent, double t) const {
    const auto& tr = tracks_.at(agent);
    if (t <= tr.front().t) return tr.front().p;
    if (t >= tr.back().t) return tr.back().p;
    const auto hi = std::upper_bound(tr.begin(), tr.end(), t, [](double v, const Point& p) { return v < p.t; });
    const auto lo = hi - 1;
    const double span = hi->t - lo->t;
    if (span <= 0.0) return hi->p;
    const double w = (t - lo->t) / span;
    return lo->p + (hi->p - lo->p) * w;
}

std::vector<std::pair<int, Vec2>> interpolate(const AgentTracks& tracks, double t) {
    if (!(t >= 0.0 && t <= tracks.end_time()))
        throw OutOfRange(fmt::format("time {} outside [0, {}]", t, tracks.end_time()));
    std::vector<std::pair<int, Vec2>> out;
    for (int a = 0; a < tracks.agent_count(); ++a)
        if (tracks.arrival(a) >= t) out.push_back({a, tracks.position(a, t)});
    return out;
}

std::vector<std::pair<int, Vec2>> interpolate(const TrajectoryTable& table, double t) {
    return interpolate(AgentTracks(table), t);
}

void write_trajectory_csv(std::ostream& os, const TrajectoryTable& table) {
    os << "t,agent_id,x,y\n";
    for (const auto& r : table.rows) os << fmt::format("{:.4f},{},{:.4f},{:.4f}\n", r.t, r.agent_id, r.x, r.y);
}

TrajectoryTable read_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "t,agent_id,x,y") throw FormatError("trajectory: missing CSV header");
    TrajectoryTable table;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        TrajectoryRow r;
        if (!(fields >> r.t >> r.agent_id >> r.x >> r.y))
            throw FormatError(fmt::format("trajectory: malformed row at line {}", lineno));
        table.rows.push_back(r);
    }
    return table;
}

}  // namespace evac
