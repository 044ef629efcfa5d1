#include "evac/navfield.hpp"

#include <fmt/format.h>

#include <cmath>
#include <queue>

#include "evac/errors.hpp"

namespace evac {

NavField compute_nav_field(OccupancyGrid grid, std::span<const std::size_t> sources) {
    NavField nav;
    nav.grid = std::move(grid);
    const OccupancyGrid& g = nav.grid;
    nav.dist.assign(g.blocked.size(), kInfinity);

    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (std::size_t c : sources) {
        if (g.blocked[c] || nav.dist[c] == 0.0) continue;
        nav.dist[c] = 0.0;
        heap.push({0.0, c});
    }
    const double h = g.resolution;
    const double diag = h * std::sqrt(2.0);
    while (!heap.empty()) {
        const auto [d, c] = heap.top();
        heap.pop();
        if (d > nav.dist[c]) continue;
        const int i = static_cast<int>(c % g.nx);
        const int j = static_cast<int>(c / g.nx);
        for (int dj = -1; dj <= 1; ++dj) {
            for (int di = -1; di <= 1; ++di) {
                if ((di == 0 && dj == 0) || !g.free(i + di, j + dj)) continue;
                const std::size_t n = g.index(i + di, j + dj);
                const double nd = d + ((di != 0 && dj != 0) ? diag : h);
                if (nd < nav.dist[n]) {
                    nav.dist[n] = nd;
                    heap.push({nd, n});
                }
            }
        }
    }
    return nav;
}

NavField compute_nav_field(const Floorplan& fp, std::span<const int> destinations, double resolution,
                           double inflation) {
    if (destinations.empty()) throw NoDestination("no destination given");
    OccupancyGrid grid = make_occupancy_grid(fp, resolution, inflation);
    std::vector<std::size_t> sources;
    for (int d : destinations) {
        if (d < 0 || d >= static_cast<int>(fp.exit_zones.size()))
            throw NoDestination(fmt::format("destination index {} out of range", d));
        for (std::size_t c : cells_in_polygon(grid, fp.exit_zones[d]))
            if (!grid.blocked[c]) sources.push_back(c);
    }
    if (sources.empty()) throw NoDestination("destination zones contain no free cell");

    NavField nav = compute_nav_field(std::move(grid), sources);
    for (std::size_t r = 0; r < fp.rooms.size(); ++r) {
        const Segment& door = fp.rooms[r].door;
        if (!std::isfinite(nav.value((door.a + door.b) * 0.5)))
            throw DisconnectedSpace(fmt::format("room {} door cannot reach any destination", r));
    }
    return nav;
}

double NavField::value(Vec2 q) const {
    const double h = grid.resolution;
    const double fx = q.x / h - 0.5;
    const double fy = q.y / h - 0.5;
    const int i0 = static_cast<int>(std::floor(fx));
    const int j0 = static_cast<int>(std::floor(fy));
    const double tx = fx - i0;
    const double ty = fy - j0;

    double acc = 0.0, wsum = 0.0;
    const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
    const int di[4] = {0, 1, 0, 1};
    const int dj[4] = {0, 0, 1, 1};
    for (int k = 0; k < 4; ++k) {
        const double d = at(i0 + di[k], j0 + dj[k]);
        if (std::isfinite(d) && w[k] > 0.0) {
            acc += w[k] * d;
            wsum += w[k];
        }
    }
    if (wsum > 0.0) return acc / wsum;

    double best = kInfinity;
    const auto [ci, cj] = grid.cell_of(q);
    for (int j = cj - 2; j <= cj + 2; ++j)
        for (int i = ci - 2; i <= ci + 2; ++i) {
            const double d = at(i, j);
            if (std::isfinite(d)) best = std::min(best, d + distance(grid.center(i, j), q));
        }
    return best;
}

}  // namespace evac
