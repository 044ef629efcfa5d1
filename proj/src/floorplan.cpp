#include "evac/floorplan.hpp"

#include <fmt/format.h>

#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "evac/errors.hpp"
#include "evac/random.hpp"

namespace evac {

using namespace layout;

std::string archetype_name(Archetype a) {
    switch (a) {
        case Archetype::A: return "A";
        case Archetype::B: return "B";
        case Archetype::C: return "C";
    }
    return "?";
}

Archetype parse_archetype(const std::string& s) {
    if (s == "A" || s == "a") return Archetype::A;
    if (s == "B" || s == "b") return Archetype::B;
    if (s == "C" || s == "c") return Archetype::C;
    throw InfeasibleParams("unknown archetype '" + s + "' (expected A, B or C)");
}

namespace {

enum class DoorSide { Top, Bottom, Left, Right };

struct Band {
    Box box;
    DoorSide side;

    bool splits_along_x() const { return side == DoorSide::Top || side == DoorSide::Bottom; }
    double length() const { return splits_along_x() ? box.width() : box.height(); }
};

struct ExitSpec {
    Box zone;
    // +1 / -1 along `along_x ? x : y`, pointing from the exit into the hallway.
    bool along_x;
    int inward;
};

struct Skeleton {
    std::vector<Band> bands;
    std::vector<Box> voids;
    std::vector<ExitSpec> exits;
    Box main_arm;  // hallway that carries the obstacle columns (runs along x)
};

Skeleton skeleton_for(const GeometryParams& p) {
    const double L = p.length;
    const double W = p.width;
    const double c = p.corridor_width;
    const double D = (W - c) / 2.0;
    const double E = kEndHall;
    const double X = kExitDepth;
    Skeleton s;
    switch (p.archetype) {
        case Archetype::A: {
            if (L - 2 * E < kMinRoomWidth)
                throw InfeasibleParams(fmt::format(
                    "straight corridor: length {} leaves no room band (needs >= {})", L,
                    2 * E + kMinRoomWidth));
            s.bands = {{{E, 0, L - E, D}, DoorSide::Bottom}, {{E, D + c, L - E, W}, DoorSide::Top}};
            s.voids = {{0, 0, E, D}, {0, D + c, E, W}, {L - E, 0, L, D}, {L - E, D + c, L, W}};
            s.exits = {{{0, D, X, D + c}, true, +1}, {{L - X, D, L, D + c}, true, -1}};
            s.main_arm = {0, D, L, D + c};
            break;
        }
        case Archetype::B: {
            const double stem0 = (L - c) / 2.0;
            const double stem1 = (L + c) / 2.0;
            if (stem0 - E < kMinRoomWidth)
                throw InfeasibleParams(fmt::format(
                    "T-corridor: length {} leaves no room beside the stem (needs >= {})", L,
                    2 * (E + kMinRoomWidth) + c));
            s.bands = {{{E, 0, L - E, D}, DoorSide::Bottom},
                       {{E, D + c, stem0, W}, DoorSide::Top},
                       {{stem1, D + c, L - E, W}, DoorSide::Top}};
            s.voids = {{0, 0, E, D}, {L - E, 0, L, D}, {0, D + c, E, W}, {L - E, D + c, L, W}};
            s.exits = {{{0, D, X, D + c}, true, +1},
                       {{L - X, D, L, D + c}, true, -1},
                       {{stem0, W - X, stem1, W}, false, -1}};
            s.main_arm = {0, D, L, D + c};
            break;
        }
        case Archetype::C: {
            const double Dr = D;
            const double v0 = L - Dr - c;
            const double v1 = L - Dr;
            if (v0 - E < kMinRoomWidth)
                throw InfeasibleParams(fmt::format(
                    "L-corridor: length {} leaves no room inside the bend (needs >= {})", L,
                    E + kMinRoomWidth + c + Dr));
            s.bands = {{{E, 0, v1, D}, DoorSide::Bottom},
                       {{E, D + c, v0, W}, DoorSide::Top},
                       {{v1, D, L, W - E}, DoorSide::Left}};
            s.voids = {{0, 0, E, D}, {0, D + c, E, W}, {v1, 0, L, D}, {v1, W - E, L, W}};
            s.exits = {{{0, D, X, D + c}, true, +1}, {{v0, W - X, v1, W}, false, -1}};
            s.main_arm = {0, D, v1, D + c};
            break;
        }
    }
    return s;
}

std::vector<int> distribute_rooms(const std::vector<Band>& bands, int n) {
    double total = 0.0;
    for (const Band& b : bands) total += b.length();
    std::vector<int> count(bands.size());
    std::vector<double> rem(bands.size());
    int assigned = 0;
    for (std::size_t i = 0; i < bands.size(); ++i) {
        const double q = n * bands[i].length() / total;
        count[i] = static_cast<int>(std::floor(q + 1e-9));
        rem[i] = q - count[i];
        assigned += count[i];
    }
    std::vector<std::size_t> order(bands.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rem[a] > rem[b] + 1e-12; });
    for (std::size_t k = 0; assigned < n; k = (k + 1) % order.size(), ++assigned) ++count[order[k]];
    return count;
}

Room make_room(const Box& box, DoorSide side) {
    Room r;
    r.polygon = box.polygon();
    const double half = kDoorWidth / 2.0;
    const Vec2 c = box.center();
    switch (side) {
        case DoorSide::Top: r.door = {{c.x - half, box.y0}, {c.x + half, box.y0}}; break;
        case DoorSide::Bottom: r.door = {{c.x - half, box.y1}, {c.x + half, box.y1}}; break;
        case DoorSide::Left: r.door = {{box.x0, c.y - half}, {box.x0, c.y + half}}; break;
        case DoorSide::Right: r.door = {{box.x1, c.y - half}, {box.x1, c.y + half}}; break;
    }
    return r;
}

// Axis-aligned wall assembly: edges are grouped by their supporting line,
// merged into maximal intervals, and door openings are cut out.
class WallBuilder {
public:
    void add_box(const Box& b) {
        add({{b.x0, b.y0}, {b.x1, b.y0}});
        add({{b.x0, b.y1}, {b.x1, b.y1}});
        add({{b.x0, b.y0}, {b.x0, b.y1}});
        add({{b.x1, b.y0}, {b.x1, b.y1}});
    }

    void add(const Segment& s) { line(s).push_back(interval(s)); }
    void cut(const Segment& s) { cuts_[key(s)].push_back(interval(s)); }

    std::vector<Segment> build() const {
        std::vector<Segment> out;
        for (const auto& [k, ivs] : lines_) {
            auto merged = merge(ivs);
            if (auto it = cuts_.find(k); it != cuts_.end()) merged = subtract(merged, merge(it->second));
            for (const auto& [lo, hi] : merged) {
                if (hi - lo < 1e-9) continue;
                if (k.first == 0)
                    out.push_back({{lo, k.second}, {hi, k.second}});
                else
                    out.push_back({{k.second, lo}, {k.second, hi}});
            }
        }
        return out;
    }

private:
    using Key = std::pair<int, double>;  // (0 = horizontal at y, 1 = vertical at x)
    using Interval = std::pair<double, double>;

    static Key key(const Segment& s) {
        if (s.a.y == s.b.y) return {0, s.a.y};
        return {1, s.a.x};
    }
    static Interval interval(const Segment& s) {
        if (s.a.y == s.b.y) return {std::min(s.a.x, s.b.x), std::max(s.a.x, s.b.x)};
        return {std::min(s.a.y, s.b.y), std::max(s.a.y, s.b.y)};
    }
    std::vector<Interval>& line(const Segment& s) { return lines_[key(s)]; }

    static std::vector<Interval> merge(std::vector<Interval> v) {
        std::sort(v.begin(), v.end());
        std::vector<Interval> out;
        for (const auto& iv : v) {
            if (!out.empty() && iv.first <= out.back().second + 1e-9)
                out.back().second = std::max(out.back().second, iv.second);
            else
                out.push_back(iv);
        }
        return out;
    }
    static std::vector<Interval> subtract(const std::vector<Interval>& a, const std::vector<Interval>& cuts) {
        std::vector<Interval> out;
        for (Interval iv : a) {
            for (const auto& c : cuts) {
                if (c.second <= iv.first || c.first >= iv.second) continue;
                if (c.first > iv.first) out.push_back({iv.first, c.first});
                iv.first = c.second;
                if (iv.first >= iv.second) break;
            }
            if (iv.first < iv.second) out.push_back(iv);
        }
        return out;
    }

    std::map<Key, std::vector<Interval>> lines_;
    std::map<Key, std::vector<Interval>> cuts_;
};

Box square(Vec2 c, double side) { return {c.x - side / 2, c.y - side / 2, c.x + side / 2, c.y + side / 2}; }

void check_params(const GeometryParams& p) {
    if (!(p.length >= kMinSite && p.length <= kMaxSite))
        throw InfeasibleParams(fmt::format("length {} outside [{}, {}] m", p.length, kMinSite, kMaxSite));
    if (!(p.width >= kMinSite && p.width <= kMaxSite))
        throw InfeasibleParams(fmt::format("width {} outside [{}, {}] m", p.width, kMinSite, kMaxSite));
    if (!(p.corridor_width > 0.0 && p.corridor_width < p.width - 2 * kMinRoomDepth))
        throw InfeasibleParams(fmt::format(
            "corridor_width {} must satisfy 0 < corridor_width < width - 2*min_room_depth = {}",
            p.corridor_width, p.width - 2 * kMinRoomDepth));
    if (p.num_rooms < 1) throw InfeasibleParams("num_rooms must be >= 1");
    if (p.has_bottleneck && p.corridor_width <= kBottleneckGap)
        throw InfeasibleParams(fmt::format("bottleneck gap {} m requires corridor_width > {} m",
                                           kBottleneckGap, kBottleneckGap));
    if (p.has_obstacles && p.corridor_width < kColumnSize + 2 * kMinPassage)
        throw InfeasibleParams(fmt::format("obstacle passage: corridor_width must be >= {} m",
                                           kColumnSize + 2 * kMinPassage));
}

}  // namespace

Floorplan build_floorplan(const GeometryParams& p) {
    check_params(p);
    const Skeleton sk = skeleton_for(p);

    Floorplan fp;
    fp.site_length = p.length;
    fp.site_width = p.width;

    WallBuilder walls;
    walls.add_box({0, 0, p.length, p.width});
    for (const Box& v : sk.voids) walls.add_box(v);

    const std::vector<int> counts = distribute_rooms(sk.bands, p.num_rooms);
    for (std::size_t b = 0; b < sk.bands.size(); ++b) {
        const Band& band = sk.bands[b];
        if (counts[b] == 0) {
            walls.add_box(band.box);
            continue;
        }
        const double room_w = band.length() / counts[b];
        if (room_w < kMinRoomWidth - 1e-9)
            throw InfeasibleParams(fmt::format("room width {:.3f} m below minimum {} m ({} rooms in a {:.3f} m band)",
                                               room_w, kMinRoomWidth, counts[b], band.length()));
        for (int k = 0; k < counts[b]; ++k) {
            Box rb = band.box;
            if (band.splits_along_x()) {
                rb.x0 = band.box.x0 + k * room_w;
                rb.x1 = (k + 1 == counts[b]) ? band.box.x1 : band.box.x0 + (k + 1) * room_w;
            } else {
                rb.y0 = band.box.y0 + k * room_w;
                rb.y1 = (k + 1 == counts[b]) ? band.box.y1 : band.box.y0 + (k + 1) * room_w;
            }
            Room room = make_room(rb, band.side);
            walls.add_box(rb);
            walls.cut(room.door);
            fp.rooms.push_back(std::move(room));
        }
    }
    fp.walls = walls.build();

    for (const ExitSpec& e : sk.exits) {
        fp.exit_zones.push_back(e.zone.polygon());
        if (!p.has_bottleneck) continue;
        const Box& z = e.zone;
        if (e.along_x) {
            const double x0 = e.inward > 0 ? z.x1 : z.x0 - kBottleneckDepth;
            const double x1 = x0 + kBottleneckDepth;
            const double mid = (z.y0 + z.y1) / 2;
            fp.bottleneck.push_back(Box{x0, z.y0, x1, mid - kBottleneckGap / 2}.polygon());
            fp.bottleneck.push_back(Box{x0, mid + kBottleneckGap / 2, x1, z.y1}.polygon());
        } else {
            const double y0 = e.inward > 0 ? z.y1 : z.y0 - kBottleneckDepth;
            const double y1 = y0 + kBottleneckDepth;
            const double mid = (z.x0 + z.x1) / 2;
            fp.bottleneck.push_back(Box{z.x0, y0, mid - kBottleneckGap / 2, y1}.polygon());
            fp.bottleneck.push_back(Box{mid + kBottleneckGap / 2, y0, z.x1, y1}.polygon());
        }
    }

    if (p.has_obstacles) {
        const Box& arm = sk.main_arm;
        const double yc = (arm.y0 + arm.y1) / 2;
        for (int k = 1; k <= 2; ++k) {
            const double xc = arm.x0 + arm.width() * k / 3.0;
            fp.obstacles.push_back(square({xc, yc}, kColumnSize).polygon());
        }
    }
    return fp;
}

std::vector<GeometryParams> enumerate_versions(Archetype archetype) {
    struct Size {
        double length, width;
        int rooms;
    };
    Size short_size{}, long_size{};
    switch (archetype) {
        case Archetype::A: short_size = {20, 10, 4}; long_size = {40, 14, 8}; break;
        case Archetype::B: short_size = {24, 14, 6}; long_size = {40, 20, 10}; break;
        case Archetype::C: short_size = {24, 16, 6}; long_size = {36, 22, 10}; break;
    }
    const double corridors[] = {3.0, 4.0};
    std::vector<GeometryParams> out;
    for (const Size& sz : {short_size, long_size})
        for (double c : corridors)
            for (int flag = 0; flag < 3; ++flag)
                out.push_back({archetype, sz.length, sz.width, c, sz.rooms, flag == 1, flag == 2});
    return out;
}

std::vector<GeometryParams> enumerate_all_versions() {
    std::vector<GeometryParams> out;
    for (Archetype a : {Archetype::A, Archetype::B, Archetype::C}) {
        auto v = enumerate_versions(a);
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

int Scenario::total_agents() const {
    int n = 0;
    for (const Origin& o : origins) n += o.agent_count;
    return n;
}

std::string canonical_text(const Scenario& s) {
    std::string out;
    auto num = [&](double v) { out += fmt::format(" {:.17g}", v); };
    auto poly = [&](const Polygon& p) {
        out += fmt::format(" [{}]", p.size());
        for (Vec2 v : p) {
            num(v.x);
            num(v.y);
        }
    };
    const Floorplan& fp = s.floorplan;
    out += "site";
    num(fp.site_length);
    num(fp.site_width);
    out += "\nwalls";
    for (const Segment& w : fp.walls) {
        num(w.a.x);
        num(w.a.y);
        num(w.b.x);
        num(w.b.y);
    }
    out += "\nobstacles";
    for (const Polygon& p : fp.obstacles) poly(p);
    out += "\nrooms";
    for (const Room& r : fp.rooms) {
        poly(r.polygon);
        num(r.door.a.x);
        num(r.door.a.y);
        num(r.door.b.x);
        num(r.door.b.y);
    }
    out += "\nexits";
    for (const Polygon& p : fp.exit_zones) poly(p);
    out += "\nbottleneck";
    for (const Polygon& p : fp.bottleneck) poly(p);
    out += "\norigins";
    for (const Origin& o : s.origins) out += fmt::format(" {}:{}", o.room, o.agent_count);
    out += "\ndestinations";
    for (int d : s.destinations) out += fmt::format(" {}", d);
    out += "\nspeed";
    num(s.mean_speed);
    num(s.speed_sigma);
    out += fmt::format("\nseed {}\n", s.seed);
    return out;
}

void validate_scenario(const Scenario& s, bool paper_mode) {
    if (s.origins.empty()) throw InvalidScenario("scenario has no origins");
    if (s.destinations.empty()) throw InvalidScenario("scenario has no destinations");
    if (!(s.mean_speed > 0.0)) throw InvalidScenario("mean_speed must be > 0");
    if (!(s.speed_sigma >= 0.0)) throw InvalidScenario("speed_sigma must be >= 0");
    const auto& fp = s.floorplan;
    for (int d : s.destinations)
        if (d < 0 || d >= static_cast<int>(fp.exit_zones.size()))
            throw InvalidScenario(fmt::format("destination index {} out of range", d));
    for (const Origin& o : s.origins) {
        if (o.room < 0 || o.room >= static_cast<int>(fp.rooms.size()))
            throw InvalidScenario(fmt::format("origin room index {} out of range", o.room));
        if (o.agent_count < 1) throw InvalidScenario("agent_count must be >= 1");
        if (paper_mode && o.agent_count != 10 && o.agent_count != 20 && o.agent_count != 30)
            throw InvalidScenario(fmt::format("agent_count {} not in {{10, 20, 30}}", o.agent_count));
        const double area = polygon_area(fp.rooms[o.room].polygon);
        if (area < o.agent_count * 0.25)
            throw InvalidScenario(fmt::format("room {} area {:.2f} m^2 too small for {} agents", o.room,
                                              area, o.agent_count));
    }
}

namespace {

struct LayoutChoice {
    std::vector<int> rooms;
    std::vector<int> exits;
};

std::vector<LayoutChoice> layouts(const Floorplan& fp) {
    const int R = static_cast<int>(fp.rooms.size());
    const int X = static_cast<int>(fp.exit_zones.size());

    std::vector<int> all(R);
    std::iota(all.begin(), all.end(), 0);
    std::vector<int> half(all.begin(), all.begin() + (R + 1) / 2);

    int farthest = 0;
    double best = -1.0;
    for (int r = 0; r < R; ++r) {
        const Vec2 c = polygon_centroid(fp.rooms[r].polygon);
        double nearest = std::numeric_limits<double>::infinity();
        for (const Polygon& z : fp.exit_zones) nearest = std::min(nearest, distance(c, polygon_centroid(z)));
        if (nearest > best + 1e-12) {
            best = nearest;
            farthest = r;
        }
    }

    std::vector<std::vector<int>> exit_sets;
    for (int e = 0; e < X; ++e) exit_sets.push_back({e});
    std::vector<int> all_exits(X);
    std::iota(all_exits.begin(), all_exits.end(), 0);
    exit_sets.push_back(all_exits);

    std::vector<LayoutChoice> out;
    for (const auto& rooms : {all, half, std::vector<int>{farthest}})
        for (const auto& exits : exit_sets) out.push_back({rooms, exits});
    return out;
}

}  // namespace

int layout_count(const Floorplan& fp) { return static_cast<int>(layouts(fp).size()); }

std::vector<Scenario> enumerate_scenarios(const Floorplan& fp, const SweepConfig& sweep) {
    auto choices = layouts(fp);
    if (sweep.layouts_per_geometry && *sweep.layouts_per_geometry < static_cast<int>(choices.size()))
        choices.resize(std::max(0, *sweep.layouts_per_geometry));

    std::vector<Scenario> out;
    std::uint64_t index = 0;
    for (const LayoutChoice& lc : choices) {
        for (int agents : sweep.agents) {
            for (double speed : sweep.speeds) {
                Scenario s;
                s.floorplan = fp;
                for (int r : lc.rooms) s.origins.push_back({r, agents});
                s.destinations = lc.exits;
                s.mean_speed = speed;
                s.speed_sigma = sweep.speed_sigma;
                s.seed = derive_seed(sweep.base_seed, index++);
                out.push_back(std::move(s));
            }
        }
    }
    return out;
}

std::pair<int, int> OccupancyGrid::cell_of(Vec2 p) const {
    const int i = std::clamp(static_cast<int>(std::floor(p.x / resolution)), 0, nx - 1);
    const int j = std::clamp(static_cast<int>(std::floor(p.y / resolution)), 0, ny - 1);
    return {i, j};
}

namespace {

struct CellRange {
    int i0, j0, i1, j1;
};

CellRange cells_near(const OccupancyGrid& g, const Box& b, double margin) {
    return {std::max(0, static_cast<int>(std::floor((b.x0 - margin) / g.resolution))),
            std::max(0, static_cast<int>(std::floor((b.y0 - margin) / g.resolution))),
            std::min(g.nx - 1, static_cast<int>(std::floor((b.x1 + margin) / g.resolution))),
            std::min(g.ny - 1, static_cast<int>(std::floor((b.y1 + margin) / g.resolution)))};
}

}  // namespace

OccupancyGrid make_occupancy_grid(const Floorplan& fp, double resolution, double inflation) {
    OccupancyGrid g;
    g.resolution = resolution;
    g.nx = static_cast<int>(std::ceil(fp.site_length / resolution - 1e-9));
    g.ny = static_cast<int>(std::ceil(fp.site_width / resolution - 1e-9));
    g.blocked.assign(static_cast<std::size_t>(g.nx) * g.ny, 0);

    for (const Segment& s : fp.walls) {
        const CellRange r = cells_near(g, bounding_box(std::vector<Vec2>{s.a, s.b}), inflation);
        for (int j = r.j0; j <= r.j1; ++j)
            for (int i = r.i0; i <= r.i1; ++i)
                if (point_segment_distance(g.center(i, j), s) < inflation) g.blocked[g.index(i, j)] = 1;
    }
    auto block_polygon = [&](const Polygon& poly) {
        const CellRange r = cells_near(g, bounding_box(poly), inflation);
        for (int j = r.j0; j <= r.j1; ++j)
            for (int i = r.i0; i <= r.i1; ++i) {
                const Vec2 c = g.center(i, j);
                if (point_in_polygon(c, poly) || point_polygon_boundary_distance(c, poly) < inflation)
                    g.blocked[g.index(i, j)] = 1;
            }
    };
    for (const Polygon& p : fp.obstacles) block_polygon(p);
    for (const Polygon& p : fp.bottleneck) block_polygon(p);
    return g;
}

std::vector<std::size_t> cells_in_polygon(const OccupancyGrid& g, std::span<const Vec2> poly) {
    std::vector<std::size_t> out;
    if (poly.size() < 3) return out;
    const CellRange r = cells_near(g, bounding_box(poly), 0.0);
    for (int j = r.j0; j <= r.j1; ++j)
        for (int i = r.i0; i <= r.i1; ++i)
            if (point_in_polygon(g.center(i, j), poly)) out.push_back(g.index(i, j));
    return out;
}

bool ConnectivityReport::all_reachable() const {
    return std::all_of(pairs.begin(), pairs.end(), [](const Pair& p) { return p.reachable; });
}

namespace {

std::vector<int> label_components(const OccupancyGrid& g) {
    std::vector<int> label(g.blocked.size(), -1);
    int next = 0;
    std::deque<std::pair<int, int>> queue;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!g.free(i, j) || label[g.index(i, j)] >= 0) continue;
            label[g.index(i, j)] = next;
            queue.push_back({i, j});
            while (!queue.empty()) {
                auto [ci, cj] = queue.front();
                queue.pop_front();
                for (int dj = -1; dj <= 1; ++dj)
                    for (int di = -1; di <= 1; ++di) {
                        const int ni = ci + di, nj = cj + dj;
                        if ((di || dj) && g.free(ni, nj) && label[g.index(ni, nj)] < 0) {
                            label[g.index(ni, nj)] = next;
                            queue.push_back({ni, nj});
                        }
                    }
            }
            ++next;
        }
    }
    return label;
}

// Nearest free cell to p within a few cells, scanning rings outward.
std::optional<std::size_t> free_cell_near(const OccupancyGrid& g, Vec2 p, int max_ring = 4) {
    auto [ci, cj] = g.cell_of(p);
    for (int ring = 0; ring <= max_ring; ++ring) {
        std::optional<std::size_t> best;
        double best_d = std::numeric_limits<double>::infinity();
        for (int dj = -ring; dj <= ring; ++dj)
            for (int di = -ring; di <= ring; ++di) {
                if (std::max(std::abs(di), std::abs(dj)) != ring || !g.free(ci + di, cj + dj)) continue;
                const double d = distance(g.center(ci + di, cj + dj), p);
                if (d < best_d) {
                    best_d = d;
                    best = g.index(ci + di, cj + dj);
                }
            }
        if (best) return best;
    }
    return std::nullopt;
}

}  // namespace

ConnectivityReport validate_connectivity(const Floorplan& fp) {
    const OccupancyGrid g = make_occupancy_grid(fp, 0.1, 0.23);
    const std::vector<int> label = label_components(g);

    std::vector<std::set<int>> exit_labels;
    for (const Polygon& z : fp.exit_zones) {
        std::set<int> ls;
        for (std::size_t c : cells_in_polygon(g, z))
            if (label[c] >= 0) ls.insert(label[c]);
        exit_labels.push_back(std::move(ls));
    }

    ConnectivityReport report;
    for (int r = 0; r < static_cast<int>(fp.rooms.size()); ++r) {
        const Segment& d = fp.rooms[r].door;
        const auto cell = free_cell_near(g, (d.a + d.b) * 0.5);
        for (int e = 0; e < static_cast<int>(fp.exit_zones.size()); ++e) {
            const bool ok = cell && exit_labels[e].count(label[*cell]) > 0;
            report.pairs.push_back({r, e, ok});
        }
    }
    return report;
}

namespace {

void write_points(std::ostream& os, std::span<const Vec2> pts) {
    os << pts.size();
    for (const Vec2& p : pts) os << fmt::format(" {:.6f} {:.6f}", p.x, p.y);
}

void write_segment(std::ostream& os, const Segment& s) {
    os << fmt::format("{:.6f} {:.6f} {:.6f} {:.6f}", s.a.x, s.a.y, s.b.x, s.b.y);
}

void expect(std::istream& is, const std::string& word) {
    std::string tok;
    if (!(is >> tok) || tok != word) throw FormatError("floorplan: expected '" + word + "', got '" + tok + "'");
}

std::size_t read_count(std::istream& is, const std::string& section) {
    expect(is, section);
    long long n = -1;
    if (!(is >> n) || n < 0) throw FormatError("floorplan: bad count for " + section);
    return static_cast<std::size_t>(n);
}

Vec2 read_point(std::istream& is) {
    Vec2 p;
    if (!(is >> p.x >> p.y)) throw FormatError("floorplan: truncated coordinates");
    return p;
}

Polygon read_polygon(std::istream& is) {
    long long n = -1;
    if (!(is >> n) || n < 0 || n > 1'000'000) throw FormatError("floorplan: bad vertex count");
    Polygon poly(static_cast<std::size_t>(n));
    for (Vec2& p : poly) p = read_point(is);
    return poly;
}

}  // namespace

void write_floorplan(std::ostream& os, const Floorplan& fp) {
    os << "evac-floorplan 1\n";
    os << fmt::format("site {:.6f} {:.6f}\n", fp.site_length, fp.site_width);
    os << "walls " << fp.walls.size() << '\n';
    for (const Segment& s : fp.walls) {
        write_segment(os, s);
        os << '\n';
    }
    os << "obstacles " << fp.obstacles.size() << '\n';
    for (const Polygon& p : fp.obstacles) {
        write_points(os, p);
        os << '\n';
    }
    os << "rooms " << fp.rooms.size() << '\n';
    for (const Room& r : fp.rooms) {
        write_points(os, r.polygon);
        os << " door ";
        write_segment(os, r.door);
        os << '\n';
    }
    os << "exits " << fp.exit_zones.size() << '\n';
    for (const Polygon& p : fp.exit_zones) {
        write_points(os, p);
        os << '\n';
    }
    os << "bottleneck " << fp.bottleneck.size() << '\n';
    for (const Polygon& p : fp.bottleneck) {
        write_points(os, p);
        os << '\n';
    }
}

Floorplan read_floorplan(std::istream& is) {
    expect(is, "evac-floorplan");
    int version = 0;
    if (!(is >> version) || version != 1) throw FormatError("floorplan: unsupported version");
    Floorplan fp;
    expect(is, "site");
    if (!(is >> fp.site_length >> fp.site_width)) throw FormatError("floorplan: bad site line");
    fp.walls.resize(read_count(is, "walls"));
    for (Segment& s : fp.walls) {
        s.a = read_point(is);
        s.b = read_point(is);
    }
    fp.obstacles.resize(read_count(is, "obstacles"));
    for (Polygon& p : fp.obstacles) p = read_polygon(is);
    fp.rooms.resize(read_count(is, "rooms"));
    for (Room& r : fp.rooms) {
        r.polygon = read_polygon(is);
        expect(is, "door");
        r.door.a = read_point(is);
        r.door.b = read_point(is);
    }
    fp.exit_zones.resize(read_count(is, "exits"));
    for (Polygon& p : fp.exit_zones) p = read_polygon(is);
    fp.bottleneck.resize(read_count(is, "bottleneck"));
    for (Polygon& p : fp.bottleneck) p = read_polygon(is);
    return fp;
}

}  // namespace evac
