#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "evac/errors.hpp"
#include "evac/frames.hpp"

using namespace evac;

namespace {

// Straight walk along x at 1 m/s with rows every `step` seconds.
TrajectoryTable walk(Vec2 start, double duration, double step = 1.0, int id = 0) {
    TrajectoryTable t;
    for (double s = 0; s <= duration + 1e-12; s += step) t.rows.push_back({s, id, start.x + s, start.y});
    return t;
}

TrajectoryTable merge(TrajectoryTable a, const TrajectoryTable& b) {
    a.rows.insert(a.rows.end(), b.rows.begin(), b.rows.end());
    std::sort(a.rows.begin(), a.rows.end(), [](const auto& p, const auto& q) {
        return p.t < q.t || (p.t == q.t && p.agent_id < q.agent_id);
    });
    return a;
}

std::set<int> nonzero_cols(const std::vector<std::uint32_t>& counts, int row) {
    std::set<int> out;
    for (int c = 0; c < 160; ++c)
        if (counts[row * 160 + c] != 0) out.insert(c);
    return out;
}

// Independent recount: explicit per-agent linear interpolation, cell index
// from pixel arithmetic, distinct agents collected in sets.
std::vector<std::uint32_t> brute_counts(const TrajectoryTable& tr, double a, double b, bool closed,
                                        const CanvasPlacement& at) {
    std::map<int, std::vector<TrajectoryRow>> by_agent;
    for (const auto& r : tr.rows) by_agent[r.agent_id].push_back(r);
    std::vector<std::set<int>> seen(160 * 160);
    for (const auto& [id, rows] : by_agent) {
        const double arrival = rows.back().t;
        std::vector<double> ts;
        for (int k = 0; a + k * 0.1 < b; ++k) ts.push_back(a + k * 0.1);
        if (closed) ts.push_back(b);
        if (arrival >= a && (arrival < b || (closed && arrival == b))) ts.push_back(arrival);
        for (double t : ts) {
            if (t > arrival) continue;
            std::size_t k = 0;
            while (k + 1 < rows.size() && rows[k + 1].t < t) ++k;
            double x = rows[k].x, y = rows[k].y;
            if (k + 1 < rows.size() && t > rows[k].t) {
                const double w = (t - rows[k].t) / (rows[k + 1].t - rows[k].t);
                x += (rows[k + 1].x - rows[k].x) * w;
                y += (rows[k + 1].y - rows[k].y) * w;
            }
            const int cx = std::min(159, int(std::floor((at.offset_px + x * 10) / 4 + 1e-9)));
            const int cy = std::min(159, int(std::floor((at.offset_py + y * 10) / 4 + 1e-9)));
            seen[cy * 160 + cx].insert(id);
        }
    }
    std::vector<std::uint32_t> out(seen.size());
    for (std::size_t c = 0; c < seen.size(); ++c) out[c] = static_cast<std::uint32_t>(seen[c].size());
    return out;
}

}  // namespace

TEST_CASE("partition examples") {
    const auto p = partition_time(80);
    CHECK(p.dt == 10.0);
    CHECK(p.intervals[0].begin == 0.0);
    CHECK(p.intervals[0].end == 10.0);
    CHECK(p.intervals[7].begin == 70.0);
    CHECK(p.intervals[7].end == 80.0);
    CHECK(p.intervals[7].closed);
    CHECK_FALSE(p.intervals[6].closed);
    CHECK(p.frame_of(80) == 7);
    CHECK(p.frame_of(10) == 1);
    CHECK(p.frame_of(9.999) == 0);
    CHECK(partition_time(8).dt == 1.0);
    CHECK_THROWS_AS(partition_time(0), NonPositiveTET);
    CHECK_THROWS_AS(partition_time(-3), NonPositiveTET);
    CHECK_THROWS_AS(p.frame_of(80.5), OutOfRange);
}

TEST_CASE("partition tiles exactly for random tet") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(1e-3, 5000);
    for (int n = 0; n < 1000; ++n) {
        const double tet = u(rng);
        const auto p = partition_time(tet);
        CHECK(std::abs(8 * p.dt - tet) <= 1e-9 * tet);
        CHECK(p.intervals[0].begin == 0.0);
        CHECK(p.intervals[7].end == tet);
        for (int k = 1; k < 8; ++k) CHECK(p.intervals[k].begin == p.intervals[k - 1].end);
        // Each boundary time belongs to exactly one frame.
        for (int k = 0; k < 8; ++k) {
            int owners = 0;
            for (const auto& iv : p.intervals) owners += iv.contains(p.intervals[k].begin);
            CHECK(owners == 1);
        }
    }
}

TEST_CASE("classify boundaries") {
    CHECK(classify(0.0) == 0);
    CHECK(classify(1e-300) == 1);
    CHECK(classify(0.4) == 1);
    CHECK(classify(0.4000001) == 2);
    CHECK(classify(std::nextafter(0.4, 1.0)) == 2);
    CHECK(classify(0.8) == 2);
    CHECK(classify(std::nextafter(0.8, 1.0)) == 3);
    CHECK(classify(0.81) == 3);
    CHECK(classify(10) == 3);
    CHECK_THROWS_AS(classify(-0.1), NegativeRate);
    CHECK_THROWS_AS(classify(std::nan("")), NegativeRate);
}

TEST_CASE("stored rates keep their class") {
    for (std::uint32_t n = 0; n < 60; ++n)
        for (double dt : {0.5, 1.25, 2.5, 5.0, 10.0, 12.5, 0.1 * 3, 7.0 / 3}) {
            const float r = stored_rate(n, dt);
            CHECK(classify(r) == classify(n / dt));
            CHECK(std::abs(r - n / dt) <= 1e-6 * std::max(1.0, n / dt));
        }
    // 0.4 is not a float; its nearest float lies above it.
    CHECK(static_cast<double>(0.4f) > 0.4);
    CHECK(classify(stored_rate(4, 10.0)) == 1);
}

TEST_CASE("cell visit examples") {
    const CanvasPlacement at = place_on_canvas(64, 64);
    SUBCASE("stationary agent") {
        TrajectoryTable t;
        t.rows = {{0, 0, 5.1, 5.1}, {4, 0, 5.1, 5.1}, {8, 0, 5.1, 5.1}};
        const auto c = count_cell_visits(AgentTracks(t), {0, 1, false}, at);
        CHECK(std::accumulate(c.begin(), c.end(), 0u) == 1);
        CHECK(c[12 * 160 + 12] == 1);
    }
    SUBCASE("two agents crossing one cell") {
        const auto t = merge(walk({10.1, 3.1}, 8, 1.0, 0), walk({10.1, 3.1}, 8, 0.5, 1));
        const auto c = count_cell_visits(AgentTracks(t), {0, 1, false}, at);
        CHECK(c[7 * 160 + 25] == 2);
    }
    SUBCASE("four meter walk") {
        const auto t = walk({10.0, 3.1}, 8);
        const auto c = count_cell_visits(AgentTracks(t), {0, 4, false}, at);
        std::set<int> expect;
        for (int k = 25; k < 35; ++k) expect.insert(k);
        CHECK(nonzero_cols(c, 7) == expect);
        CHECK(std::accumulate(c.begin(), c.end(), 0u) == 10);
    }
}

TEST_CASE("hand traced eight second walk") {
    const CanvasPlacement at = place_on_canvas(64, 64);
    const auto stack = build_frames(walk({0.2, 0.2}, 8), 8.0, at);
    const std::vector<std::set<int>> expect = {{0, 1, 2},    {3, 4, 5},    {5, 6, 7},    {8, 9, 10},
                                               {10, 11, 12}, {13, 14, 15}, {15, 16, 17}, {18, 19, 20}};
    CHECK(stack.partition.dt == 1.0);
    for (int f = 0; f < 8; ++f) {
        const std::vector<std::uint32_t> plane(stack.counts.begin() + f * 25600, stack.counts.begin() + (f + 1) * 25600);
        CHECK(nonzero_cols(plane, 0) == expect[f]);
        CHECK(std::accumulate(plane.begin(), plane.end(), 0u) == expect[f].size());
        for (int col : expect[f]) {
            CHECK(stack.tensor.classes[stack.tensor.index(f, 0, col)] == 3);
            CHECK(stack.tensor.rates[stack.tensor.index(f, 0, col)] == 1.0f);
        }
    }
}

TEST_CASE("frames of a simulated run") {
    Scenario s;
    s.floorplan = build_floorplan({Archetype::B, 24, 14, 3, 6, true, false});
    for (int r = 0; r < 6; ++r) s.origins.push_back({r, 10});
    s.destinations = {0, 1, 2};
    s.seed = 11;
    const SimResult res = run(s);
    const CanvasPlacement at = place_on_canvas(s.floorplan);
    const FrameStack stack = build_frames(res, at);
    const FrameTensor& t = stack.tensor;
    REQUIRE(t.frames == 8);
    REQUIRE(t.height == 160);
    REQUIRE(t.width == 160);

    const std::size_t plane = 25600;
    std::uint64_t frame0 = 0;
    for (std::size_t c = 0; c < plane; ++c) frame0 += stack.counts[c];
    CHECK(frame0 >= 60);

    int bad = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (stack.counts[k] > 60) ++bad;
        if ((t.classes[k] == 0) != (stack.counts[k] == 0)) ++bad;
        if (classify(t.rates[k]) != t.classes[k]) ++bad;
        if (std::abs(t.rates[k] - stack.counts[k] / stack.partition.dt) > 1e-6 * (1 + t.rates[k])) ++bad;
        if (classify((stack.counts[k] + 1) / stack.partition.dt) < t.classes[k]) ++bad;
    }
    CHECK(bad == 0);

    // Nothing outside the site footprint.
    const int c0 = at.offset_px / 4, c1 = (at.offset_px + 240) / 4;
    const int r0 = at.offset_py / 4, r1 = (at.offset_py + 140) / 4;
    for (int f = 0; f < 8; ++f)
        for (int r = 0; r < 160; ++r)
            for (int c = 0; c < 160; ++c)
                if (r < r0 || r > r1 || c < c0 || c > c1) bad += t.classes[t.index(f, r, c)] != 0;
    CHECK(bad == 0);

    const auto& p = stack.partition;
    for (int f = 0; f < 8; ++f) {
        const auto expect = brute_counts(res.trajectory, p.intervals[f].begin, p.intervals[f].end, f == 7, at);
        CHECK(std::equal(expect.begin(), expect.end(), stack.counts.begin() + f * plane));
    }
}

TEST_CASE("EVF1 round trip and corruption") {
    FrameTensor t(8, 160, 160);
    std::mt19937 rng(3);
    for (std::size_t k = 0; k < t.size(); ++k) {
        const std::uint32_t n = rng() % 5;
        t.rates[k] = stored_rate(n, 2.5);
        t.classes[k] = static_cast<std::uint8_t>(classify(n / 2.5));
    }
    std::stringstream ss;
    write_frames(ss, t);
    const std::string bytes = ss.str();
    CHECK(bytes.size() == 4 + 12 + t.size() * 5);
    CHECK(bytes.substr(0, 4) == "EVF1");
    CHECK(static_cast<unsigned char>(bytes[4]) == 8);
    CHECK(static_cast<unsigned char>(bytes[8]) == 160);
    CHECK(read_frames(ss) == t);

    std::string bad = bytes;
    bad[0] = 'X';
    std::istringstream b1(bad);
    CHECK_THROWS_AS(read_frames(b1), FormatError);
    std::istringstream b2(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_frames(b2), FormatError);
    bad = bytes;
    bad[16] = 7;
    std::istringstream b3(bad);
    CHECK_THROWS_AS(read_frames(b3), FormatError);
}

TEST_CASE("frame render colors") {
    FrameTensor t(8, 160, 160);
    t.classes[t.index(2, 0, 0)] = 1;
    t.classes[t.index(2, 0, 1)] = 2;
    t.classes[t.index(2, 5, 9)] = 3;
    const Image img = render_frame(t, 2);
    CHECK(img.width == 640);
    CHECK(img.at(0, 0) == Rgb{255, 255, 0});
    CHECK(img.at(5, 3) == Rgb{255, 165, 0});
    CHECK(img.at(9 * 4 + 3, 5 * 4) == kRed);
    CHECK(img.at(100, 100) == kWhite);
    CHECK_THROWS_AS(render_frame(t, 8), OutOfRange);
}
