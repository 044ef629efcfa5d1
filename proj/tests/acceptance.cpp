// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: acceptance [work_dir] [--keep]
//   work_dir  scratch space for the desk-scale dataset (default: temp dir)
//   --keep    reuse a dataset left in work_dir by an earlier run

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "evac/dataset.hpp"
#include "evac/errors.hpp"
#include "evac/eval.hpp"
#include "evac/frames.hpp"
#include "oracles.hpp"

using namespace evac;
namespace fs = std::filesystem;

namespace {

// Tolerances, pinned.
constexpr double kPartitionRelTol = 1e-9;
constexpr double kReductionTol = 1e-12;
constexpr double kFixtureTol = 1e-12;
constexpr double kFreeFlowLo = 20.0, kFreeFlowHi = 23.0;
constexpr double kSpeedRatioTol = 0.10;
constexpr double kClass0Min = 0.90;
constexpr double kMajorityAccuracyMin = 0.90;
constexpr double kPerfBudget = 10.2;  // seconds
constexpr double kPerfTarget = 2.0;
constexpr double kContactTol = 1e-9;  // slack on radius sums and wall clearance

struct Outcome {
    bool pass = false;
    std::string detail;
};

fs::path g_work;
bool g_keep = false;

// --- 1 ---------------------------------------------------------------------

Outcome class_boundaries() {
    const std::vector<std::pair<double, int>> cases{
        {0.0, 0},
        {0.4, 1},
        {std::nextafter(0.4, 1.0), 2},
        {0.4 + 1e-9, 2},
        {0.8, 2},
        {std::nextafter(0.8, 1.0), 3},
        {0.8 + 1e-9, 3},
        {10.0, 3},
        {std::nextafter(0.0, 1.0), 1},
    };
    int bad = 0;
    for (auto [rate, cls] : cases)
        if (classify(rate) != cls) ++bad;
    // stored f32 rates keep the class of the exact quotient
    for (std::uint32_t n = 0; n <= 200; ++n)
        for (double dt : {0.5, 1.25, 2.5, 5.0, 12.5, 7.3, 0.1 * 3})
            if (classify(stored_rate(n, dt)) != classify(n / dt)) ++bad;
    return {bad == 0, fmt::format("{} mismatches", bad)};
}

// --- 2 ---------------------------------------------------------------------

Outcome frame_partition() {
    std::mt19937_64 rng(20261015);
    std::uniform_real_distribution<double> logt(std::log(0.5), std::log(4000.0));
    int bad = 0;
    double worst = 0;
    for (int k = 0; k < 1000; ++k) {
        const double tet = std::exp(logt(rng));
        const FramePartition p = partition_time(tet);
        const double rel = std::abs(kFrames * p.dt - tet) / tet;
        worst = std::max(worst, rel);
        if (rel > kPartitionRelTol) ++bad;
        if (static_cast<int>(p.intervals.size()) != kFrames) {
            ++bad;
            continue;
        }
        if (p.intervals.front().begin != 0.0 || p.intervals.back().end != tet || !p.intervals.back().closed) ++bad;
        for (int i = 0; i + 1 < kFrames; ++i) {
            if (p.intervals[i].end != p.intervals[i + 1].begin || p.intervals[i].closed) ++bad;
            if (!(p.intervals[i].begin < p.intervals[i].end)) ++bad;
        }
        // every instant belongs to exactly one interval
        std::uniform_real_distribution<double> u(0.0, tet);
        for (double t : {0.0, tet, u(rng), u(rng), p.intervals[3].begin}) {
            int owners = 0;
            for (const auto& iv : p.intervals) owners += iv.contains(t);
            if (owners != 1) ++bad;
        }
    }
    return {bad == 0, fmt::format("{} violations, worst relative error {:.2e}", bad, worst)};
}

// --- 3 ---------------------------------------------------------------------

std::vector<std::uint8_t> random_grid(std::mt19937_64& rng, int n) {
    std::uniform_int_distribution<int> cls(0, 3);
    std::vector<std::uint8_t> g(n);
    for (auto& v : g) v = static_cast<std::uint8_t>(cls(rng));
    return g;
}

// (cell, class) pairs of the foreground classes
std::set<std::pair<int, int>> fg_set(const std::vector<std::uint8_t>& g) {
    std::set<std::pair<int, int>> s;
    for (int i = 0; i < static_cast<int>(g.size()); ++i)
        if (g[i] != 0) s.insert({i, g[i]});
    return s;
}

Outcome tversky_oracle() {
    std::mt19937_64 rng(77);
    int bad = 0;
    double worst = 0;
    const TverskyWeights defaults;
    if (defaults.alpha != 0.1 || defaults.beta != 0.9) ++bad;
    for (int trial = 0; trial < 100; ++trial) {
        auto pred = random_grid(rng, 100), truth = random_grid(rng, 100);
        if (trial % 10 == 0) std::fill(pred.begin(), pred.end(), 0);  // empty predictions too
        const auto P = fg_set(pred), T = fg_set(truth);
        std::set<std::pair<int, int>> inter, uni;
        std::set_intersection(P.begin(), P.end(), T.begin(), T.end(), std::inserter(inter, inter.end()));
        std::set_union(P.begin(), P.end(), T.begin(), T.end(), std::inserter(uni, uni.end()));
        const double tp = inter.size(), fp = P.size() - inter.size(), fn = T.size() - inter.size();
        const OverlapCounts c = foreground_overlap(pred, truth);
        if (c.tp != tp || c.fp != fp || c.fn != fn) ++bad;

        const double expect = (tp + fp + fn) == 0 ? 1.0 : tp / (tp + 0.1 * fp + 0.9 * fn);
        if (tversky_index(c) != expect) ++bad;
        if (tversky_loss(pred, truth) != 1.0 - expect) ++bad;

        const double dice = (P.size() + T.size()) == 0 ? 1.0 : 2.0 * inter.size() / (P.size() + T.size());
        const double jaccard = uni.empty() ? 1.0 : static_cast<double>(inter.size()) / uni.size();
        const double d = std::abs(tversky_index(c, {0.5, 0.5}) - dice);
        const double j = std::abs(tversky_index(c, {1.0, 1.0}) - jaccard);
        worst = std::max({worst, d, j});
        if (d > kReductionTol || j > kReductionTol) ++bad;

        // per-class one-vs-rest counts sum to the foreground counts
        OverlapCounts sum;
        for (int k = 1; k < kClasses; ++k) sum += class_overlap(pred, truth, k);
        if (!(sum == c)) ++bad;
    }
    return {bad == 0, fmt::format("{} mismatches, worst reduction error {:.1e}", bad, worst)};
}

// --- 4 ---------------------------------------------------------------------

Outcome metric_fixtures() {
    int bad = 0;
    auto near = [&](double a, double b) {
        if (std::abs(a - b) > kFixtureTol * std::max(1.0, std::abs(b))) ++bad;
    };
    // hand-computed: errors 2, 3, 0 on truths 10, 20, 40
    const MaeRe m = mae_re({{10, 12}, {20, 17}, {40, 40}});
    near(m.mae, 5.0 / 3.0);
    near(m.re, (0.2 + 0.15 + 0.0) / 3.0);
    const MaeRe one = mae_re({{100, 95}});
    near(one.mae, 5.0);
    near(one.re, 0.05);

    // tet 30 vs 27 plus a 2x2 map: truth {0,1,2,3}, pred {0,1,0,3}
    // TP 2, FP 0, FN 1 -> TI = 2 / 2.9, loss = 0.9 / 2.9
    const std::vector<std::uint8_t> truth{0, 1, 2, 3}, pred{0, 1, 0, 3};
    const Losses l = total_loss(30, 27, truth, pred);
    near(l.evac, 9.0);
    near(l.tversky, 0.9 / 2.9);
    near(l.total, 9.0 + 0.9 / 2.9);
    const Losses l2 = total_loss(30, 27, truth, pred, 2.0);
    near(l2.total, 9.0 + 2 * 0.9 / 2.9);
    const Losses l3 = total_loss(12, 12, 0.25, 1.0);
    near(l3.total, 0.25);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 8 * 20 * 20;
        const auto p = random_grid(rng, n), t = random_grid(rng, n);
        std::array<std::array<std::uint64_t, kClasses>, kClasses> naive{};
        for (int r = 0; r < kClasses; ++r)
            for (int c = 0; c < kClasses; ++c)
                for (int i = 0; i < n; ++i)
                    if (t[i] == r && p[i] == c) ++naive[r][c];
        const ConfusionMatrix cm = confusion(p, t);
        if (cm.counts != naive) ++bad;
        if (cm.total() != static_cast<std::uint64_t>(n)) ++bad;
    }
    return {bad == 0, fmt::format("{} mismatches", bad)};
}

// --- 5 ---------------------------------------------------------------------

std::vector<Segment> barrier_edges(const Floorplan& fp) {
    std::vector<Segment> out = fp.walls;
    auto add = [&](const std::vector<Polygon>& polys) {
        for (const auto& poly : polys)
            for (const auto& e : polygon_edges(poly)) out.push_back(e);
    };
    add(fp.obstacles);
    add(fp.bottleneck);
    return out;
}

struct Violations {
    int overlap = 0;
    int wall = 0;
};

Violations replay(const Floorplan& fp, const std::vector<Agent>& agents, const TrajectoryTable& tr) {
    const auto barriers = barrier_edges(fp);
    const AgentTracks tracks(tr);
    std::vector<Vec2> pos(agents.size());
    std::vector<bool> seen(agents.size(), false), live(agents.size(), true);
    Violations v;
    for (const auto& r : tr.rows) {
        const int i = r.agent_id;
        const Vec2 next{r.x, r.y};
        if (seen[i] && !(next == pos[i]))
            for (const auto& b : barriers)
                if (segments_intersect({pos[i], next}, b)) ++v.wall;
        pos[i] = next;
        seen[i] = true;
        if (oracle::clearance(fp, next) < agents[i].radius - kContactTol) ++v.wall;
        for (std::size_t j = 0; j < agents.size(); ++j) {
            if (static_cast<int>(j) == i || !seen[j] || !live[j]) continue;
            if (distance(next, pos[j]) < agents[i].radius + agents[j].radius - kContactTol) ++v.overlap;
        }
        if (r.t == tracks.arrival(i)) live[i] = false;
    }
    return v;
}

Outcome simulator_safety() {
    DatasetConfig cfg;  // paper mode, every layout of every geometry
    const auto entries = enumerate_sweep(cfg);
    std::mt19937_64 rng(505);
    std::vector<std::size_t> pick(entries.size());
    std::iota(pick.begin(), pick.end(), 0);
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(50);

    const EngineConfig engine;
    int nondet = 0, late = 0;
    Violations total;
    std::size_t events = 0;
    for (std::size_t k : pick) {
        const Scenario& s = entries[k].spec;
        validate_scenario(s, true);
        const SimResult a = run(s, engine), b = run(s, engine);
        if (!(a.trajectory == b.trajectory) || a.tet != b.tet || a.arrivals != b.arrivals) ++nondet;
        if (!(a.tet < engine.t_max)) ++late;
        const Environment env(s.floorplan, s.destinations);
        const Violations v = replay(s.floorplan, sample_agents(s, env), a.trajectory);
        total.overlap += v.overlap;
        total.wall += v.wall;
        events += a.trajectory.rows.size();
    }
    return {nondet == 0 && late == 0 && total.overlap == 0 && total.wall == 0,
            fmt::format("50 runs, {} events: {} nondeterministic, {} overlaps, {} wall violations, {} late", events,
                        nondet, total.overlap, total.wall, late)};
}

// --- 6 ---------------------------------------------------------------------

Outcome free_flow() {
    Floorplan fp;  // 20 m of walking before the 1 m exit strip
    fp.site_length = 22;
    fp.site_width = 3;
    fp.walls = {{{0, 0}, {22, 0}}, {{22, 0}, {22, 3}}, {{22, 3}, {0, 3}}, {{0, 3}, {0, 0}}};
    fp.exit_zones = {Box{21, 0, 22, 3}.polygon()};
    const Environment env(fp, {0});
    auto lone = [](double speed) {
        Agent a;
        a.position = {1.0, 1.5};
        a.desired_speed = speed;
        a.radius = 0.22;
        return std::vector<Agent>{a};
    };
    const double slow = simulate(env, lone(1.0)).tet;
    const double fast = simulate(env, lone(2.0)).tet;
    const double dev = std::abs(fast - slow / 2) / (slow / 2);
    return {slow >= kFreeFlowLo && slow <= kFreeFlowHi && dev <= kSpeedRatioTol,
            fmt::format("tet {:.3f} s at 1.0 m/s, {:.3f} s at 2.0 m/s ({:.1f}% off half)", slow, fast, 100 * dev)};
}

// --- 8, 7, 9 share the desk-scale dataset -------------------------------------

struct Desk {
    fs::path dir;
    Manifest manifest;
    double seconds = 0;
    int simulated = 0;
};

Desk& desk() {
    static Desk d = [] {
        Desk out;
        out.dir = g_work / "desk";
        if (!g_keep) fs::remove_all(out.dir);
        DatasetConfig cfg;
        cfg.sweep.layouts_per_geometry = 1;
        cfg.sweep.base_seed = 1;
        cfg.workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
        const auto t0 = std::chrono::steady_clock::now();
        const BuildReport r = build_dataset(cfg, out.dir);
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.manifest = r.manifest;
        out.simulated = r.simulated;
        return out;
    }();
    return d;
}

Outcome sweep_structure() {
    int bad = 0;
    if (enumerate_all_versions().size() != 36) ++bad;
    std::map<Archetype, int> per_archetype;
    for (const auto& p : enumerate_all_versions()) ++per_archetype[p.archetype];
    for (auto a : {Archetype::A, Archetype::B, Archetype::C})
        if (per_archetype[a] != 12) ++bad;

    // full paper sweep: every layout carries exactly the 3 x 3 grid
    DatasetConfig full;
    const auto entries = enumerate_sweep(full);
    const std::set<std::pair<int, double>> grid{{10, 1.0}, {10, 1.34}, {10, 2.0}, {20, 1.0}, {20, 1.34},
                                                {20, 2.0}, {30, 1.0}, {30, 1.34}, {30, 2.0}};
    std::set<int> geoms;
    std::map<std::string, std::multiset<std::pair<int, double>>> per_layout;
    for (const auto& e : entries) {
        geoms.insert(e.geometry);
        std::ostringstream key;
        key << e.geometry << '|';
        for (const auto& o : e.spec.origins) key << o.room << ',';
        key << '|';
        for (int d : e.spec.destinations) key << d << ',';
        int agents = e.spec.origins.front().agent_count;
        for (const auto& o : e.spec.origins)
            if (o.agent_count != agents) ++bad;
        per_layout[key.str()].insert({agents, e.spec.mean_speed});
        if (e.spec.speed_sigma != 0.26) ++bad;
    }
    if (geoms.size() != 36) ++bad;
    for (const auto& [k, combos] : per_layout)
        if (std::set(combos.begin(), combos.end()) != grid || combos.size() != 9) ++bad;

    const Desk& d = desk();
    if (d.manifest.samples.size() != 36 * 9) ++bad;
    int failed = 0, wrong_shape = 0;
    for (const auto& r : d.manifest.samples) {
        if (!r.ok) {
            ++failed;
            continue;
        }
        const FrameTensor t = read_frames(sample_path(d.dir, r.id) / "frames.evf");
        if (t.frames != 8 || t.height != 160 || t.width != 160) ++wrong_shape;
    }
    if (failed || wrong_shape) ++bad;
    return {bad == 0, fmt::format("{} scenarios in {} layouts over {} geometries; desk sweep {} samples "
                                  "({} failed, {} misshapen) built in {:.0f} s",
                                  entries.size(), per_layout.size(), geoms.size(), d.manifest.samples.size(), failed,
                                  wrong_shape, d.seconds)};
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

Outcome congestion() {
    const Desk& d = desk();
    // params: (origins, destinations, agents per origin, speed, length, width)
    std::map<double, std::map<int, std::vector<double>>> by_speed;
    std::map<int, std::vector<double>> pooled;
    std::set<int> geoms;
    for (const auto& r : d.manifest.samples) {
        if (!r.ok) continue;
        geoms.insert(r.geometry);
        by_speed[r.params[3]][static_cast<int>(r.params[2])].push_back(r.tet);
        pooled[static_cast<int>(r.params[2])].push_back(r.tet);
    }
    bool ok = geoms.size() >= 10;
    std::string detail;
    auto check = [&](const std::string& label, std::map<int, std::vector<double>>& m) {
        const double a = median(m[10]), b = median(m[20]), c = median(m[30]);
        ok = ok && a <= b && b <= c;
        detail += fmt::format("{} {:.1f}/{:.1f}/{:.1f}; ", label, a, b, c);
    };
    for (auto& [speed, m] : by_speed) check(fmt::format("v={}", speed), m);
    check("all", pooled);
    return {ok, fmt::format("{} geometries, median tet for 10/20/30 agents: {}", geoms.size(), detail)};
}

Outcome imbalance() {
    const Desk& d = desk();
    const DatasetStats st = compute_stats(d.dir, d.manifest);
    bool ok = st.samples > 0;
    double lowest = 1.0;
    for (double f : st.class0_fraction) lowest = std::min(lowest, f);
    ok = ok && lowest > kClass0Min;

    std::vector<Prediction> preds;
    std::vector<Truth> truths;
    for (const auto& r : d.manifest.samples) {
        if (!r.ok) continue;
        const Scenario s = parse_scenario_xml([&] {
            std::ifstream in(sample_path(d.dir, r.id) / "scenario.xml");
            std::stringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }());
        truths.push_back({r.id, read_frames(sample_path(d.dir, r.id) / "frames.evf"), r.tet});
        preds.push_back(baseline_majority(r.id, baseline_flow_tet(s)));
    }
    const EvalReport rep = evaluate(preds, truths);
    ok = ok && rep.accuracy > kMajorityAccuracyMin && rep.losses.tversky == 1.0 && rep.tversky == 0.0;
    return {ok, fmt::format("lowest per-frame class-0 fraction {:.4f}; majority accuracy {:.4f}, Tversky loss {}",
                            lowest, rep.accuracy, rep.losses.tversky)};
}

// --- 10 --------------------------------------------------------------------

Outcome performance() {
    Scenario s;
    s.floorplan = build_floorplan({Archetype::A, 64, 64, 3, 10, false, false});
    for (int room : {0, 4, 9}) s.origins.push_back({room, 30});
    for (int e = 0; e < static_cast<int>(s.floorplan.exit_zones.size()); ++e) s.destinations.push_back(e);
    s.seed = 10;
    const auto t0 = std::chrono::steady_clock::now();
    const SimResult r = run(s);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {secs < kPerfBudget && r.arrivals.size() == 90,
            fmt::format("{} agents, tet {:.1f} s simulated in {:.3f} s wall ({} the {} s target)", r.arrivals.size(),
                        r.tet, secs, secs < kPerfTarget ? "within" : "over", kPerfTarget)};
}

// --- 11 --------------------------------------------------------------------

Outcome round_trips() {
    int bad = 0, xml = 0;
    DatasetConfig cfg;
    cfg.sweep.layouts_per_geometry = 1;
    for (const auto& e : enumerate_sweep(cfg)) {
        if (e.scenario % 4 != 0) continue;
        ++xml;
        if (!(parse_scenario_xml(export_scenario_xml(e.spec)) == e.spec)) ++bad;
    }

    const Desk& d = desk();
    int tensors = 0, augs = 0;
    for (const auto& r : d.manifest.samples) {
        if (!r.ok || r.scenario != 0) continue;  // one sample per geometry
        const SampleData s = load_sample(d.dir, r);
        std::stringstream bin;
        write_frames(bin, s.frames);
        if (!(read_frames(bin) == s.frames)) ++bad;
        ++tensors;

        auto twice = [&](AugmentOps ops, int n) {
            SampleData x = s;
            for (int k = 0; k < n; ++k) x = augment(x, ops);
            if (!(x == s)) ++bad;
            ++augs;
        };
        twice({true, false, false, false}, 2);
        twice({false, true, false, false}, 2);
        twice({false, false, true, false}, 2);
        twice({false, false, false, true}, 4);
    }
    return {bad == 0 && tensors > 0,
            fmt::format("{} XML, {} tensor and {} augmentation round trips, {} mismatches", xml, tensors, augs, bad)};
}

}  // namespace

int main(int argc, char** argv) {
    g_work = fs::temp_directory_path() / "evac_acceptance";
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--keep") g_keep = true;
        else g_work = a;
    }
    fs::create_directories(g_work);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"density class boundaries", class_boundaries},
        {"frame partition", frame_partition},
        {"Tversky set oracle", tversky_oracle},
        {"metric fixtures", metric_fixtures},
        {"simulator safety and determinism", simulator_safety},
        {"free-flow corridor", free_flow},
        {"congestion monotonicity", congestion},
        {"structural sweep", sweep_structure},
        {"class imbalance and majority baseline", imbalance},
        {"90-agent performance", performance},
        {"round trips", round_trips},
    };
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const Error& e) {
            o = {false, fmt::format("{}: {}", e.kind(), e.what())};
        } catch (const std::exception& e) {
            o = {false, e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        std::cout << fmt::format("{} {:2} {}: {} [{:.1f} s]", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first,
                                 o.detail, secs)
                  << std::endl;
    }
    std::cout << fmt::format("{}/{} criteria passed", criteria.size() - failures, criteria.size()) << std::endl;
    return failures == 0 ? 0 : 1;
}
