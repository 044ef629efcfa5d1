#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include "evac/engine.hpp"
#include "evac/errors.hpp"
#include "evac/eval.hpp"

using namespace evac;

namespace {

std::vector<std::uint8_t> random_labels(std::mt19937_64& rng, std::size_t n, double p_bg = 0.6) {
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::uint8_t> out(n);
    for (auto& v : out) v = u(rng) < p_bg ? 0 : static_cast<std::uint8_t>(1 + rng() % 3);
    return out;
}

// Set-based counts for one class.
OverlapCounts set_counts(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& truth, int cls) {
    std::set<std::size_t> P, G;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        if (pred[k] == cls) P.insert(k);
        if (truth[k] == cls) G.insert(k);
    }
    OverlapCounts c;
    for (auto k : P) (G.count(k) ? c.tp : c.fp)++;
    for (auto k : G) c.fn += !P.count(k);
    return c;
}

// Straight 20 m walk to a 2 m wide exit; the room marks the start area.
Scenario corridor_scenario(int agents) {
    Scenario s;
    Floorplan& fp = s.floorplan;
    fp.site_length = 22;
    fp.site_width = 2;
    fp.walls = {{{0, 0}, {22, 0}}, {{22, 0}, {22, 2}}, {{22, 2}, {0, 2}}, {{0, 2}, {0, 0}}};
    fp.rooms = {{Box{0, 0, 2, 2}.polygon(), {{2, 0.5}, {2, 1.5}}}};
    fp.exit_zones = {Box{21, 0, 22, 2}.polygon()};
    s.origins = {{0, agents}};
    s.destinations = {0};
    s.mean_speed = 1.0;
    return s;
}

}  // namespace

TEST_CASE("tversky index examples") {
    CHECK(tversky_index(OverlapCounts{8, 2, 4}) == doctest::Approx(8 / 11.8).epsilon(1e-12));
    CHECK(tversky_index(OverlapCounts{8, 2, 4}) == doctest::Approx(0.67797).epsilon(1e-5));
    CHECK(tversky_index(OverlapCounts{5, 0, 0}) == 1.0);
    CHECK(tversky_index(OverlapCounts{0, 0, 0}) == 1.0);
    CHECK(tversky_index(OverlapCounts{0, 3, 0}) == 0.0);
    // P = {a, b, c}, G = {b, c, d} over {a, b, c, d}.
    const std::vector<bool> P{true, true, true, false}, G{false, true, true, true};
    CHECK(tversky_index(P, G, {0.5, 0.5}) == doctest::Approx(2.0 / 3).epsilon(1e-15));
    CHECK(tversky_index(P, G, {1, 1}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(tversky_index(OverlapCounts{1, 1, 1}, {-0.1, 0.5}), NegativeWeights);
    CHECK_THROWS_AS(tversky_index(std::vector<bool>{true}, std::vector<bool>{true, false}), ShapeMismatch);
}

TEST_CASE("tversky index properties on random sets") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> w(0, 2);
    for (int n = 0; n < 200; ++n) {
        std::vector<bool> P(100), G(100);
        for (int k = 0; k < 100; ++k) {
            P[k] = rng() % 3 == 0;
            G[k] = rng() % 3 == 0;
        }
        std::size_t inter = 0, p = 0, g = 0, uni = 0;
        for (int k = 0; k < 100; ++k) {
            inter += P[k] && G[k];
            p += P[k];
            g += G[k];
            uni += P[k] || G[k];
        }
        const double dice = p + g ? 2.0 * inter / (p + g) : 1.0;
        const double jaccard = uni ? double(inter) / uni : 1.0;
        CHECK(std::abs(tversky_index(P, G, {0.5, 0.5}) - dice) <= 1e-12);
        CHECK(tversky_index(P, G, {1, 1}) == jaccard);
        const double a = w(rng), b = w(rng);
        CHECK(tversky_index(P, G, {a, b}) == doctest::Approx(tversky_index(G, P, {b, a})).epsilon(1e-14));
        const double ti = tversky_index(P, G, {a, b});
        CHECK(ti >= 0.0);
        CHECK(ti <= 1.0);
    }
}

TEST_CASE("tversky loss") {
    std::mt19937_64 rng(3);
    const auto truth = random_labels(rng, 8 * 400);
    CHECK(tversky_loss(truth, truth) == 0.0);
    const std::vector<std::uint8_t> zeros(truth.size(), 0);
    CHECK(tversky_loss(zeros, truth) == 1.0);
    CHECK(tversky_loss(zeros, zeros) == 0.0);

    for (int n = 0; n < 20; ++n) {
        const auto pred = random_labels(rng, truth.size());
        OverlapCounts micro;
        for (int c = 1; c <= 3; ++c) micro += set_counts(pred, truth, c);
        const double expect = 1.0 - double(micro.tp) / (micro.tp + 0.1 * micro.fp + 0.9 * micro.fn);
        CHECK(tversky_loss(pred, truth) == doctest::Approx(expect).epsilon(1e-14));
        CHECK(foreground_overlap(pred, truth) == micro);
    }
    const std::vector<std::uint8_t> short_pred(5, 0);
    CHECK_THROWS_AS(tversky_loss(short_pred, truth), ShapeMismatch);

    // Hand fixture: truth 1 1 2 3 0 0, pred 1 2 2 0 3 0.
    // class1: tp1 fn1; class2: tp1 fp1; class3: fp1 fn1 -> tp2 fp2 fn2.
    const std::vector<std::uint8_t> t{1, 1, 2, 3, 0, 0}, p{1, 2, 2, 0, 3, 0};
    CHECK(foreground_overlap(p, t) == OverlapCounts{2, 2, 2});
    CHECK(tversky_loss(p, t) == doctest::Approx(1 - 2 / 4.0).epsilon(1e-15));
}

TEST_CASE("total loss") {
    const std::vector<std::uint8_t> t{1, 0, 3};
    const Losses perfect = total_loss(50, 50, t, t);
    CHECK(perfect == Losses{0, 0, 0});
    const Losses l = total_loss(100, 90, 0.5, 1.0);
    CHECK(l.evac == 100);
    CHECK(l.total == 100.5);
    CHECK(total_loss(100, 90, 0.5, 0.0).total == l.evac);
    CHECK(total_loss(100, 90, 0.5, 3.0).total == 101.5);
    CHECK_THROWS_AS(total_loss(1, 1, 0.5, -1), NegativeWeights);
}

TEST_CASE("confusion matrix") {
    std::mt19937_64 rng(8);
    for (int n = 0; n < 20; ++n) {
        const auto truth = random_labels(rng, 2000), pred = random_labels(rng, 2000);
        const ConfusionMatrix m = confusion(pred, truth);
        std::uint64_t naive[4][4] = {};
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                for (std::size_t k = 0; k < truth.size(); ++k) naive[r][c] += truth[k] == r && pred[k] == c;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) CHECK(m.counts[r][c] == naive[r][c]);
        CHECK(m.total() == 2000);
        std::size_t hits = 0;
        for (std::size_t k = 0; k < truth.size(); ++k) hits += truth[k] == pred[k];
        CHECK(m.accuracy() == double(hits) / 2000);
        for (int r = 0; r < 4; ++r) CHECK(m.row_sum(r) == std::size_t(std::count(truth.begin(), truth.end(), r)));
    }
    const std::vector<std::uint8_t> t{0, 1, 2, 3, 3};
    const ConfusionMatrix diag = confusion(t, t);
    CHECK(diag.trace() == diag.total());
    const ConfusionMatrix zero_col = confusion(std::vector<std::uint8_t>(5, 0), t);
    CHECK(zero_col.col_sum(0) == 5);
    ConfusionMatrix sum = diag;
    sum += zero_col;
    CHECK(sum.total() == 10);
    CHECK_THROWS_AS(confusion(t, std::vector<std::uint8_t>(4, 0)), ShapeMismatch);
    CHECK_THROWS_AS(confusion(std::vector<std::uint8_t>{4}, std::vector<std::uint8_t>{0}), OutOfRange);
}

TEST_CASE("mae and relative error") {
    auto r = mae_re({{100, 95}});
    CHECK(r.mae == 5);
    CHECK(r.re == doctest::Approx(0.05).epsilon(1e-15));
    r = mae_re({{100, 95}, {50, 55}});
    CHECK(r.mae == 5);
    CHECK(r.re == doctest::Approx(0.075).epsilon(1e-15));
    r = mae_re({{10, 10}, {20, 20}});
    CHECK(r.mae == 0);
    CHECK(r.re == 0);
    CHECK_THROWS_AS(mae_re({}), EmptyList);
    CHECK_THROWS_AS(mae_re({{0, 1}}), NonPositiveTruth);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(1, 200);
    std::vector<std::pair<double, double>> pairs;
    for (int k = 0; k < 50; ++k) pairs.push_back({u(rng), u(rng)});
    const auto base = mae_re(pairs);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    const auto shuffled = mae_re(pairs);
    CHECK(shuffled.mae == doctest::Approx(base.mae).epsilon(1e-12));
    for (auto& [t, th] : pairs) t *= 3, th *= 3;
    const auto scaled = mae_re(pairs);
    CHECK(scaled.mae == doctest::Approx(3 * base.mae).epsilon(1e-12));
    CHECK(scaled.re == doctest::Approx(base.re).epsilon(1e-12));
}

TEST_CASE("flow baseline") {
    const Scenario one = corridor_scenario(1);
    CHECK(exit_width(one.floorplan, 0) == 2.0);
    const double t1 = baseline_flow_tet(one);
    CHECK(t1 == doctest::Approx(20 + 1 / 2.66).epsilon(0.02));
    const Scenario two = corridor_scenario(2);
    CHECK(baseline_flow_tet(two) - t1 == doctest::Approx(1 / 2.66).epsilon(1e-12));
    FlowConfig slow;
    slow.capacity = 0.5;
    CHECK(baseline_flow_tet(one, slow) - t1 == doctest::Approx(1.0 - 1 / 2.66).epsilon(1e-12));
}

TEST_CASE("flow baseline tracks the simulator") {
    int within = 0, total = 0;
    const auto versions = enumerate_all_versions();
    for (std::size_t g = 0; g < versions.size(); ++g) {
        const Floorplan fp = build_floorplan(versions[g]);
        SweepConfig sweep;
        sweep.agents = {10};
        sweep.speeds = {1.34};
        sweep.base_seed = g;
        sweep.layouts_per_geometry = 1;
        const Scenario s = enumerate_scenarios(fp, sweep).front();
        const double sim = run(s).tet;
        const double est = baseline_flow_tet(s);
        ++total;
        within += est >= sim / 2 && est <= sim * 2;
    }
    CHECK(within == total);
}

TEST_CASE("majority baseline and evaluation report") {
    std::mt19937_64 rng(12);
    std::vector<Truth> truths;
    std::vector<Prediction> majority, perfect;
    for (int k = 0; k < 3; ++k) {
        Truth t{"s" + std::to_string(k), FrameTensor(8, 160, 160), 40.0 + k};
        t.frames.classes = random_labels(rng, t.frames.size(), 0.97);
        truths.push_back(t);
        majority.push_back(baseline_majority(t.id, 42));
        perfect.push_back({t.id, t.frames, t.tet});
    }
    const EvalReport m = evaluate(majority, truths);
    CHECK(m.n_test == 3);
    for (int r = 0; r < 4; ++r)
        for (int c = 1; c < 4; ++c) CHECK(m.confusion.counts[r][c] == 0);
    CHECK(m.confusion.col_sum(0) == 3u * 8 * 160 * 160);
    CHECK(m.tversky == 0.0);
    CHECK(m.losses.tversky == 1.0);
    CHECK(m.accuracy > 0.9);
    const double c0 = static_cast<double>(m.confusion.row_sum(0));
    CHECK(m.accuracy >= c0 / m.confusion.total());
    CHECK(m.mae == doctest::Approx(1.0).epsilon(1e-12));  // |40-42|, |41-42|, |42-42|

    const EvalReport p = evaluate(perfect, truths);
    CHECK(p.accuracy == 1.0);
    CHECK(p.tversky == 1.0);
    CHECK(p.losses == Losses{0, 0, 0});
    CHECK(p.mae == 0);

    const std::string json = report_json(m);
    CHECK(json.find("\"n_test\": 3") != std::string::npos);
    CHECK(json.find("\"l_total\"") != std::string::npos);

    perfect.pop_back();
    CHECK_THROWS_AS(evaluate(perfect, truths), ShapeMismatch);
    CHECK_THROWS_AS(evaluate({}, {}), EmptyList);
}

TEST_CASE("prediction files and confusion render") {
    const auto dir = std::filesystem::temp_directory_path() / "evac_test_pred";
    std::filesystem::remove_all(dir);
    Prediction p = baseline_majority("g01_s0002", 12.5);
    p.frames.classes[77] = 2;
    write_prediction(dir, p);
    const Prediction back = read_prediction(dir, p.id);
    CHECK(back.frames.classes == p.frames.classes);
    CHECK(back.tet_hat == 12.5);
    CHECK_THROWS_AS(read_prediction(dir, "missing"), IoError);
    std::filesystem::remove_all(dir);

    ConfusionMatrix m;
    m.counts[0][0] = 10;
    m.counts[1][2] = 4;
    const Image img = render_confusion(m, 10);
    CHECK(img.width == 4 * 10 + 5 * 2);
    CHECK(img.at(2, 2) == Rgb{8, 48, 107});       // row 0 is all on the diagonal
    CHECK(img.at(2 + 2 * 12, 2 + 12) == Rgb{8, 48, 107});
    CHECK(img.at(2 + 12, 2 + 12) == kWhite);
    CHECK(img.at(0, 0) == Rgb{160, 160, 160});
    CHECK(render_confusion(m, 10) == img);
}
