#include "evac/eval.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "evac/errors.hpp"

namespace evac {

using json = nlohmann::json;

namespace {

void check_shapes(std::size_t a, std::size_t b) {
    if (a != b) throw ShapeMismatch(fmt::format("label arrays differ in size: {} vs {}", a, b));
}

void check_label(std::uint8_t v) {
    if (v >= kClasses) throw OutOfRange(fmt::format("class label {} not in 0..3", int(v)));
}

}  // namespace

double tversky_index(const OverlapCounts& c, const TverskyWeights& w) {
    if (!(w.alpha >= 0.0) || !(w.beta >= 0.0))
        throw NegativeWeights(fmt::format("tversky weights must be >= 0, got {} and {}", w.alpha, w.beta));
    if (c.tp == 0 && c.fp == 0 && c.fn == 0) return 1.0;
    const double tp = static_cast<double>(c.tp);
    const double denom = tp + w.alpha * static_cast<double>(c.fp) + w.beta * static_cast<double>(c.fn);
    return denom > 0.0 ? tp / denom : 0.0;
}

double tversky_index(const std::vector<bool>& pred, const std::vector<bool>& truth, const TverskyWeights& w) {
    check_shapes(pred.size(), truth.size());
    OverlapCounts c;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        c.tp += pred[k] && truth[k];
        c.fp += pred[k] && !truth[k];
        c.fn += !pred[k] && truth[k];
    }
    return tversky_index(c, w);
}

OverlapCounts class_overlap(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth, int cls) {
    check_shapes(pred.size(), truth.size());
    OverlapCounts c;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const bool p = pred[k] == cls, t = truth[k] == cls;
        c.tp += p && t;
        c.fp += p && !t;
        c.fn += !p && t;
    }
    return c;
}

OverlapCounts foreground_overlap(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
    OverlapCounts c;
    for (int cls = 1; cls < kClasses; ++cls) c += class_overlap(pred, truth, cls);
    return c;
}

double tversky_loss(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth, const TverskyWeights& w) {
    return 1.0 - tversky_index(foreground_overlap(pred, truth), w);
}

Losses total_loss(double tet, double tet_hat, double tversky, double lambda) {
    if (!(lambda >= 0.0)) throw NegativeWeights(fmt::format("lambda must be >= 0, got {}", lambda));
    Losses l;
    l.evac = (tet - tet_hat) * (tet - tet_hat);
    l.tversky = tversky;
    l.total = l.evac + lambda * tversky;
    return l;
}

Losses total_loss(double tet, double tet_hat, std::span<const std::uint8_t> truth, std::span<const std::uint8_t> pred,
                  double lambda, const TverskyWeights& w) {
    return total_loss(tet, tet_hat, tversky_loss(pred, truth, w), lambda);
}

void ConfusionMatrix::add(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
    check_shapes(pred.size(), truth.size());
    for (std::size_t k = 0; k < pred.size(); ++k) {
        check_label(pred[k]);
        check_label(truth[k]);
        ++counts[truth[k]][pred[k]];
    }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
    for (int r = 0; r < kClasses; ++r)
        for (int c = 0; c < kClasses; ++c) counts[r][c] += o.counts[r][c];
    return *this;
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (const auto& row : counts)
        for (auto v : row) t += v;
    return t;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t t = 0;
    for (int k = 0; k < kClasses; ++k) t += counts[k][k];
    return t;
}

std::uint64_t ConfusionMatrix::row_sum(int r) const {
    std::uint64_t t = 0;
    for (auto v : counts.at(r)) t += v;
    return t;
}

std::uint64_t ConfusionMatrix::col_sum(int c) const {
    std::uint64_t t = 0;
    for (const auto& row : counts) t += row.at(c);
    return t;
}

double ConfusionMatrix::accuracy() const {
    const auto t = total();
    return t ? static_cast<double>(trace()) / static_cast<double>(t) : 0.0;
}

ConfusionMatrix confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
    ConfusionMatrix m;
    m.add(pred, truth);
    return m;
}

MaeRe mae_re(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.empty()) throw EmptyList("mae_re needs at least one pair");
    MaeRe out;
    for (const auto& [t, t_hat] : pairs) {
        if (!(t > 0.0)) throw NonPositiveTruth(fmt::format("true tet must be > 0, got {}", t));
        const double err = std::abs(t - t_hat);
        out.mae += err;
        out.re += err / t;
    }
    out.mae /= static_cast<double>(pairs.size());
    out.re /= static_cast<double>(pairs.size());
    return out;
}

void write_prediction(const std::filesystem::path& dir, const Prediction& p) {
    std::filesystem::create_directories(dir);
    write_frames(dir / (p.id + ".evf"), p.frames);
    std::ofstream os(dir / (p.id + ".tet.json"));
    os << json{{"id", p.id}, {"tet_hat", p.tet_hat}}.dump() << '\n';
    if (!os) throw IoError(fmt::format("cannot write prediction {}", p.id));
}

Prediction read_prediction(const std::filesystem::path& dir, const std::string& id) {
    Prediction p;
    p.id = id;
    p.frames = read_frames(dir / (id + ".evf"));
    std::ifstream is(dir / (id + ".tet.json"));
    if (!is) throw IoError(fmt::format("missing tet sidecar for prediction {}", id));
    try {
        p.tet_hat = json::parse(is).at("tet_hat").get<double>();
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("prediction {}: {}", id, e.what()));
    }
    if (!(p.tet_hat > 0.0)) throw FormatError(fmt::format("prediction {}: tet_hat must be > 0", id));
    for (auto c : p.frames.classes) check_label(c);
    return p;
}

double exit_width(const Floorplan& fp, int exit) {
    const Polygon& zone = fp.exit_zones.at(exit);
    auto near = [](double u, double v) { return std::abs(u - v) < 1e-9; };
    auto on_outline = [&](const Segment& e) {
        for (double x : {0.0, fp.site_length})
            if (near(e.a.x, x) && near(e.b.x, x)) return true;
        for (double y : {0.0, fp.site_width})
            if (near(e.a.y, y) && near(e.b.y, y)) return true;
        return false;
    };
    double best = 0.0;
    for (const Segment& e : polygon_edges(zone))
        if (on_outline(e)) best = std::max(best, e.length());
    if (best > 0.0) return best;
    const Box b = bounding_box(zone);
    return std::max(b.width(), b.height());
}

double baseline_flow_tet(const Scenario& s, const NavField& nav, const FlowConfig& cfg) {
    double walk = 0.0;
    for (const Origin& o : s.origins) {
        const Room& room = s.floorplan.rooms.at(o.room);
        const Vec2 c = polygon_centroid(room.polygon);
        double d = nav.value(c);
        if (!std::isfinite(d)) {
            const Vec2 door = (room.door.a + room.door.b) * 0.5;
            d = nav.value(door) + distance(c, door);
        }
        walk = std::max(walk, d / s.mean_speed);
    }
    double width = 0.0;
    for (int e : s.destinations) width += exit_width(s.floorplan, e);
    return walk + s.total_agents() / (cfg.capacity * width);
}

double baseline_flow_tet(const Scenario& s, const FlowConfig& cfg) {
    const NavField nav = compute_nav_field(s.floorplan, s.destinations);
    return baseline_flow_tet(s, nav, cfg);
}

Prediction baseline_majority(const std::string& id, double tet_hat, int frames, int height, int width) {
    return {id, FrameTensor(frames, height, width), tet_hat};
}

EvalReport evaluate(const std::vector<Prediction>& preds, const std::vector<Truth>& truths, const EvalConfig& cfg) {
    if (preds.size() != truths.size())
        throw ShapeMismatch(fmt::format("{} predictions for {} samples", preds.size(), truths.size()));
    if (truths.empty()) throw EmptyList("nothing to evaluate");
    EvalReport r;
    std::array<OverlapCounts, kClasses> per_class{};
    OverlapCounts fg;
    std::vector<std::pair<double, double>> tets;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        const auto& p = preds[k].frames;
        const auto& t = truths[k].frames;
        if (p.frames != t.frames || p.height != t.height || p.width != t.width)
            throw ShapeMismatch(fmt::format("sample {}: prediction shape {}x{}x{} vs truth {}x{}x{}", truths[k].id,
                                            p.frames, p.height, p.width, t.frames, t.height, t.width));
        r.confusion.add(p.classes, t.classes);
        for (int c = 0; c < kClasses; ++c) per_class[c] += class_overlap(p.classes, t.classes, c);
        const OverlapCounts sample_fg = foreground_overlap(p.classes, t.classes);
        fg += sample_fg;
        const Losses l = total_loss(truths[k].tet, preds[k].tet_hat, 1.0 - tversky_index(sample_fg, cfg.weights), cfg.lambda);
        r.losses.evac += l.evac;
        r.losses.tversky += l.tversky;
        r.losses.total += l.total;
        tets.push_back({truths[k].tet, preds[k].tet_hat});
    }
    const double n = static_cast<double>(preds.size());
    r.losses.evac /= n;
    r.losses.tversky /= n;
    r.losses.total /= n;
    for (int c = 0; c < kClasses; ++c) r.tversky_per_class[c] = tversky_index(per_class[c], cfg.weights);
    r.tversky = tversky_index(fg, cfg.weights);
    const MaeRe m = mae_re(tets);
    r.mae = m.mae;
    r.re = m.re;
    r.n_test = static_cast<int>(preds.size());
    r.accuracy = r.confusion.accuracy();
    return r;
}

std::string report_json(const EvalReport& r, const EvalConfig& cfg) {
    json conf = json::array();
    for (const auto& row : r.confusion.counts) conf.push_back(row);
    const json j = {{"n_test", r.n_test},
                    {"mae", r.mae},
                    {"re", r.re},
                    {"accuracy", r.accuracy},
                    {"tversky", {{"alpha", cfg.weights.alpha},
                                 {"beta", cfg.weights.beta},
                                 {"foreground", r.tversky},
                                 {"per_class", r.tversky_per_class}}},
                    {"losses", {{"lambda", cfg.lambda},
                                {"l_evac", r.losses.evac},
                                {"l_tversky", r.losses.tversky},
                                {"l_total", r.losses.total}}},
                    {"confusion", {{"rows", "truth"}, {"cols", "prediction"}, {"counts", conf}}}};
    return j.dump(2) + "\n";
}

Image render_confusion(const ConfusionMatrix& m, int cell_px) {
    constexpr int gap = 2;
    const int side = kClasses * cell_px + (kClasses + 1) * gap;
    Image img(side, side, {160, 160, 160});
    for (int r = 0; r < kClasses; ++r) {
        const std::uint64_t row = m.row_sum(r);
        for (int c = 0; c < kClasses; ++c) {
            const double f = row ? static_cast<double>(m.counts[r][c]) / static_cast<double>(row) : 0.0;
            const auto shade = [&](int full, int dark) {
                return static_cast<std::uint8_t>(std::lround(full + (dark - full) * f));
            };
            const Rgb color{shade(255, 8), shade(255, 48), shade(255, 107)};
            const int x0 = gap + c * (cell_px + gap), y0 = gap + r * (cell_px + gap);
            img.fill_rect(x0, y0, x0 + cell_px, y0 + cell_px, color);
        }
    }
    return img;
}

}  // namespace evac
