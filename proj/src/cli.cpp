#include "evac/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "evac/dataset.hpp"
#include "evac/errors.hpp"
#include "evac/eval.hpp"
#include "evac/frames.hpp"
#include "evac/raster.hpp"

namespace evac {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error("DataError", what) {}
};

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open {}", p.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size())))
        throw IoError(fmt::format("cannot write {}", p.string()));
}

void echo_config(const fs::path& path, const std::string& command, json options) {
    options["command"] = command;
    write_text(path, options.dump(2) + "\n");
}

// --- option bundles ----------------------------------------------------------

struct GenOpts {
    std::string out;
    std::vector<int> geometries;
};

struct ScenarioPick {
    std::string xml;
    int geometry = -1;
    int index = 0;
    std::optional<std::uint64_t> seed;
};

struct SimOpts {
    ScenarioPick pick;
    std::string out;
};

struct FramesOpts {
    std::string trajectory;
    std::string scenario;
    std::string out;
    bool render = false;
};

struct BuildOpts {
    std::string out;
    std::string mode = "paper";
    std::string config;
    std::vector<int> agents;
    std::vector<double> speeds;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<int> layouts;
    std::vector<int> geometries;
};

struct StatsOpts {
    std::string dir;
};

struct SplitOpts {
    std::string dir;
    std::uint64_t seed = 0;
    std::vector<double> ratios{0.8, 0.1, 0.1};
};

struct EvalOpts {
    std::string truth;
    std::string pred;
    std::string baseline;
    std::string split = "test";
    std::string out;
    double alpha = 0.1;
    double beta = 0.9;
    double lambda = 1.0;
};

struct BaselineOpts {
    std::string truth;
    std::string out;
    std::string split = "test";
    double capacity = 1.33;
};

struct RenderOpts {
    std::string frames;
    std::string report;
    std::string out;
};

struct ExportOpts {
    ScenarioPick pick;
    std::string out;
};

void add_pick_options(CLI::App* cmd, ScenarioPick& p) {
    cmd->add_option("--scenario", p.xml, "Scenario XML file");
    cmd->add_option("--geometry", p.geometry, "Geometry id 0-35 (instead of --scenario)")->check(CLI::Range(0, 35));
    cmd->add_option("--index", p.index, "Scenario index within the geometry's paper-mode sweep")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", p.seed, "Override the scenario seed");
}

Scenario pick_scenario(const ScenarioPick& p) {
    Scenario s;
    if (!p.xml.empty()) {
        s = parse_scenario_xml(read_text(p.xml));
    } else if (p.geometry >= 0) {
        DatasetConfig cfg;
        cfg.geometries = {p.geometry};
        const auto entries = enumerate_sweep(cfg);
        if (p.index >= static_cast<int>(entries.size()))
            throw OutOfRange(fmt::format("geometry {} has {} scenarios", p.geometry, entries.size()));
        s = entries[p.index].spec;
    } else {
        throw CLI::ValidationError("--scenario or --geometry is required");
    }
    if (p.seed) s.seed = *p.seed;
    return s;
}

json pick_json(const ScenarioPick& p, const Scenario& s) {
    return {{"scenario", p.xml}, {"geometry", p.geometry}, {"index", p.index}, {"seed", s.seed}};
}

// --- commands ------------------------------------------------------------------

void cmd_gen(const GenOpts& o, std::ostream& out) {
    const auto versions = enumerate_all_versions();
    std::vector<int> ids = o.geometries;
    if (ids.empty())
        for (int g = 0; g < static_cast<int>(versions.size()); ++g) ids.push_back(g);
    const fs::path dir(o.out);
    fs::create_directories(dir);
    json index = json::array();
    for (int g : ids) {
        if (g < 0 || g >= static_cast<int>(versions.size())) throw OutOfRange(fmt::format("no geometry {}", g));
        const GeometryParams& p = versions[g];
        const Floorplan fp = build_floorplan(p);
        const std::string stem = fmt::format("g{:02}", g);
        std::ostringstream text;
        write_floorplan(text, fp);
        write_text(dir / (stem + ".txt"), text.str());
        write_png(dir / (stem + ".png"), rasterize(fp).pixels);
        index.push_back({{"id", g},
                         {"archetype", archetype_name(p.archetype)},
                         {"length", p.length},
                         {"width", p.width},
                         {"corridor_width", p.corridor_width},
                         {"rooms", p.num_rooms},
                         {"bottleneck", p.has_bottleneck},
                         {"obstacles", p.has_obstacles},
                         {"exits", fp.exit_zones.size()},
                         {"layouts", layout_count(fp)}});
    }
    write_text(dir / "geometries.json", index.dump(2) + "\n");
    echo_config(dir / "config.json", "gen", {{"out", o.out}, {"geometries", ids}});
    out << fmt::format("wrote {} geometries to {}\n", ids.size(), dir.string());
}

void cmd_sim(const SimOpts& o, std::ostream& out) {
    const Scenario s = pick_scenario(o.pick);
    const SimResult r = run(s);
    const fs::path dir(o.out);
    fs::create_directories(dir);
    {
        std::ofstream csv(dir / "trajectory.csv", std::ios::binary);
        write_trajectory_csv(csv, r.trajectory);
        if (!csv) throw IoError("cannot write trajectory.csv");
    }
    write_text(dir / "scenario.xml", export_scenario_xml(s));
    const json result = {{"tet", r.tet},
                         {"seed", r.seed},
                         {"scenario_hash", r.scenario_hash},
                         {"agents", r.arrivals.size()},
                         {"arrivals", r.arrivals}};
    write_text(dir / "result.json", result.dump(2) + "\n");
    echo_config(dir / "config.json", "sim", {{"out", o.out}, {"pick", pick_json(o.pick, s)}});
    out << fmt::format("tet {:.4f} s, {} agents\n", r.tet, r.arrivals.size());
}

void write_frame_pngs(const fs::path& dir, const FrameTensor& t) {
    for (int f = 0; f < t.frames; ++f) write_png(dir / fmt::format("frame_{}.png", f), render_frame(t, f));
}

void cmd_frames(const FramesOpts& o, std::ostream& out) {
    const Scenario s = parse_scenario_xml(read_text(o.scenario));
    std::ifstream csv(o.trajectory);
    if (!csv) throw IoError(fmt::format("cannot open {}", o.trajectory));
    const TrajectoryTable tr = read_trajectory_csv(csv);
    const FrameStack stack = build_frames(tr, tr.end_time(), place_on_canvas(s.floorplan));
    const fs::path dir(o.out);
    fs::create_directories(dir);
    write_frames(dir / "frames.evf", stack.tensor);
    if (o.render) write_frame_pngs(dir, stack.tensor);
    echo_config(dir / "config.json", "frames",
                {{"trajectory", o.trajectory}, {"scenario", o.scenario}, {"out", o.out}, {"render", o.render}});
    out << fmt::format("tet {:.4f} s, dt {:.4f} s\n", stack.partition.tet, stack.partition.dt);
}

void cmd_build(const BuildOpts& o, std::ostream& out) {
    DatasetConfig cfg;
    if (o.mode == "custom") {
        if (o.config.empty()) throw CLI::ValidationError("--mode custom needs --config");
        cfg = parse_config_json(read_text(o.config));
    } else if (!o.config.empty()) {
        throw CLI::ValidationError("--config is only valid with --mode custom");
    }
    if (!o.agents.empty()) cfg.sweep.agents = o.agents;
    if (!o.speeds.empty()) cfg.sweep.speeds = o.speeds;
    if (o.seed) cfg.sweep.base_seed = *o.seed;
    if (o.workers) cfg.workers = *o.workers;
    if (o.layouts) cfg.sweep.layouts_per_geometry = *o.layouts;
    if (!o.geometries.empty()) cfg.geometries = o.geometries;
    if (o.mode == "paper") {
        cfg.paper_mode = true;
        cfg.sweep.speed_sigma = 0.26;
    }
    const fs::path dir(o.out);
    fs::create_directories(dir);
    json echo = json::parse(config_json(cfg));
    echo["mode"] = o.mode;
    echo["workers"] = cfg.workers;
    echo["out"] = o.out;
    echo_config(dir / "config.build.json", "dataset build", echo);
    const BuildReport r = build_dataset(cfg, dir);
    out << fmt::format("{} samples: {} simulated, {} reused, {} failed\n", r.manifest.samples.size(), r.simulated,
                       r.skipped, r.failed);
}

json stats_json(const DatasetStats& st) {
    json frames = json::array();
    for (int f = 0; f < kFrames; ++f)
        frames.push_back({{"frame", f}, {"histogram", st.histogram[f]}, {"class0_fraction", st.class0_fraction[f]}});
    json per_geometry = json::object();
    for (const auto& [g, n] : st.per_geometry) per_geometry[std::to_string(g)] = n;
    return {{"samples", st.samples},
            {"failed", st.failed},
            {"frames", frames},
            {"tet", {{"min", st.tet_min}, {"mean", st.tet_mean}, {"max", st.tet_max}}},
            {"per_geometry", per_geometry},
            {"per_split", st.per_split}};
}

void cmd_stats(const StatsOpts& o, std::ostream& out) {
    const fs::path dir(o.dir);
    const Manifest m = read_manifest(dir / "manifest.jsonl");
    const auto st = compute_stats(dir, m);
    const std::string text = stats_json(st).dump(2) + "\n";
    write_text(dir / "stats.json", text);
    echo_config(dir / "config.stats.json", "dataset stats", {{"dir", o.dir}});
    out << text;
}

void cmd_split(const SplitOpts& o, std::ostream& out) {
    if (o.ratios.size() != 3) throw CLI::ValidationError("--ratios takes three values");
    const fs::path dir(o.dir);
    const Manifest m = split(read_manifest(dir / "manifest.jsonl"), {o.ratios[0], o.ratios[1], o.ratios[2]}, o.seed);
    write_manifest(dir / "manifest.jsonl", m);
    echo_config(dir / "config.split.json", "dataset split", {{"dir", o.dir}, {"seed", o.seed}, {"ratios", o.ratios}});
    std::map<std::string, int> counts;
    for (const auto& r : m.samples) ++counts[split_name(r.split)];
    out << fmt::format("train {} val {} test {} unassigned {}\n", counts["train"], counts["val"], counts["test"],
                       counts["none"]);
}

std::vector<const SampleRecord*> select(const Manifest& m, const std::string& split) {
    if (split != "all") parse_split(split);
    std::vector<const SampleRecord*> out;
    for (const auto& r : m.samples)
        if (r.ok && (split == "all" || split_name(r.split) == split)) out.push_back(&r);
    if (out.empty()) throw EmptyList(fmt::format("no usable samples in split '{}'", split));
    return out;
}

// --truth names the dataset directory or its manifest file.
fs::path dataset_dir(const std::string& truth) {
    const fs::path p(truth);
    return fs::is_regular_file(p) ? p.parent_path() : p;
}

Prediction majority_for(const fs::path& dataset, const SampleRecord& r, const FlowConfig& flow) {
    const Scenario s = parse_scenario_xml(read_text(sample_path(dataset, r.id) / "scenario.xml"));
    return baseline_majority(r.id, baseline_flow_tet(s, flow));
}

void cmd_baseline(const BaselineOpts& o, std::ostream& out) {
    const fs::path dataset = dataset_dir(o.truth);
    const Manifest m = read_manifest(dataset / "manifest.jsonl");
    const FlowConfig flow{o.capacity};
    const auto records = select(m, o.split);
    for (const SampleRecord* r : records) write_prediction(o.out, majority_for(dataset, *r, flow));
    echo_config(fs::path(o.out) / "config.json", "baseline",
                {{"truth", o.truth}, {"out", o.out}, {"split", o.split}, {"capacity", o.capacity}});
    out << fmt::format("wrote {} predictions\n", records.size());
}

void cmd_eval(const EvalOpts& o, std::ostream& out) {
    if (o.pred.empty() == o.baseline.empty()) throw CLI::ValidationError("give exactly one of --pred and --baseline");
    const fs::path dataset = dataset_dir(o.truth);
    const Manifest m = read_manifest(dataset / "manifest.jsonl");
    std::vector<Prediction> preds;
    std::vector<Truth> truths;
    for (const SampleRecord* r : select(m, o.split)) {
        truths.push_back({r->id, read_frames(sample_path(dataset, r->id) / "frames.evf"), r->tet});
        preds.push_back(o.pred.empty() ? majority_for(dataset, *r, {}) : read_prediction(o.pred, r->id));
    }
    EvalConfig cfg;
    cfg.weights = {o.alpha, o.beta};
    cfg.lambda = o.lambda;
    const EvalReport report = evaluate(preds, truths, cfg);
    const fs::path dir(o.out);
    fs::create_directories(dir);
    write_text(dir / "report.json", report_json(report, cfg));
    write_png(dir / "confusion.png", render_confusion(report.confusion));
    echo_config(dir / "config.json", "eval",
                {{"truth", o.truth},
                 {"pred", o.pred},
                 {"baseline", o.baseline},
                 {"split", o.split},
                 {"out", o.out},
                 {"alpha", o.alpha},
                 {"beta", o.beta},
                 {"lambda", o.lambda}});
    out << fmt::format("n {} accuracy {:.4f} tversky {:.4f} mae {:.3f} s re {:.4f}\n", report.n_test, report.accuracy,
                       report.tversky, report.mae, report.re);
}

void cmd_render(const RenderOpts& o, std::ostream& out) {
    if (o.frames.empty() && o.report.empty()) throw CLI::ValidationError("give --frames and/or --report");
    const fs::path dir(o.out);
    fs::create_directories(dir);
    if (!o.frames.empty()) write_frame_pngs(dir, read_frames(o.frames));
    if (!o.report.empty()) {
        ConfusionMatrix m;
        try {
            const json j = json::parse(read_text(o.report));
            const auto& rows = j.at("confusion").at("counts");
            for (int r = 0; r < kClasses; ++r)
                for (int c = 0; c < kClasses; ++c) m.counts[r][c] = rows.at(r).at(c).get<std::uint64_t>();
        } catch (const json::exception& e) {
            throw FormatError(fmt::format("report: {}", e.what()));
        }
        write_png(dir / "confusion.png", render_confusion(m));
    }
    echo_config(dir / "config.json", "render", {{"frames", o.frames}, {"report", o.report}, {"out", o.out}});
    out << fmt::format("rendered into {}\n", dir.string());
}

void cmd_export(const ExportOpts& o, std::ostream& out) {
    const Scenario s = pick_scenario(o.pick);
    const fs::path path(o.out);
    write_text(path, export_scenario_xml(s));
    echo_config(path.parent_path() / "config.json", "export-xml", {{"out", o.out}, {"pick", pick_json(o.pick, s)}});
    out << fmt::format("wrote {}\n", path.string());
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Evacuation dataset generator and evaluator", "evac"};
    app.require_subcommand(1);

    GenOpts gen;
    auto* c_gen = app.add_subcommand("gen", "Write every floorplan as text and PNG");
    c_gen->add_option("--out", gen.out, "Output directory")->required();
    c_gen->add_option("--geometries", gen.geometries, "Geometry ids (default: all 36)");

    SimOpts sim;
    auto* c_sim = app.add_subcommand("sim", "Simulate one scenario");
    add_pick_options(c_sim, sim.pick);
    c_sim->add_option("--out", sim.out, "Output directory")->required();

    FramesOpts frames;
    auto* c_frames = app.add_subcommand("frames", "Turn a trajectory into a frame stack");
    c_frames->add_option("--trajectory", frames.trajectory, "Trajectory CSV")->required();
    c_frames->add_option("--scenario", frames.scenario, "Scenario XML the trajectory belongs to")->required();
    c_frames->add_option("--out", frames.out, "Output directory")->required();
    c_frames->add_flag("--render", frames.render, "Also write one PNG per frame");

    auto* c_dataset = app.add_subcommand("dataset", "Build, inspect and split datasets");
    c_dataset->require_subcommand(1);
    BuildOpts build;
    auto* c_build = c_dataset->add_subcommand("build", "Run the sweep");
    c_build->add_option("--out", build.out, "Dataset directory")->required();
    c_build->add_option("--mode", build.mode, "paper or custom")->check(CLI::IsMember({"paper", "custom"}));
    c_build->add_option("--config", build.config, "Sweep config JSON (custom mode)");
    c_build->add_option("--agents", build.agents, "Agents per origin");
    c_build->add_option("--speeds", build.speeds, "Mean speeds (m/s)");
    c_build->add_option("--seed", build.seed, "Base seed");
    c_build->add_option("--workers", build.workers, "Worker threads")->check(CLI::PositiveNumber);
    c_build->add_option("--layouts", build.layouts, "Origin/destination layouts per geometry")
        ->check(CLI::PositiveNumber);
    c_build->add_option("--geometries", build.geometries, "Geometry ids (default: all 36)");
    StatsOpts stats;
    auto* c_stats = c_dataset->add_subcommand("stats", "Class and tet statistics");
    c_stats->add_option("--dir", stats.dir, "Dataset directory")->required();
    SplitOpts splitopts;
    auto* c_split = c_dataset->add_subcommand("split", "Reassign train/val/test");
    c_split->add_option("--dir", splitopts.dir, "Dataset directory")->required();
    c_split->add_option("--seed", splitopts.seed, "Shuffle seed");
    c_split->add_option("--ratios", splitopts.ratios, "Train, val and test fractions")->expected(3);

    EvalOpts ev;
    auto* c_eval = app.add_subcommand("eval", "Score predictions against a dataset");
    c_eval->add_option("--truth", ev.truth, "Dataset directory or its manifest")->required();
    c_eval->add_option("--pred", ev.pred, "Prediction directory");
    c_eval->add_option("--baseline", ev.baseline, "Built-in predictor")->check(CLI::IsMember({"majority"}));
    c_eval->add_option("--split", ev.split, "train, val, test or all");
    c_eval->add_option("--out", ev.out, "Report directory")->required();
    c_eval->add_option("--alpha", ev.alpha, "Tversky false-positive weight")->check(CLI::NonNegativeNumber);
    c_eval->add_option("--beta", ev.beta, "Tversky false-negative weight")->check(CLI::NonNegativeNumber);
    c_eval->add_option("--lambda", ev.lambda, "Weight of the Tversky term")->check(CLI::NonNegativeNumber);

    BaselineOpts base;
    auto* c_base = app.add_subcommand("baseline", "Write majority-class predictions with a flow tet estimate");
    c_base->add_option("--truth", base.truth, "Dataset directory or its manifest")->required();
    c_base->add_option("--out", base.out, "Prediction directory")->required();
    c_base->add_option("--split", base.split, "train, val, test or all");
    c_base->add_option("--capacity", base.capacity, "Exit flow (persons per m per s)")->check(CLI::PositiveNumber);

    RenderOpts render;
    auto* c_render = app.add_subcommand("render", "Draw frame heat maps or a confusion matrix");
    c_render->add_option("--frames", render.frames, "Frame tensor (.evf)");
    c_render->add_option("--report", render.report, "Evaluation report JSON");
    c_render->add_option("--out", render.out, "Output directory")->required();

    ExportOpts exp;
    auto* c_export = app.add_subcommand("export-xml", "Write a scenario as XML");
    add_pick_options(c_export, exp.pick);
    c_export->add_option("--out", exp.out, "Output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (c_gen->parsed()) cmd_gen(gen, out);
        else if (c_sim->parsed()) cmd_sim(sim, out);
        else if (c_frames->parsed()) cmd_frames(frames, out);
        else if (c_build->parsed()) cmd_build(build, out);
        else if (c_stats->parsed()) cmd_stats(stats, out);
        else if (c_split->parsed()) cmd_split(splitopts, out);
        else if (c_eval->parsed()) cmd_eval(ev, out);
        else if (c_base->parsed()) cmd_baseline(base, out);
        else if (c_render->parsed()) cmd_render(render, out);
        else if (c_export->parsed()) cmd_export(exp, out);
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error (" << e.kind() << "): " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}

}  // namespace evac
