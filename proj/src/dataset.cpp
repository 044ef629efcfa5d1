#include "evac/dataset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "evac/errors.hpp"
#include "evac/hash.hpp"
#include "evac/random.hpp"
#include "evac/raster.hpp"

namespace evac {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kImage = "image.png";
constexpr const char* kXml = "scenario.xml";
constexpr const char* kTrajectory = "trajectory.csv";
constexpr const char* kFramesFile = "frames.evf";
constexpr const char* kMeta = "meta.json";
constexpr const char* kManifest = "manifest.jsonl";

fs::path sample_dir(const fs::path& root, const std::string& id) { return root / "samples" / id; }

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open {}", p.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size())))
        throw IoError(fmt::format("cannot write {}", p.string()));
}

json engine_json(const EngineConfig& e) {
    return {{"stride_factor", e.stride_factor},
            {"stride_min", e.stride_min},
            {"stride_max", e.stride_max},
            {"agent_repulsion", e.agent_repulsion},
            {"agent_repulsion_range", e.agent_repulsion_range},
            {"agent_repulsion_cutoff", e.agent_repulsion_cutoff},
            {"wall_repulsion", e.wall_repulsion},
            {"wall_repulsion_range", e.wall_repulsion_range},
            {"wall_repulsion_cutoff", e.wall_repulsion_cutoff},
            {"min_speed", e.min_speed},
            {"radius_min", e.radius_min},
            {"radius_max", e.radius_max},
            {"t_max", e.t_max},
            {"max_placement_attempts", e.max_placement_attempts},
            {"nav_resolution", e.nav_resolution},
            {"nav_inflation", e.nav_inflation}};
}

EngineConfig engine_from_json(const json& j) {
    EngineConfig e;
    e.stride_factor = j.value("stride_factor", e.stride_factor);
    e.stride_min = j.value("stride_min", e.stride_min);
    e.stride_max = j.value("stride_max", e.stride_max);
    e.agent_repulsion = j.value("agent_repulsion", e.agent_repulsion);
    e.agent_repulsion_range = j.value("agent_repulsion_range", e.agent_repulsion_range);
    e.agent_repulsion_cutoff = j.value("agent_repulsion_cutoff", e.agent_repulsion_cutoff);
    e.wall_repulsion = j.value("wall_repulsion", e.wall_repulsion);
    e.wall_repulsion_range = j.value("wall_repulsion_range", e.wall_repulsion_range);
    e.wall_repulsion_cutoff = j.value("wall_repulsion_cutoff", e.wall_repulsion_cutoff);
    e.min_speed = j.value("min_speed", e.min_speed);
    e.radius_min = j.value("radius_min", e.radius_min);
    e.radius_max = j.value("radius_max", e.radius_max);
    e.t_max = j.value("t_max", e.t_max);
    e.max_placement_attempts = j.value("max_placement_attempts", e.max_placement_attempts);
    e.nav_resolution = j.value("nav_resolution", e.nav_resolution);
    e.nav_inflation = j.value("nav_inflation", e.nav_inflation);
    return e;
}

json record_json(const SampleRecord& r) {
    json j = {{"id", r.id},
              {"geometry", r.geometry},
              {"scenario", r.scenario},
              {"seed", r.seed},
              {"params", r.params},
              {"status", r.ok ? "ok" : "failed"},
              {"input_hash", r.input_hash},
              {"files", r.files}};
    j["tet"] = r.ok ? json(r.tet) : json(nullptr);
    if (!r.ok) j["error"] = {{"kind", r.error_kind}, {"message", r.error_message}};
    return j;
}

SampleRecord record_from_json(const json& j) {
    SampleRecord r;
    r.id = j.at("id").get<std::string>();
    r.geometry = j.at("geometry").get<int>();
    r.scenario = j.at("scenario").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.params = j.at("params").get<ParamsVector>();
    r.ok = j.at("status").get<std::string>() == "ok";
    r.input_hash = j.at("input_hash").get<std::string>();
    r.files = j.at("files").get<std::map<std::string, std::string>>();
    if (r.ok) r.tet = j.at("tet").get<double>();
    if (j.contains("error")) {
        r.error_kind = j["error"].at("kind").get<std::string>();
        r.error_message = j["error"].at("message").get<std::string>();
    }
    if (j.contains("split")) r.split = parse_split(j["split"].get<std::string>());
    return r;
}

std::string input_hash(const SweepEntry& e, const DatasetConfig& config) {
    std::string text = fmt::format("evac-sample 1\ngeometry {}\nscenario {}\npaper {}\nengine {}\n", e.geometry,
                                   e.scenario, config.paper_mode, engine_json(config.engine).dump());
    text += canonical_text(e.spec);
    return sha256_hex(text);
}

// Files recorded in meta still present and unchanged.
std::optional<SampleRecord> reusable(const fs::path& dir, const std::string& hash) {
    const fs::path meta = dir / kMeta;
    if (!fs::exists(meta)) return std::nullopt;
    SampleRecord rec;
    try {
        rec = record_from_json(json::parse(read_text(meta)));
    } catch (const json::exception&) {
        return std::nullopt;
    }
    if (rec.input_hash != hash) return std::nullopt;
    for (const auto& [name, sha] : rec.files)
        if (!fs::exists(dir / name) || sha256_file(dir / name) != sha) return std::nullopt;
    return rec;
}

struct Outcome {
    SampleRecord record;
    bool skipped = false;
};

Outcome build_sample(const SweepEntry& e, const DatasetConfig& config, const fs::path& root) {
    Outcome out;
    SampleRecord& rec = out.record;
    rec.id = sample_id(e.geometry, e.scenario);
    rec.geometry = e.geometry;
    rec.scenario = e.scenario;
    rec.seed = e.spec.seed;
    rec.params = params_vector(e.spec);
    rec.input_hash = input_hash(e, config);

    const fs::path dir = sample_dir(root, rec.id);
    if (auto prev = reusable(dir, rec.input_hash)) {
        out.record = *prev;
        out.skipped = true;
        return out;
    }
    fs::create_directories(dir);
    for (const char* name : {kImage, kXml, kTrajectory, kFramesFile, kMeta}) fs::remove(dir / name);

    json extra = json::object();
    try {
        validate_scenario(e.spec, config.paper_mode);
        const SimResult res = run(e.spec, config.engine);
        const FloorImage img = rasterize(e.spec.floorplan, e.spec);
        const FrameStack stack = build_frames(res, img.placement);

        write_png(dir / kImage, img.pixels);
        write_text(dir / kXml, export_scenario_xml(e.spec));
        {
            std::ofstream csv(dir / kTrajectory, std::ios::binary);
            write_trajectory_csv(csv, res.trajectory);
            if (!csv) throw IoError(fmt::format("cannot write {}", (dir / kTrajectory).string()));
        }
        write_frames(dir / kFramesFile, stack.tensor);
        for (const char* name : {kImage, kXml, kTrajectory, kFramesFile}) rec.files[name] = sha256_file(dir / name);
        rec.tet = res.tet;
        rec.ok = true;
        extra = {{"scenario_hash", res.scenario_hash}, {"dt", stack.partition.dt}, {"agents", res.arrivals.size()}};
    } catch (const IoError&) {
        throw;
    } catch (const Error& err) {
        rec.ok = false;
        rec.error_kind = err.kind();
        rec.error_message = err.what();
        rec.files.clear();
    }
    json meta = record_json(rec);
    meta.update(extra);
    write_text(dir / kMeta, meta.dump(2) + "\n");
    return out;
}

}  // namespace

std::string split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
        case Split::None: break;
    }
    return "none";
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    if (s == "none") return Split::None;
    throw FormatError(fmt::format("unknown split '{}'", s));
}

ParamsVector params_vector(const Scenario& s) {
    const double per_origin = s.origins.empty() ? 0.0 : s.origins.front().agent_count;
    return {static_cast<double>(s.origins.size()), static_cast<double>(s.destinations.size()), per_origin,
            s.mean_speed, s.floorplan.site_length, s.floorplan.site_width};
}

std::vector<int> DatasetConfig::geometry_ids() const {
    if (!geometries.empty()) return geometries;
    std::vector<int> ids(enumerate_all_versions().size());
    for (std::size_t k = 0; k < ids.size(); ++k) ids[k] = static_cast<int>(k);
    return ids;
}

std::string config_json(const DatasetConfig& c) {
    json j = {{"agents", c.sweep.agents},
              {"speeds", c.sweep.speeds},
              {"speed_sigma", c.sweep.speed_sigma},
              {"seed", c.sweep.base_seed},
              {"geometries", c.geometry_ids()},
              {"paper_mode", c.paper_mode},
              {"ratios", c.ratios},
              {"engine", engine_json(c.engine)}};
    j["layouts_per_geometry"] = c.sweep.layouts_per_geometry ? json(*c.sweep.layouts_per_geometry) : json(nullptr);
    return j.dump();
}

DatasetConfig parse_config_json(const std::string& text) {
    DatasetConfig c;
    try {
        const json j = json::parse(text);
        c.sweep.agents = j.value("agents", c.sweep.agents);
        c.sweep.speeds = j.value("speeds", c.sweep.speeds);
        c.sweep.speed_sigma = j.value("speed_sigma", c.sweep.speed_sigma);
        c.sweep.base_seed = j.value("seed", c.sweep.base_seed);
        c.geometries = j.value("geometries", c.geometries);
        c.paper_mode = j.value("paper_mode", c.paper_mode);
        c.ratios = j.value("ratios", c.ratios);
        c.workers = j.value("workers", c.workers);
        if (j.contains("engine")) c.engine = engine_from_json(j["engine"]);
        if (j.contains("layouts_per_geometry") && !j["layouts_per_geometry"].is_null())
            c.sweep.layouts_per_geometry = j["layouts_per_geometry"].get<int>();
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("config: {}", e.what()));
    }
    return c;
}

std::string sample_id(int geometry, int scenario) { return fmt::format("g{:02}_s{:04}", geometry, scenario); }

fs::path sample_path(const fs::path& dataset, const std::string& id) { return sample_dir(dataset, id); }

void write_manifest(std::ostream& os, const Manifest& m) {
    const json header = {{"schema", "evac-manifest"},
                         {"version", m.version},
                         {"config_hash", m.config_hash},
                         {"base_seed", m.base_seed},
                         {"samples", m.samples.size()}};
    os << header.dump() << '\n';
    for (const SampleRecord& r : m.samples) {
        json j = record_json(r);
        j["split"] = split_name(r.split);
        os << j.dump() << '\n';
    }
    if (!os) throw IoError("manifest: write failed");
}

Manifest read_manifest(std::istream& is) {
    Manifest m;
    std::string line;
    try {
        if (!std::getline(is, line)) throw FormatError("manifest: empty");
        const json header = json::parse(line);
        if (header.value("schema", "") != "evac-manifest") throw FormatError("manifest: not a manifest header");
        m.version = header.at("version").get<int>();
        if (m.version != kManifestVersion) throw FormatError(fmt::format("manifest: unsupported version {}", m.version));
        m.config_hash = header.at("config_hash").get<std::string>();
        m.base_seed = header.at("base_seed").get<std::uint64_t>();
        while (std::getline(is, line))
            if (!line.empty()) m.samples.push_back(record_from_json(json::parse(line)));
        if (header.contains("samples") && header["samples"].get<std::size_t>() != m.samples.size())
            throw FormatError("manifest: record count does not match header");
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("manifest: {}", e.what()));
    }
    return m;
}

void write_manifest(const fs::path& path, const Manifest& m) {
    std::ostringstream os;
    write_manifest(os, m);
    write_text(path, os.str());
}

Manifest read_manifest(const fs::path& path) {
    std::istringstream is(read_text(path));
    return read_manifest(is);
}

std::vector<SweepEntry> enumerate_sweep(const DatasetConfig& config) {
    const auto versions = enumerate_all_versions();
    std::vector<SweepEntry> out;
    for (int g : config.geometry_ids()) {
        if (g < 0 || g >= static_cast<int>(versions.size()))
            throw OutOfRange(fmt::format("geometry id {} not in [0, {})", g, versions.size()));
        const Floorplan fp = build_floorplan(versions[g]);
        SweepConfig sweep = config.sweep;
        sweep.base_seed = derive_seed(config.sweep.base_seed, static_cast<std::uint64_t>(g));
        const auto scenarios = enumerate_scenarios(fp, sweep);
        for (std::size_t k = 0; k < scenarios.size(); ++k) out.push_back({g, static_cast<int>(k), scenarios[k]});
    }
    return out;
}

BuildReport build_dataset(const DatasetConfig& config, const fs::path& out) {
    fs::create_directories(out / "samples");
    const auto entries = enumerate_sweep(config);

    std::vector<Outcome> outcomes(entries.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t k = next++; k < entries.size(); k = next++) {
            try {
                outcomes[k] = build_sample(entries[k], config, out);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = entries.size();
            }
        }
    };
    int workers = config.workers > 0 ? config.workers : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, std::max(1, static_cast<int>(entries.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    BuildReport report;
    Manifest& m = report.manifest;
    m.config_hash = sha256_hex(config_json(config));
    m.base_seed = config.sweep.base_seed;
    for (const Outcome& o : outcomes) {
        m.samples.push_back(o.record);
        if (o.skipped) ++report.skipped;
        else ++report.simulated;
        if (!o.record.ok) ++report.failed;
    }
    const auto usable = std::count_if(m.samples.begin(), m.samples.end(), [](const auto& r) { return r.ok; });
    if (usable >= 10) m = split(std::move(m), config.ratios, config.sweep.base_seed);
    write_manifest(out / kManifest, m);
    return report;
}

Manifest split(Manifest m, const std::array<double, 3>& ratios, std::uint64_t seed) {
    for (double r : ratios)
        if (!(r >= 0.0)) throw InvalidScenario("split ratios must be non-negative");
    const double total = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(total - 1.0) > 1e-9) throw InvalidScenario(fmt::format("split ratios sum to {}, not 1", total));

    std::map<int, std::vector<std::size_t>> by_geometry;
    std::size_t n = 0;
    for (std::size_t k = 0; k < m.samples.size(); ++k) {
        m.samples[k].split = Split::None;
        if (!m.samples[k].ok) continue;
        by_geometry[m.samples[k].geometry].push_back(k);
        ++n;
    }
    if (n < 10) throw TooFewSamples(fmt::format("need at least 10 usable samples to split, have {}", n));

    const long n_val = std::lround(ratios[1] * static_cast<double>(n));
    const long n_test = std::lround(ratios[2] * static_cast<double>(n));
    std::map<Split, long> quota{{Split::Train, static_cast<long>(n) - n_val - n_test},
                                {Split::Val, n_val},
                                {Split::Test, n_test}};

    Rng rng = make_rng(seed, 0x5117ull);
    for (auto& [g, idx] : by_geometry) std::shuffle(idx.begin(), idx.end(), rng);

    std::map<int, std::size_t> used;
    for (Split s : {Split::Train, Split::Val, Split::Test})
        for (auto& [g, idx] : by_geometry)
            if (quota[s] > 0 && used[g] < idx.size()) {
                m.samples[idx[used[g]++]].split = s;
                --quota[s];
            }
    std::vector<std::size_t> rest;
    for (auto& [g, idx] : by_geometry) rest.insert(rest.end(), idx.begin() + used[g], idx.end());
    std::sort(rest.begin(), rest.end());
    std::shuffle(rest.begin(), rest.end(), rng);
    std::size_t k = 0;
    for (Split s : {Split::Val, Split::Test, Split::Train})
        for (; quota[s] > 0 && k < rest.size(); --quota[s]) m.samples[rest[k++]].split = s;
    return m;
}

std::vector<std::string> verify_dataset(const fs::path& dir, const Manifest& m) {
    std::vector<std::string> problems;
    std::set<std::string> ids;
    for (const SampleRecord& r : m.samples) {
        if (!ids.insert(r.id).second) problems.push_back(fmt::format("{}: duplicate id", r.id));
        if (!r.ok) continue;
        const fs::path sd = sample_dir(dir, r.id);
        bool files_ok = true;
        for (const char* name : {kImage, kXml, kTrajectory, kFramesFile}) {
            const auto it = r.files.find(name);
            if (it == r.files.end()) {
                problems.push_back(fmt::format("{}: no hash recorded for {}", r.id, name));
                files_ok = false;
            } else if (!fs::exists(sd / name)) {
                problems.push_back(fmt::format("{}: missing {}", r.id, name));
                files_ok = false;
            } else if (sha256_file(sd / name) != it->second) {
                problems.push_back(fmt::format("{}: {} does not match its hash", r.id, name));
                files_ok = false;
            }
        }
        if (!files_ok) continue;
        try {
            const Scenario s = parse_scenario_xml(read_text(sd / kXml));
            if (params_vector(s) != r.params) problems.push_back(fmt::format("{}: params differ from scenario", r.id));
            if (s.seed != r.seed) problems.push_back(fmt::format("{}: seed differs from scenario", r.id));
            const FrameTensor t = read_frames(sd / kFramesFile);
            if (t.frames != kFrames || t.height != kGrid.cells || t.width != kGrid.cells)
                problems.push_back(fmt::format("{}: frames have shape {}x{}x{}", r.id, t.frames, t.height, t.width));
            const Image img = read_png(sd / kImage);
            if (img.width != kCanvasPx || img.height != kCanvasPx)
                problems.push_back(fmt::format("{}: image is {}x{}", r.id, img.width, img.height));
            std::ifstream csv(sd / kTrajectory);
            const TrajectoryTable tr = read_trajectory_csv(csv);
            if (std::abs(tr.end_time() - r.tet) > 1e-4) problems.push_back(fmt::format("{}: tet mismatch", r.id));
        } catch (const Error& e) {
            problems.push_back(fmt::format("{}: {}", r.id, e.what()));
        }
    }
    return problems;
}

SampleData load_sample(const fs::path& dir, const SampleRecord& rec) {
    if (!rec.ok) throw InvalidScenario(fmt::format("sample {} failed to build", rec.id));
    const fs::path sd = sample_dir(dir, rec.id);
    SampleData s;
    s.image = read_png(sd / kImage);
    s.frames = read_frames(sd / kFramesFile);
    s.params = rec.params;
    s.tet = rec.tet;
    return s;
}

namespace {

void add_frames(DatasetStats& st, const FrameTensor& t) {
    const std::size_t plane = static_cast<std::size_t>(t.height) * t.width;
    for (int f = 0; f < std::min(t.frames, kFrames); ++f)
        for (std::size_t c = 0; c < plane; ++c) ++st.histogram[f][t.classes[f * plane + c]];
    ++st.samples;
}

void finish(DatasetStats& st, const std::vector<double>& tets) {
    for (int f = 0; f < kFrames; ++f) {
        std::uint64_t total = 0;
        for (auto v : st.histogram[f]) total += v;
        st.class0_fraction[f] = total ? static_cast<double>(st.histogram[f][0]) / static_cast<double>(total) : 0.0;
    }
    if (!tets.empty()) {
        st.tet_min = *std::min_element(tets.begin(), tets.end());
        st.tet_max = *std::max_element(tets.begin(), tets.end());
        double sum = 0.0;
        for (double t : tets) sum += t;
        st.tet_mean = sum / static_cast<double>(tets.size());
    }
}

}  // namespace

DatasetStats compute_stats(const std::vector<FrameTensor>& frames, const std::vector<double>& tets) {
    DatasetStats st;
    for (const FrameTensor& t : frames) add_frames(st, t);
    finish(st, tets);
    return st;
}

DatasetStats compute_stats(const fs::path& dir, const Manifest& m) {
    if (m.samples.empty()) throw EmptyList("manifest has no samples");
    DatasetStats st;
    std::vector<double> tets;
    for (const SampleRecord& r : m.samples) {
        if (!r.ok) {
            ++st.failed;
            continue;
        }
        add_frames(st, read_frames(sample_dir(dir, r.id) / kFramesFile));
        tets.push_back(r.tet);
        ++st.per_geometry[r.geometry];
        ++st.per_split[split_name(r.split)];
    }
    finish(st, tets);
    return st;
}

}  // namespace evac
