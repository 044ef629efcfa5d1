#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "evac/engine.hpp"
#include "evac/frames.hpp"
#include "evac/image.hpp"

namespace evac {

inline constexpr int kManifestVersion = 1;

enum class Split { None, Train, Val, Test };
std::string split_name(Split s);
Split parse_split(const std::string& s);

/// (n_origins, n_destinations, agents_per_origin, mean_speed, site_length,
/// site_width) as fed to a model next to the image.
using ParamsVector = std::array<double, 6>;
ParamsVector params_vector(const Scenario& s);

struct DatasetConfig {
    SweepConfig sweep;
    std::vector<int> geometries;  // ids into enumerate_all_versions(); empty = all
    bool paper_mode = true;
    std::array<double, 3> ratios{0.8, 0.1, 0.1};
    int workers = 1;
    EngineConfig engine;

    std::vector<int> geometry_ids() const;
};

/// Resolved configuration as compact JSON; its hash identifies a sweep.
std::string config_json(const DatasetConfig& config);
DatasetConfig parse_config_json(const std::string& text);

struct SampleRecord {
    std::string id;  // g{geometry:02}_s{scenario:04}
    int geometry = 0;
    int scenario = 0;
    std::uint64_t seed = 0;
    ParamsVector params{};
    double tet = 0.0;
    bool ok = false;
    std::string error_kind;
    std::string error_message;
    std::string input_hash;
    std::map<std::string, std::string> files;  // file name -> sha256
    Split split = Split::None;

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

std::string sample_id(int geometry, int scenario);
/// <dataset>/samples/<id>
std::filesystem::path sample_path(const std::filesystem::path& dataset, const std::string& id);

struct Manifest {
    int version = kManifestVersion;
    std::string config_hash;
    std::uint64_t base_seed = 0;
    std::vector<SampleRecord> samples;  // ordered by (geometry, scenario)

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// JSON lines: a header object, then one object per sample.
void write_manifest(std::ostream& os, const Manifest& m);
Manifest read_manifest(std::istream& is);
void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

struct BuildReport {
    Manifest manifest;
    int simulated = 0;
    int skipped = 0;
    int failed = 0;
};

/// Every (geometry, scenario) of the sweep, in manifest order.
struct SweepEntry {
    int geometry = 0;
    int scenario = 0;
    Scenario spec;
};
std::vector<SweepEntry> enumerate_sweep(const DatasetConfig& config);

/// Builds (or completes) a dataset under `out`: samples/<id>/ with
/// image.png, scenario.xml, trajectory.csv, frames.evf and meta.json, then
/// manifest.jsonl. Samples whose meta records the same input hash and
/// whose files still match are not rebuilt. Per-sample domain errors are
/// recorded; I/O errors abort the build.
BuildReport build_dataset(const DatasetConfig& config, const std::filesystem::path& out);

/// Stratified by geometry: each geometry gets a train, val and test sample
/// in turn while those quotas last, the rest are shuffled into the
/// remaining quotas. Failed samples stay unassigned. Throws TooFewSamples
/// below 10 usable samples.
Manifest split(Manifest m, const std::array<double, 3>& ratios, std::uint64_t seed);

/// Returns a list of problems; empty when every record's files exist,
/// hash-match and parse.
std::vector<std::string> verify_dataset(const std::filesystem::path& dir, const Manifest& m);

// --- Augmentation ---------------------------------------------------------

struct AugmentOps {
    bool hflip = false;
    bool vflip = false;
    bool transpose = false;
    bool rot90 = false;

    /// True when the composite exchanges the x and y axes.
    bool swaps_axes() const { return transpose != rot90; }
    friend bool operator==(const AugmentOps&, const AugmentOps&) = default;
};

/// Four independent fair coin flips, in the field order above.
AugmentOps draw_augment(std::mt19937_64& rng, double p = 0.5);

struct SampleData {
    Image image;
    FrameTensor frames;
    ParamsVector params{};
    double tet = 0.0;

    friend bool operator==(const SampleData&, const SampleData&) = default;
};

SampleData load_sample(const std::filesystem::path& dir, const SampleRecord& rec);

// Single ops on square-or-not rasters. hflip mirrors columns, vflip rows,
// rot90 turns a quarter counterclockwise: out(r, c) = in(c, w - 1 - r).
Image hflip(const Image& img);
Image vflip(const Image& img);
Image transpose(const Image& img);
Image rot90(const Image& img);
FrameTensor hflip(const FrameTensor& t);
FrameTensor vflip(const FrameTensor& t);
FrameTensor transpose(const FrameTensor& t);
FrameTensor rot90(const FrameTensor& t);

/// Applies the selected ops in field order to image and every frame, and
/// swaps the site dimensions when the axes swap.
SampleData augment(const SampleData& s, const AugmentOps& ops);
SampleData augment(const SampleData& s, std::mt19937_64& rng);

// --- Scenario XML ----------------------------------------------------------

std::string export_scenario_xml(const Scenario& s);
Scenario parse_scenario_xml(const std::string& xml);

// --- Statistics ------------------------------------------------------------

struct DatasetStats {
    int samples = 0;
    int failed = 0;
    std::array<std::array<std::uint64_t, 4>, kFrames> histogram{};  // [frame][class]
    std::array<double, kFrames> class0_fraction{};
    double tet_min = 0.0;
    double tet_mean = 0.0;
    double tet_max = 0.0;
    std::map<int, int> per_geometry;
    std::map<std::string, int> per_split;
};

/// Statistics over the successful samples; frames are read from `dir`.
DatasetStats compute_stats(const std::filesystem::path& dir, const Manifest& m);
DatasetStats compute_stats(const std::vector<FrameTensor>& frames, const std::vector<double>& tets);

}  // namespace evac
