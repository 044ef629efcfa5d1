#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evac/floorplan.hpp"
#include "evac/frames.hpp"
#include "evac/image.hpp"
#include "evac/navfield.hpp"

namespace evac {

inline constexpr int kClasses = 4;

struct TverskyWeights {
    double alpha = 0.1;  // false positives
    double beta = 0.9;   // false negatives
};

struct OverlapCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    OverlapCounts& operator+=(const OverlapCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    friend bool operator==(const OverlapCounts&, const OverlapCounts&) = default;
};

/// TP / (TP + alpha FP + beta FN), 1 when all three are zero. Throws
/// NegativeWeights.
double tversky_index(const OverlapCounts& c, const TverskyWeights& w = {});
/// Same over membership masks of a common index domain. Throws
/// ShapeMismatch.
double tversky_index(const std::vector<bool>& pred, const std::vector<bool>& truth, const TverskyWeights& w = {});

/// One-vs-rest counts of one class.
OverlapCounts class_overlap(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth, int cls);
/// Counts summed over classes 1-3.
OverlapCounts foreground_overlap(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);

/// 1 - TI of the foreground counts over every frame of the tensors.
double tversky_loss(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth,
                    const TverskyWeights& w = {});

struct Losses {
    double evac = 0.0;     // squared tet error
    double tversky = 0.0;
    double total = 0.0;    // evac + lambda * tversky

    friend bool operator==(const Losses&, const Losses&) = default;
};

Losses total_loss(double tet, double tet_hat, double tversky, double lambda = 1.0);
Losses total_loss(double tet, double tet_hat, std::span<const std::uint8_t> truth, std::span<const std::uint8_t> pred,
                  double lambda = 1.0, const TverskyWeights& w = {});

/// Rows are ground truth, columns predictions.
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kClasses>, kClasses> counts{};

    void add(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);
    ConfusionMatrix& operator+=(const ConfusionMatrix& o);
    std::uint64_t total() const;
    std::uint64_t trace() const;
    std::uint64_t row_sum(int truth_class) const;
    std::uint64_t col_sum(int pred_class) const;
    double accuracy() const;
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws ShapeMismatch.
ConfusionMatrix confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);

struct MaeRe {
    double mae = 0.0;
    double re = 0.0;
};

/// Pairs of (true tet, predicted tet). Throws EmptyList, NonPositiveTruth.
MaeRe mae_re(const std::vector<std::pair<double, double>>& pairs);

struct Prediction {
    std::string id;
    FrameTensor frames;  // only the class labels are read
    double tet_hat = 0.0;
};

/// Files <dir>/<id>.evf and <dir>/<id>.tet.json.
void write_prediction(const std::filesystem::path& dir, const Prediction& p);
Prediction read_prediction(const std::filesystem::path& dir, const std::string& id);

struct FlowConfig {
    double capacity = 1.33;  // persons per meter of exit per second
};

/// Opening of an exit zone: its longest edge lying on the site outline,
/// else the larger side of its bounding box.
double exit_width(const Floorplan& fp, int exit);

/// Slowest origin's walk (geodesic from the room centroid over the mean
/// speed) plus the time to pass every agent through the destination exits
/// at the given capacity.
double baseline_flow_tet(const Scenario& s, const NavField& nav, const FlowConfig& cfg = {});
double baseline_flow_tet(const Scenario& s, const FlowConfig& cfg = {});

/// Every cell class 0.
Prediction baseline_majority(const std::string& id, double tet_hat, int frames = kFrames, int height = kGrid.cells,
                             int width = kGrid.cells);

struct EvalConfig {
    TverskyWeights weights;
    double lambda = 1.0;
};

struct EvalReport {
    ConfusionMatrix confusion;
    std::array<double, kClasses> tversky_per_class{};  // one-vs-rest TI pooled over samples
    double tversky = 0.0;                               // foreground TI pooled over samples
    double mae = 0.0;
    double re = 0.0;
    Losses losses;  // sample means
    int n_test = 0;
    double accuracy = 0.0;
};

struct Truth {
    std::string id;
    FrameTensor frames;
    double tet = 0.0;
};

/// Predictions matched to truths by position. Throws ShapeMismatch,
/// EmptyList.
EvalReport evaluate(const std::vector<Prediction>& preds, const std::vector<Truth>& truths, const EvalConfig& cfg = {});

std::string report_json(const EvalReport& r, const EvalConfig& cfg = {});

/// Row-normalized confusion heat map: one square per entry, white for 0
/// up to dark blue for 1, with 2 px gray separators.
Image render_confusion(const ConfusionMatrix& m, int cell_px = 96);

}  // namespace evac
