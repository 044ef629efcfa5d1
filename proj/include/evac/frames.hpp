#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "evac/engine.hpp"
#include "evac/image.hpp"
#include "evac/raster.hpp"

namespace evac {

inline constexpr int kFrames = 8;
inline constexpr double kSampleInterval = 0.1;  // s

struct Interval {
    double begin = 0.0;
    double end = 0.0;
    bool closed = false;  // includes `end`

    bool contains(double t) const { return t >= begin && (closed ? t <= end : t < end); }
};

struct FramePartition {
    double tet = 0.0;
    double dt = 0.0;
    std::array<Interval, kFrames> intervals;

    /// Frame holding time t in [0, tet]. Throws OutOfRange.
    int frame_of(double t) const;
};

/// Eight equal intervals over [0, tet], the last one closed. Throws
/// NonPositiveTET.
FramePartition partition_time(double tet);

/// Density class of a per-second rate: 0 for 0, 1 up to 0.4, 2 up to 0.8,
/// 3 above. Throws NegativeRate.
int classify(double rate);

/// Number of distinct agents seen in each grid cell during the interval.
/// Positions are sampled every `sample_interval` seconds from the interval
/// start, plus the closing endpoint and each agent's arrival if they fall
/// inside. Row-major cells x cells.
std::vector<std::uint32_t> count_cell_visits(const AgentTracks& tracks, const Interval& interval,
                                             const CanvasPlacement& placement, const GridSpec& grid = kGrid,
                                             double sample_interval = kSampleInterval);

/// Persisted part of a frame stack: class labels and float32 rates, both
/// frames x height x width, row-major.
struct FrameTensor {
    int frames = kFrames;
    int height = kGrid.cells;
    int width = kGrid.cells;
    std::vector<std::uint8_t> classes;
    std::vector<float> rates;

    FrameTensor() = default;
    FrameTensor(int frames, int height, int width);

    std::size_t size() const { return static_cast<std::size_t>(frames) * height * width; }
    std::size_t index(int f, int row, int col) const {
        return (static_cast<std::size_t>(f) * height + row) * width + col;
    }
    friend bool operator==(const FrameTensor&, const FrameTensor&) = default;
};

struct FrameStack {
    FramePartition partition;
    std::vector<std::uint32_t> counts;  // same layout as tensor
    FrameTensor tensor;
};

/// Stored float rate for a count, adjusted by at most a few ulps so that it
/// classifies like the exact quotient.
float stored_rate(std::uint32_t count, double dt);

FrameStack build_frames(const TrajectoryTable& trajectory, double tet, const CanvasPlacement& placement,
                        const GridSpec& grid = kGrid);
FrameStack build_frames(const SimResult& result, const CanvasPlacement& placement, const GridSpec& grid = kGrid);

/// Binary tensor file: "EVF1", three little-endian uint32 dims, class
/// bytes, then little-endian float32 rates. Throws FormatError / IoError.
void write_frames(std::ostream& os, const FrameTensor& t);
FrameTensor read_frames(std::istream& is);
void write_frames(const std::filesystem::path& path, const FrameTensor& t);
FrameTensor read_frames(const std::filesystem::path& path);

/// Color of a density class: white, yellow, orange, red.
Rgb class_color(int cls);
/// One frame as an image, each cell drawn as cell_px x cell_px pixels.
Image render_frame(const FrameTensor& t, int frame, int cell_px = kGrid.cell_px);

}  // namespace evac
