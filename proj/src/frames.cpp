#include "evac/frames.hpp"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "evac/errors.hpp"

namespace evac {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'F', '1'};
constexpr std::uint32_t kMaxDim = 1u << 16;

void put_u32(std::ostream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError("frames: truncated header");
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

int FramePartition::frame_of(double t) const {
    if (!(t >= 0.0 && t <= tet)) throw OutOfRange(fmt::format("time {} outside [0, {}]", t, tet));
    int k = std::clamp(static_cast<int>(t / dt), 0, kFrames - 1);
    while (k > 0 && t < intervals[k].begin) --k;
    while (k < kFrames - 1 && !intervals[k].contains(t)) ++k;
    return k;
}

FramePartition partition_time(double tet) {
    if (!(tet > 0.0) || !std::isfinite(tet)) throw NonPositiveTET(fmt::format("tet must be positive, got {}", tet));
    FramePartition p;
    p.tet = tet;
    p.dt = tet / kFrames;
    for (int k = 0; k < kFrames; ++k) p.intervals[k] = {k * p.dt, (k + 1) * p.dt, false};
    p.intervals[kFrames - 1].end = tet;
    p.intervals[kFrames - 1].closed = true;
    return p;
}

int classify(double rate) {
    if (std::isnan(rate) || rate < 0.0) throw NegativeRate(fmt::format("rate must be non-negative, got {}", rate));
    if (rate == 0.0) return 0;
    if (rate <= 0.4) return 1;
    if (rate <= 0.8) return 2;
    return 3;
}

std::vector<std::uint32_t> count_cell_visits(const AgentTracks& tracks, const Interval& interval,
                                             const CanvasPlacement& placement, const GridSpec& grid,
                                             double sample_interval) {
    const std::size_t ncells = static_cast<std::size_t>(grid.cells) * grid.cells;
    std::vector<std::uint32_t> counts(ncells, 0);
    std::vector<int> stamp(ncells, -1);

    std::vector<double> times;
    for (int k = 0;; ++k) {
        const double t = interval.begin + k * sample_interval;
        if (t >= interval.end) break;
        times.push_back(t);
    }
    if (interval.closed) times.push_back(interval.end);

    for (int a = 0; a < tracks.agent_count(); ++a) {
        const double arrival = tracks.arrival(a);
        auto visit = [&](double t) {
            const Vec2 p = tracks.position(a, t);
            const auto [cx, cy] = cell_of(p.x, p.y, placement, grid);
            const std::size_t c = static_cast<std::size_t>(cy) * grid.cells + cx;
            if (stamp[c] != a) {
                stamp[c] = a;
                ++counts[c];
            }
        };
        for (double t : times) {
            if (t > arrival) break;
            visit(t);
        }
        if (interval.contains(arrival)) visit(arrival);
    }
    return counts;
}

FrameTensor::FrameTensor(int f, int h, int w) : frames(f), height(h), width(w), classes(size(), 0), rates(size(), 0.0f) {}

float stored_rate(std::uint32_t count, double dt) {
    const double exact = count / dt;
    const int cls = classify(exact);
    float r = static_cast<float>(exact);
    while (classify(r) < cls) r = std::nextafter(r, std::numeric_limits<float>::infinity());
    while (classify(r) > cls) r = std::nextafter(r, 0.0f);
    return r;
}

FrameStack build_frames(const TrajectoryTable& trajectory, double tet, const CanvasPlacement& placement,
                        const GridSpec& grid) {
    FrameStack stack;
    stack.partition = partition_time(tet);
    stack.tensor = FrameTensor(kFrames, grid.cells, grid.cells);
    stack.counts.assign(stack.tensor.size(), 0);
    const AgentTracks tracks(trajectory);
    const std::size_t plane = static_cast<std::size_t>(grid.cells) * grid.cells;
    for (int f = 0; f < kFrames; ++f) {
        const auto counts = count_cell_visits(tracks, stack.partition.intervals[f], placement, grid);
        for (std::size_t c = 0; c < plane; ++c) {
            const std::size_t k = f * plane + c;
            stack.counts[k] = counts[c];
            stack.tensor.rates[k] = stored_rate(counts[c], stack.partition.dt);
            stack.tensor.classes[k] = static_cast<std::uint8_t>(classify(counts[c] / stack.partition.dt));
        }
    }
    return stack;
}

FrameStack build_frames(const SimResult& result, const CanvasPlacement& placement, const GridSpec& grid) {
    return build_frames(result.trajectory, result.tet, placement, grid);
}

void write_frames(std::ostream& os, const FrameTensor& t) {
    if (t.classes.size() != t.size() || t.rates.size() != t.size())
        throw ShapeMismatch("frames: tensor buffers do not match their dims");
    os.write(kMagic, 4);
    put_u32(os, static_cast<std::uint32_t>(t.frames));
    put_u32(os, static_cast<std::uint32_t>(t.height));
    put_u32(os, static_cast<std::uint32_t>(t.width));
    os.write(reinterpret_cast<const char*>(t.classes.data()), static_cast<std::streamsize>(t.classes.size()));
    for (float r : t.rates) put_u32(os, std::bit_cast<std::uint32_t>(r));
    if (!os) throw IoError("frames: write failed");
}

FrameTensor read_frames(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw FormatError("frames: bad magic");
    const std::uint32_t f = get_u32(is), h = get_u32(is), w = get_u32(is);
    if (f == 0 || h == 0 || w == 0 || f > kMaxDim || h > kMaxDim || w > kMaxDim)
        throw FormatError(fmt::format("frames: implausible dims {}x{}x{}", f, h, w));
    FrameTensor t(static_cast<int>(f), static_cast<int>(h), static_cast<int>(w));
    if (!is.read(reinterpret_cast<char*>(t.classes.data()), static_cast<std::streamsize>(t.classes.size())))
        throw FormatError("frames: truncated class data");
    for (std::uint8_t c : t.classes)
        if (c > 3) throw FormatError(fmt::format("frames: invalid class {}", int(c)));
    for (float& r : t.rates) r = std::bit_cast<float>(get_u32(is));
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("frames: trailing bytes");
    return t;
}

void write_frames(const std::filesystem::path& path, const FrameTensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError(fmt::format("cannot open {} for writing", path.string()));
    write_frames(os, t);
}

FrameTensor read_frames(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(fmt::format("cannot open {}", path.string()));
    return read_frames(is);
}

Rgb class_color(int cls) {
    switch (cls) {
        case 0: return kWhite;
        case 1: return {255, 255, 0};
        case 2: return {255, 165, 0};
        case 3: return kRed;
    }
    throw OutOfRange(fmt::format("no color for class {}", cls));
}

Image render_frame(const FrameTensor& t, int frame, int cell_px) {
    if (frame < 0 || frame >= t.frames) throw OutOfRange(fmt::format("frame {} of {}", frame, t.frames));
    Image img(t.width * cell_px, t.height * cell_px);
    for (int r = 0; r < t.height; ++r)
        for (int c = 0; c < t.width; ++c)
            img.fill_rect(c * cell_px, r * cell_px, (c + 1) * cell_px, (r + 1) * cell_px,
                          class_color(t.classes[t.index(frame, r, c)]));
    return img;
}

}  // namespace evac
