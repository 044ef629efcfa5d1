#include <utility>

#include "evac/dataset.hpp"

namespace evac {

namespace {

// Generic remap of a rows x cols raster of `channels`-wide elements. `src`
// maps an output (row, col) to the input (row, col).
template <class T, class F>
std::vector<T> remap(const std::vector<T>& in, int cols, int out_rows, int out_cols, int channels,
                     std::size_t base, F src) {
    std::vector<T> out(static_cast<std::size_t>(out_rows) * out_cols * channels);
    for (int r = 0; r < out_rows; ++r)
        for (int c = 0; c < out_cols; ++c) {
            const auto [sr, sc] = src(r, c);
            const std::size_t from = base + (static_cast<std::size_t>(sr) * cols + sc) * channels;
            const std::size_t to = (static_cast<std::size_t>(r) * out_cols + c) * channels;
            for (int k = 0; k < channels; ++k) out[to + k] = in[from + k];
        }
    return out;
}

enum class Op { HFlip, VFlip, Transpose, Rot90 };

std::pair<int, int> out_dims(Op op, int rows, int cols) {
    return (op == Op::Transpose || op == Op::Rot90) ? std::pair{cols, rows} : std::pair{rows, cols};
}

template <class T>
std::vector<T> apply_plane(Op op, const std::vector<T>& in, int rows, int cols, int channels, std::size_t base) {
    const auto [orow, ocol] = out_dims(op, rows, cols);
    switch (op) {
        case Op::HFlip:
            return remap(in, cols, orow, ocol, channels, base, [&](int r, int c) { return std::pair{r, cols - 1 - c}; });
        case Op::VFlip:
            return remap(in, cols, orow, ocol, channels, base, [&](int r, int c) { return std::pair{rows - 1 - r, c}; });
        case Op::Transpose:
            return remap(in, cols, orow, ocol, channels, base, [](int r, int c) { return std::pair{c, r}; });
        case Op::Rot90:
            return remap(in, cols, orow, ocol, channels, base, [&](int r, int c) { return std::pair{c, cols - 1 - r}; });
    }
    return {};
}

Image apply(Op op, const Image& img) {
    Image out;
    std::tie(out.height, out.width) = out_dims(op, img.height, img.width);
    out.rgb = apply_plane(op, img.rgb, img.height, img.width, 3, 0);
    return out;
}

FrameTensor apply(Op op, const FrameTensor& t) {
    const auto [h, w] = out_dims(op, t.height, t.width);
    FrameTensor out(t.frames, h, w);
    const std::size_t plane = static_cast<std::size_t>(t.height) * t.width;
    for (int f = 0; f < t.frames; ++f) {
        const auto cls = apply_plane(op, t.classes, t.height, t.width, 1, f * plane);
        const auto rates = apply_plane(op, t.rates, t.height, t.width, 1, f * plane);
        std::copy(cls.begin(), cls.end(), out.classes.begin() + f * plane);
        std::copy(rates.begin(), rates.end(), out.rates.begin() + f * plane);
    }
    return out;
}

}  // namespace

Image hflip(const Image& img) { return apply(Op::HFlip, img); }
Image vflip(const Image& img) { return apply(Op::VFlip, img); }
Image transpose(const Image& img) { return apply(Op::Transpose, img); }
Image rot90(const Image& img) { return apply(Op::Rot90, img); }
FrameTensor hflip(const FrameTensor& t) { return apply(Op::HFlip, t); }
FrameTensor vflip(const FrameTensor& t) { return apply(Op::VFlip, t); }
FrameTensor transpose(const FrameTensor& t) { return apply(Op::Transpose, t); }
FrameTensor rot90(const FrameTensor& t) { return apply(Op::Rot90, t); }

AugmentOps draw_augment(std::mt19937_64& rng, double p) {
    std::bernoulli_distribution coin(p);
    AugmentOps ops;
    ops.hflip = coin(rng);
    ops.vflip = coin(rng);
    ops.transpose = coin(rng);
    ops.rot90 = coin(rng);
    return ops;
}

SampleData augment(const SampleData& s, const AugmentOps& ops) {
    SampleData out = s;
    const std::pair<bool, Op> steps[] = {
        {ops.hflip, Op::HFlip}, {ops.vflip, Op::VFlip}, {ops.transpose, Op::Transpose}, {ops.rot90, Op::Rot90}};
    for (const auto& [on, op] : steps) {
        if (!on) continue;
        out.image = apply(op, out.image);
        out.frames = apply(op, out.frames);
    }
    if (ops.swaps_axes()) std::swap(out.params[4], out.params[5]);
    return out;
}

SampleData augment(const SampleData& s, std::mt19937_64& rng) { return augment(s, draw_augment(rng)); }

}  // namespace evac
