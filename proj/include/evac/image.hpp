#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace evac {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kBlack{0, 0, 0};
inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kRed{255, 0, 0};
inline constexpr Rgb kGreen{0, 255, 0};

/// 8-bit RGB raster, row-major, origin at the top-left.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(int w, int h, Rgb fill = kBlack);

    Rgb at(int x, int y) const {
        const std::size_t k = (static_cast<std::size_t>(y) * width + x) * 3;
        return {rgb[k], rgb[k + 1], rgb[k + 2]};
    }
    void set(int x, int y, Rgb c) {
        const std::size_t k = (static_cast<std::size_t>(y) * width + x) * 3;
        rgb[k] = c[0];
        rgb[k + 1] = c[1];
        rgb[k + 2] = c[2];
    }
    void fill_rect(int x0, int y0, int x1, int y1, Rgb c);  // half-open, clipped

    friend bool operator==(const Image&, const Image&) = default;
};

/// PNG, 8-bit RGB, no alpha, no timestamp chunk. Throws IoError.
void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);

}  // namespace evac
