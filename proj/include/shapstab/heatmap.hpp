#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace shapstab {

// Ranking heatmap: one pixel row per simulation, one column per variable,
// colored by the variable's rank position in that simulation.
struct HeatmapSpec {
    std::vector<std::vector<std::size_t>> rankings;  // each row a permutation
};

// 256-step linear colormap from blue (t = 0) to yellow (t = 1):
// level = round(255 t), rgb = (level, level, 255 - level).
std::array<std::uint8_t, 3> heatmap_color(double t);

// Binary PPM (P6). The most important variable is drawn yellow, the least
// important blue.
void write_heatmap_ppm(const HeatmapSpec& spec, const std::filesystem::path& path);

}  // namespace shapstab
