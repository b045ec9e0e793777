#include "shapstab/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace shapstab {

std::array<std::uint8_t, 3> heatmap_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const auto level = static_cast<std::uint8_t>(std::lround(t * 255.0));
    return {level, level, static_cast<std::uint8_t>(255 - level)};
}

void write_heatmap_ppm(const HeatmapSpec& spec, const std::filesystem::path& path) {
    if (spec.rankings.empty()) {
        throw std::invalid_argument("heatmap needs at least one ranking");
    }
    const std::size_t n_vars = spec.rankings.front().size();
    if (n_vars == 0) {
        throw std::invalid_argument("heatmap needs at least one variable");
    }
    std::vector<std::size_t> position(n_vars);
    std::vector<bool> seen(n_vars);
    std::string pixels;
    pixels.reserve(spec.rankings.size() * n_vars * 3);
    for (const auto& ranking : spec.rankings) {
        if (ranking.size() != n_vars) {
            throw std::invalid_argument("rankings differ in length");
        }
        std::fill(seen.begin(), seen.end(), false);
        for (std::size_t k = 0; k < n_vars; ++k) {
            const std::size_t variable = ranking[k];
            if (variable >= n_vars || seen[variable]) {
                throw std::invalid_argument("heatmap row is not a permutation");
            }
            seen[variable] = true;
            position[variable] = k;
        }
        for (std::size_t v = 0; v < n_vars; ++v) {
            const double t = n_vars == 1
                                 ? 1.0
                                 : 1.0 - static_cast<double>(position[v]) /
                                             static_cast<double>(n_vars - 1);
            const auto rgb = heatmap_color(t);
            pixels.push_back(static_cast<char>(rgb[0]));
            pixels.push_back(static_cast<char>(rgb[1]));
            pixels.push_back(static_cast<char>(rgb[2]));
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    }
    out << "P6\n" << n_vars << ' ' << spec.rankings.size() << "\n255\n";
    out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
    if (!out) {
        throw std::runtime_error("failed writing '" + path.string() + "'");
    }
}

}  // namespace shapstab
