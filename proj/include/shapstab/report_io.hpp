#pragma once

#include <filesystem>
#include <string>

#include "shapstab/simulation.hpp"

namespace shapstab {

// JSON document: master seed, simulation count, variable names, then one
// block per background size with variance sums, both pairwise metrics,
// per-simulation seeds and rankings (as variable-name arrays). Full numeric
// precision; byte-stable for identical reports.
void write_report(const StabilityReport& report, const std::filesystem::path& path);
StabilityReport read_report(const std::filesystem::path& path);

// Presentation tables at 6 significant digits: per-variable variance sums by
// size, then the two quartile metric tables with columns
// m, Average, Quartile 1..4.
std::string render_tables_csv(const StabilityReport& report);
std::string render_tables_markdown(const StabilityReport& report);

}  // namespace shapstab
