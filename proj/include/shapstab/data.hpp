#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace shapstab {

using Matrix = std::vector<std::vector<double>>;

// Named numeric feature columns with one row per instance and optional
// binary labels.
struct DataTable {
    std::vector<std::string> column_names;
    Matrix rows;
    std::optional<std::vector<int>> labels;  // values in {0, 1}

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_vars() const { return column_names.size(); }
};

struct SplitSpec {
    double train_fraction = 0.7;  // strictly inside (0, 1)
    std::uint64_t seed = 0;
};

// Rejects ragged rows, non-finite cells, duplicate or empty column names,
// label lists of the wrong length, and labels outside {0, 1}.
void validate_table(const DataTable& table);

// The logistic ground truth behind generate_synthetic: a sparse coefficient
// vector (alternating signs, decaying magnitudes) and an intercept placing
// label prevalence near 0.1.
struct SyntheticModel {
    std::vector<double> coefficients;
    double intercept = 0.0;
};
SyntheticModel synthetic_ground_truth(std::size_t n_vars);

// Standard-normal features, Bernoulli labels from the logistic ground truth.
// Pure function of its arguments. When n_vars is 21 the columns carry the
// vital-sign and lab names used throughout the docs; otherwise var1..varN.
DataTable generate_synthetic(std::size_t n_rows, std::size_t n_vars, std::uint64_t seed);

// Disjoint row partition: (train, explanation). The train part holds
// round-half-up(train_fraction * N) rows; both parts keep the original row
// order and column names.
std::pair<DataTable, DataTable> split(const DataTable& table, const SplitSpec& spec);

// Comma-delimited, '.' decimal separator, '\n' line endings, header row
// required. A column named "label" is read into DataTable::labels.
DataTable read_csv(const std::filesystem::path& path);
void write_csv(const DataTable& table, const std::filesystem::path& path);

}  // namespace shapstab
