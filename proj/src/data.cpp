#include "shapstab/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "shapstab/rng.hpp"
#include "shapstab/text.hpp"

namespace shapstab {

namespace {

constexpr std::array<const char*, 21> kClinicalNames = {
    "temperature",
    "heart rate",
    "age",
    "respiration rate",
    "systolic blood pressure",
    "diastolic blood pressure",
    "mean arterial pressure",
    "spo2",
    "white blood cell count",
    "platelet count",
    "anion gap",
    "glucose",
    "sodium",
    "potassium",
    "lactate",
    "bicarbonate",
    "blood urea nitrogen",
    "creatinine",
    "hemoglobin",
    "chloride",
    "hematocrit",
};

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::vector<std::string> column_names_for(std::size_t n_vars) {
    std::vector<std::string> names;
    names.reserve(n_vars);
    if (n_vars == kClinicalNames.size()) {
        for (const char* name : kClinicalNames) {
            names.emplace_back(name);
        }
    } else {
        for (std::size_t j = 0; j < n_vars; ++j) {
            names.push_back("var" + std::to_string(j + 1));
        }
    }
    return names;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

DataTable take_rows(const DataTable& table, const std::vector<std::size_t>& indices) {
    DataTable part;
    part.column_names = table.column_names;
    part.rows.reserve(indices.size());
    for (std::size_t i : indices) {
        part.rows.push_back(table.rows[i]);
    }
    if (table.labels.has_value()) {
        std::vector<int> labels;
        labels.reserve(indices.size());
        for (std::size_t i : indices) {
            labels.push_back((*table.labels)[i]);
        }
        part.labels = std::move(labels);
    }
    return part;
}

}  // namespace

void validate_table(const DataTable& table) {
    std::unordered_set<std::string> seen;
    for (const std::string& name : table.column_names) {
        if (name.empty()) {
            throw std::invalid_argument("column names must be non-empty");
        }
        if (!seen.insert(name).second) {
            throw std::invalid_argument("duplicate column name '" + name + "'");
        }
    }
    const std::size_t n_vars = table.n_vars();
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (table.rows[i].size() != n_vars) {
            throw std::invalid_argument("row " + std::to_string(i + 1) + " has " +
                                        std::to_string(table.rows[i].size()) + " cells, expected " +
                                        std::to_string(n_vars));
        }
        for (double value : table.rows[i]) {
            if (!std::isfinite(value)) {
                throw std::invalid_argument("row " + std::to_string(i + 1) +
                                            " contains a non-finite value");
            }
        }
    }
    if (table.labels.has_value()) {
        if (table.labels->size() != table.rows.size()) {
            throw std::invalid_argument("label count does not match row count");
        }
        for (int label : *table.labels) {
            if (label != 0 && label != 1) {
                throw std::invalid_argument("labels must be 0 or 1");
            }
        }
    }
}

SyntheticModel synthetic_ground_truth(std::size_t n_vars) {
    constexpr std::array<double, 6> kMagnitudes = {2.0, 1.5, 1.0, 0.8, 0.5, 0.3};
    SyntheticModel model;
    model.coefficients.assign(n_vars, 0.0);
    for (std::size_t k = 0; k < kMagnitudes.size() && k < n_vars; ++k) {
        model.coefficients[k] = (k % 2 == 0) ? kMagnitudes[k] : -kMagnitudes[k];
    }
    model.intercept = -4.5;
    return model;
}

DataTable generate_synthetic(std::size_t n_rows, std::size_t n_vars, std::uint64_t seed) {
    if (n_rows < 1 || n_vars < 1) {
        throw std::invalid_argument("generate_synthetic requires n_rows >= 1 and n_vars >= 1");
    }
    DataTable table;
    table.column_names = column_names_for(n_vars);

    Rng rng(seed);
    table.rows.assign(n_rows, std::vector<double>(n_vars));
    for (auto& row : table.rows) {
        for (double& cell : row) {
            cell = rng.next_normal();
        }
    }

    const SyntheticModel truth = synthetic_ground_truth(n_vars);
    std::vector<int> labels(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) {
        double z = truth.intercept;
        for (std::size_t j = 0; j < n_vars; ++j) {
            z += truth.coefficients[j] * table.rows[i][j];
        }
        labels[i] = rng.next_double() < sigmoid(z) ? 1 : 0;
    }
    table.labels = std::move(labels);
    return table;
}

std::pair<DataTable, DataTable> split(const DataTable& table, const SplitSpec& spec) {
    if (table.n_rows() == 0) {
        throw std::invalid_argument("cannot split an empty table");
    }
    if (!(spec.train_fraction > 0.0) || !(spec.train_fraction < 1.0)) {
        throw std::invalid_argument("train_fraction must lie strictly between 0 and 1");
    }
    const std::size_t n = table.n_rows();
    const auto train_count = static_cast<std::size_t>(
        std::floor(spec.train_fraction * static_cast<double>(n) + 0.5));

    std::vector<std::size_t> permutation(n);
    std::iota(permutation.begin(), permutation.end(), 0);
    Rng rng(spec.seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(permutation[i], permutation[rng.next_index(i + 1)]);
    }

    std::vector<std::size_t> train_indices(permutation.begin(), permutation.begin() + train_count);
    std::vector<std::size_t> explain_indices(permutation.begin() + train_count, permutation.end());
    std::sort(train_indices.begin(), train_indices.end());
    std::sort(explain_indices.begin(), explain_indices.end());
    return {take_rows(table, train_indices), take_rows(table, explain_indices)};
}

DataTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(line);
    }
    if (lines.empty()) {
        throw std::runtime_error(path.string() + ": missing header row");
    }

    const std::vector<std::string> header = split_line(lines.front());
    std::unordered_set<std::string> header_seen;
    for (const std::string& name : header) {
        if (!header_seen.insert(name).second) {
            throw std::runtime_error(path.string() + ": duplicate column name '" + name + "'");
        }
    }
    std::size_t label_column = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "label") {
            label_column = c;
        }
    }
    const bool has_labels = label_column < header.size();

    DataTable table;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != label_column) {
            table.column_names.push_back(header[c]);
        }
    }
    std::vector<int> labels;

    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (r + 1 == lines.size() && lines[r].empty()) {
            break;  // trailing newline
        }
        const std::vector<std::string> cells = split_line(lines[r]);
        if (cells.size() != header.size()) {
            throw std::runtime_error(path.string() + ": row " + std::to_string(r) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
        }
        std::vector<double> row;
        row.reserve(table.column_names.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double value = 0.0;
            try {
                value = parse_double(cells[c]);
            } catch (const std::exception& e) {
                throw std::runtime_error(path.string() + ": row " + std::to_string(r) +
                                         ", column " + std::to_string(c + 1) + ": " + e.what());
            }
            if (c == label_column) {
                if (value != 0.0 && value != 1.0) {
                    throw std::runtime_error(path.string() + ": row " + std::to_string(r) +
                                             ", column " + std::to_string(c + 1) +
                                             ": label must be 0 or 1");
                }
                labels.push_back(value == 1.0 ? 1 : 0);
            } else {
                row.push_back(value);
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (has_labels) {
        table.labels = std::move(labels);
    }
    try {
        validate_table(table);
    } catch (const std::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    return table;
}

void write_csv(const DataTable& table, const std::filesystem::path& path) {
    validate_table(table);
    for (const std::string& name : table.column_names) {
        if (name.find(',') != std::string::npos || name.find('\n') != std::string::npos) {
            throw std::runtime_error("column name '" + name + "' cannot be written as CSV");
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    }
    std::ostringstream text;
    for (std::size_t c = 0; c < table.column_names.size(); ++c) {
        if (c > 0) {
            text << ',';
        }
        text << table.column_names[c];
    }
    if (table.labels.has_value()) {
        text << ",label";
    }
    text << '\n';
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        for (std::size_t c = 0; c < table.rows[i].size(); ++c) {
            if (c > 0) {
                text << ',';
            }
            text << format_full(table.rows[i][c]);
        }
        if (table.labels.has_value()) {
            text << ',' << (*table.labels)[i];
        }
        text << '\n';
    }
    out << text.str();
    if (!out) {
        throw std::runtime_error("failed writing '" + path.string() + "'");
    }
}

}  // namespace shapstab
