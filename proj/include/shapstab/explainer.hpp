#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "shapstab/ann.hpp"
#include "shapstab/data.hpp"

namespace shapstab {

// Rows drawn without replacement from the training table; the mean
// prediction over them is the attribution baseline.
struct BackgroundDataset {
    Matrix rows;                              // m x V
    std::vector<std::size_t> source_indices;  // unique, ascending
    std::uint64_t seed = 0;
};

// Uniform sample of m training rows without replacement, deterministic per
// seed, order-normalized by ascending source index.
BackgroundDataset sample_background(const DataTable& train, std::size_t m, std::uint64_t seed);

struct AttributionResult {
    Matrix shap;                         // N x V
    double background_expectation = 0.0;
    std::vector<double> predictions;     // N
};

// Checks the completeness identity row by row: attributions must sum to
// prediction minus baseline within 1e-6 relative.
void validate_attributions(const AttributionResult& attr);

// Rescale-rule attribution. For every (instance, reference) pair the
// multiplier of each nonlinearity is the secant slope between the two
// pre-activations (the analytic derivative when they are closer than 1e-7),
// and linear layers propagate multipliers through transposed weights. The
// per-reference contributions m_j * (x_j - b_j) are averaged with equal
// weights over the background rows in ascending index order, which keeps the
// output bit-stable across thread counts.
AttributionResult explain_deep(const ModelWeights& model, const DataTable& instances,
                               const BackgroundDataset& bg, int threads = 1);

// Exact interventional Shapley values by full subset enumeration
// (cost 2^V * m forward passes; V must be <= 12). Coalition variables come
// from the instance, the rest from each background row, averaged.
std::vector<double> explain_exact(const ModelWeights& model, std::span<const double> instance,
                                  const BackgroundDataset& bg);

// One row per instance: the per-variable attributions followed by the
// prediction and the shared background expectation.
void write_attributions_csv(const AttributionResult& attr,
                            const std::vector<std::string>& column_names,
                            const std::filesystem::path& path);

}  // namespace shapstab
