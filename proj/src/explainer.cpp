#include "shapstab/explainer.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "shapstab/rng.hpp"
#include "shapstab/text.hpp"

namespace shapstab {

namespace {

constexpr double kSecantThreshold = 1e-7;

double rescale_multiplier(Activation activation, double pre_x, double pre_ref) {
    const double delta = pre_x - pre_ref;
    if (std::abs(delta) > kSecantThreshold) {
        return (apply_activation(activation, pre_x) - apply_activation(activation, pre_ref)) /
               delta;
    }
    return activation_derivative(activation, pre_x);
}

// Multipliers from the scalar output back to the inputs for one
// (instance, reference) pair, given both forward traces.
void backward_multipliers(const ModelWeights& model,
                          const std::vector<std::vector<double>>& pre_x,
                          const std::vector<std::vector<double>>& pre_ref,
                          std::vector<double>& current, std::vector<double>& previous) {
    current.assign(1, 1.0);
    for (std::size_t l = model.layers.size(); l-- > 0;) {
        const Layer& layer = model.layers[l];
        for (std::size_t u = 0; u < layer.out_dim(); ++u) {
            current[u] *= rescale_multiplier(layer.activation, pre_x[l][u], pre_ref[l][u]);
        }
        previous.assign(layer.in_dim(), 0.0);
        for (std::size_t u = 0; u < layer.out_dim(); ++u) {
            const double m = current[u];
            if (m == 0.0) {
                continue;
            }
            const std::vector<double>& row = layer.weights[u];
            for (std::size_t c = 0; c < layer.in_dim(); ++c) {
                previous[c] += row[c] * m;
            }
        }
        current.swap(previous);
    }
}

void check_explain_dimensions(const ModelWeights& model, std::size_t n_vars,
                              const BackgroundDataset& bg) {
    validate_model(model);
    if (bg.rows.empty()) {
        throw std::invalid_argument("background dataset is empty");
    }
    if (n_vars != model.n_inputs()) {
        throw std::invalid_argument("instances have " + std::to_string(n_vars) +
                                    " variables, model expects " +
                                    std::to_string(model.n_inputs()));
    }
    for (const auto& row : bg.rows) {
        if (row.size() != model.n_inputs()) {
            throw std::invalid_argument("background row width does not match model inputs");
        }
    }
}

}  // namespace

BackgroundDataset sample_background(const DataTable& train, std::size_t m, std::uint64_t seed) {
    const std::size_t n = train.n_rows();
    if (m < 1 || m > n) {
        throw std::invalid_argument("background size " + std::to_string(m) +
                                    " must lie in [1, " + std::to_string(n) + "]");
    }
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    Rng rng(seed);
    for (std::size_t i = 0; i < m; ++i) {
        std::swap(pool[i], pool[i + rng.next_index(n - i)]);
    }
    BackgroundDataset bg;
    bg.seed = seed;
    bg.source_indices.assign(pool.begin(), pool.begin() + m);
    std::sort(bg.source_indices.begin(), bg.source_indices.end());
    bg.rows.reserve(m);
    for (std::size_t index : bg.source_indices) {
        bg.rows.push_back(train.rows[index]);
    }
    return bg;
}

void validate_attributions(const AttributionResult& attr) {
    if (attr.shap.size() != attr.predictions.size()) {
        throw std::invalid_argument("attribution rows do not match predictions");
    }
    for (std::size_t i = 0; i < attr.shap.size(); ++i) {
        const double total = std::accumulate(attr.shap[i].begin(), attr.shap[i].end(), 0.0);
        const double target = attr.predictions[i] - attr.background_expectation;
        const double tolerance = 1e-6 * std::max(1.0, std::abs(target));
        if (!(std::abs(total - target) <= tolerance)) {
            throw std::invalid_argument("completeness violated on row " + std::to_string(i));
        }
    }
}

AttributionResult explain_deep(const ModelWeights& model, const DataTable& instances,
                               const BackgroundDataset& bg, int threads) {
    check_explain_dimensions(model, instances.n_vars(), bg);
    const std::size_t n = instances.n_rows();
    const std::size_t n_vars = instances.n_vars();
    const std::size_t m = bg.rows.size();

    // Reference traces are shared by every instance.
    std::vector<std::vector<std::vector<double>>> ref_pre(m);
    double expectation = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        expectation += forward_trace(model, bg.rows[r], ref_pre[r]);
    }
    expectation /= static_cast<double>(m);

    AttributionResult result;
    result.background_expectation = expectation;
    result.shap.assign(n, std::vector<double>(n_vars, 0.0));
    result.predictions.assign(n, 0.0);

    const auto explain_instance = [&](std::size_t i, std::vector<std::vector<double>>& pre_x,
                                      std::vector<double>& mult, std::vector<double>& scratch) {
        const std::vector<double>& x = instances.rows[i];
        result.predictions[i] = forward_trace(model, x, pre_x);
        std::vector<double>& shap_row = result.shap[i];
        for (std::size_t r = 0; r < m; ++r) {
            backward_multipliers(model, pre_x, ref_pre[r], mult, scratch);
            const std::vector<double>& ref = bg.rows[r];
            for (std::size_t j = 0; j < n_vars; ++j) {
                shap_row[j] += mult[j] * (x[j] - ref[j]);
            }
        }
        const double inv_m = 1.0 / static_cast<double>(m);
        for (std::size_t j = 0; j < n_vars; ++j) {
            shap_row[j] *= inv_m;
            if (!std::isfinite(shap_row[j])) {
                throw std::runtime_error("non-finite attribution on row " + std::to_string(i));
            }
        }
    };

    const int worker_count = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (worker_count == 1) {
        std::vector<std::vector<double>> pre_x;
        std::vector<double> mult;
        std::vector<double> scratch;
        for (std::size_t i = 0; i < n; ++i) {
            explain_instance(i, pre_x, mult, scratch);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex error_mutex;
        std::exception_ptr error;
        std::vector<std::thread> workers;
        workers.reserve(worker_count);
        for (int t = 0; t < worker_count; ++t) {
            workers.emplace_back([&]() {
                std::vector<std::vector<double>> pre_x;
                std::vector<double> mult;
                std::vector<double> scratch;
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= n) {
                        return;
                    }
                    try {
                        explain_instance(i, pre_x, mult, scratch);
                    } catch (...) {
                        const std::lock_guard<std::mutex> lock(error_mutex);
                        if (!error) {
                            error = std::current_exception();
                        }
                        return;
                    }
                }
            });
        }
        for (std::thread& worker : workers) {
            worker.join();
        }
        if (error) {
            std::rethrow_exception(error);
        }
    }
    return result;
}

std::vector<double> explain_exact(const ModelWeights& model, std::span<const double> instance,
                                  const BackgroundDataset& bg) {
    check_explain_dimensions(model, instance.size(), bg);
    const std::size_t n_vars = instance.size();
    if (n_vars > 12) {
        throw std::invalid_argument("exact enumeration supports at most 12 variables, got " +
                                    std::to_string(n_vars));
    }
    const std::size_t m = bg.rows.size();
    const std::size_t n_masks = std::size_t{1} << n_vars;

    // Coalition payoff: mean model output with coalition variables taken
    // from the instance and the rest from each background row.
    std::vector<double> payoff(n_masks, 0.0);
    std::vector<double> blended(n_vars);
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        double total = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t j = 0; j < n_vars; ++j) {
                blended[j] = (mask >> j) & 1u ? instance[j] : bg.rows[r][j];
            }
            total += forward(model, blended);
        }
        payoff[mask] = total / static_cast<double>(m);
    }

    std::vector<double> factorial(n_vars + 1, 1.0);
    for (std::size_t k = 1; k <= n_vars; ++k) {
        factorial[k] = factorial[k - 1] * static_cast<double>(k);
    }
    std::vector<double> weight(n_vars);  // weight[s] for |S| = s, j not in S
    for (std::size_t s = 0; s < n_vars; ++s) {
        weight[s] = factorial[s] * factorial[n_vars - 1 - s] / factorial[n_vars];
    }

    std::vector<double> shap(n_vars, 0.0);
    for (std::size_t j = 0; j < n_vars; ++j) {
        const std::size_t bit = std::size_t{1} << j;
        double total = 0.0;
        for (std::size_t mask = 0; mask < n_masks; ++mask) {
            if (mask & bit) {
                continue;
            }
            total += weight[std::popcount(mask)] * (payoff[mask | bit] - payoff[mask]);
        }
        shap[j] = total;
    }
    return shap;
}

void write_attributions_csv(const AttributionResult& attr,
                            const std::vector<std::string>& column_names,
                            const std::filesystem::path& path) {
    if (!attr.shap.empty() && attr.shap.front().size() != column_names.size()) {
        throw std::invalid_argument("column names do not match attribution width");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    }
    std::ostringstream text;
    for (const std::string& name : column_names) {
        text << name << ',';
    }
    text << "prediction,background_expectation\n";
    for (std::size_t i = 0; i < attr.shap.size(); ++i) {
        for (double value : attr.shap[i]) {
            text << format_full(value) << ',';
        }
        text << format_full(attr.predictions[i]) << ','
             << format_full(attr.background_expectation) << '\n';
    }
    out << text.str();
    if (!out) {
        throw std::runtime_error("failed writing '" + path.string() + "'");
    }
}

}  // namespace shapstab
