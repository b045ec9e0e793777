#include "shapstab/simulation.hpp"

#include <atomic>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "shapstab/explainer.hpp"
#include "shapstab/rng.hpp"

namespace shapstab {

namespace {

void validate_config(const StudyConfig& config) {
    if (config.model == nullptr || config.train_table == nullptr ||
        config.explanation_table == nullptr) {
        throw std::invalid_argument("study config must reference a model and both tables");
    }
    if (config.simulations_per_size < 2) {
        throw std::invalid_argument("at least 2 simulations per size are required");
    }
    if (config.background_sizes.empty()) {
        throw std::invalid_argument("no background sizes given");
    }
    const std::size_t n_train = config.train_table->n_rows();
    for (std::size_t size : config.background_sizes) {
        if (size < 1) {
            throw std::invalid_argument("background sizes must be >= 1");
        }
        if (size > n_train) {
            throw std::invalid_argument("background size " + std::to_string(size) +
                                        " exceeds the " + std::to_string(n_train) +
                                        " training rows");
        }
    }
    if (config.explanation_table->n_rows() == 0) {
        throw std::invalid_argument("explanation table is empty");
    }
    if (config.explanation_table->n_vars() != config.train_table->n_vars()) {
        throw std::invalid_argument("train and explanation tables differ in variables");
    }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::size_t size_index,
                          std::size_t simulation_index) {
    std::uint64_t h = splitmix64(master_seed);
    h = splitmix64(h ^ (0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(size_index)));
    h = splitmix64(h ^ (0xd1b54a32d192ed03ULL + static_cast<std::uint64_t>(simulation_index)));
    return h;
}

SimulationOutcome run_single_simulation(const ModelWeights& model, const DataTable& train,
                                        const DataTable& explanation, std::size_t background_size,
                                        std::uint64_t seed) {
    const BackgroundDataset bg = sample_background(train, background_size, seed);
    AttributionResult attr = explain_deep(model, explanation, bg, 1);
    const Ranking ranking = rank_variables(variable_importance(attr));
    return {std::move(attr.shap), ranking.order};
}

StabilityReport run_study(const StudyConfig& config, int threads) {
    validate_config(config);
    const std::size_t n_sims = config.simulations_per_size;
    const std::size_t n_vars = config.explanation_table->n_vars();

    StabilityReport report;
    report.variable_names = config.explanation_table->column_names;
    report.simulations_per_size = n_sims;
    report.master_seed = config.master_seed;
    report.sizes.reserve(config.background_sizes.size());

    for (std::size_t size_index = 0; size_index < config.background_sizes.size(); ++size_index) {
        const std::size_t background_size = config.background_sizes[size_index];
        std::vector<Matrix> stacks(n_sims);
        std::vector<std::vector<std::size_t>> rankings(n_sims);
        std::vector<std::uint64_t> seeds(n_sims);
        for (std::size_t s = 0; s < n_sims; ++s) {
            seeds[s] = derive_seed(config.master_seed, size_index, s);
        }

        std::atomic<std::size_t> next{0};
        std::mutex error_mutex;
        std::string error_context;
        std::exception_ptr error;
        const auto worker = [&]() {
            for (;;) {
                const std::size_t s = next.fetch_add(1);
                if (s >= n_sims) {
                    return;
                }
                try {
                    SimulationOutcome outcome =
                        run_single_simulation(*config.model, *config.train_table,
                                              *config.explanation_table, background_size,
                                              seeds[s]);
                    stacks[s] = std::move(outcome.shap);
                    rankings[s] = std::move(outcome.order);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                        error_context = "simulation " + std::to_string(s) + " at m=" +
                                        std::to_string(background_size) + " failed";
                    }
                    return;
                }
            }
        };

        const std::size_t worker_count =
            std::max<std::size_t>(1, std::min<std::size_t>(threads > 0 ? threads : 1, n_sims));
        if (worker_count == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(worker_count);
            for (std::size_t t = 0; t < worker_count; ++t) {
                pool.emplace_back(worker);
            }
            for (std::thread& thread : pool) {
                thread.join();
            }
        }
        if (error) {
            try {
                std::rethrow_exception(error);
            } catch (const std::exception& e) {
                throw std::runtime_error(error_context + ": " + e.what());
            }
        }

        SizeReport size_report;
        size_report.background_size = background_size;
        size_report.variance_sums.reserve(n_vars);
        for (std::size_t j = 0; j < n_vars; ++j) {
            size_report.variance_sums.push_back(variance_sum(stacks, j));
        }
        size_report.mean_bleu = mean_pairwise(rankings, RankMetric::kBleuQ);
        size_report.mean_jaccard = mean_pairwise(rankings, RankMetric::kJaccardQ);
        size_report.rankings = std::move(rankings);
        size_report.seeds = std::move(seeds);
        report.sizes.push_back(std::move(size_report));
    }
    return report;
}

}  // namespace shapstab
