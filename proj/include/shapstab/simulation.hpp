#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shapstab/ann.hpp"
#include "shapstab/data.hpp"
#include "shapstab/importance.hpp"
#include "shapstab/metrics.hpp"

namespace shapstab {

// Study parameters plus non-owning references to the trained model and the
// two data tables; all three must outlive run_study.
struct StudyConfig {
    std::vector<std::size_t> background_sizes;
    std::size_t simulations_per_size = 2;
    std::uint64_t master_seed = 0;
    const ModelWeights* model = nullptr;
    const DataTable* train_table = nullptr;
    const DataTable* explanation_table = nullptr;
};

struct SizeReport {
    std::size_t background_size = 0;
    std::vector<double> variance_sums;  // per variable
    PairwiseMean mean_bleu;
    PairwiseMean mean_jaccard;
    std::vector<std::vector<std::size_t>> rankings;  // one order per simulation
    std::vector<std::uint64_t> seeds;                // one per simulation
};

struct StabilityReport {
    std::vector<std::string> variable_names;
    std::size_t simulations_per_size = 0;
    std::uint64_t master_seed = 0;
    std::vector<SizeReport> sizes;
};

// Per-simulation seed: chained SplitMix64 mix of the packed triple
//   h = mix(master); h = mix(h ^ (C1 + size_index)); h = mix(h ^ (C2 + sim_index))
// Stable across releases.
std::uint64_t derive_seed(std::uint64_t master_seed, std::size_t size_index,
                          std::size_t simulation_index);

// One simulation: sample a background of the given size with the given seed,
// attribute the whole explanation table, and rank the variables.
struct SimulationOutcome {
    Matrix shap;                      // N x V
    std::vector<std::size_t> order;   // ranking, most important first
};
SimulationOutcome run_single_simulation(const ModelWeights& model, const DataTable& train,
                                        const DataTable& explanation, std::size_t background_size,
                                        std::uint64_t seed);

// The sweep: for every background size, simulations_per_size independent
// background samples, each explained and ranked; aggregates per size are the
// per-variable variance sums and the pairwise ranking metrics. Sizes run
// sequentially; simulations within a size run on up to `threads` workers,
// each writing into its own slot, so the report is bit-identical for any
// thread count.
StabilityReport run_study(const StudyConfig& config, int threads = 1);

}  // namespace shapstab
