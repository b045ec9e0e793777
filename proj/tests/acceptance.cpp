// Acceptance suite: one criterion per entry, one PASS/FAIL line each.
// Criterion 7 is soft: a failure is reported but does not gate the suite.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <sys/wait.h>
#include <thread>
#include <vector>

#include "shapstab/ann.hpp"
#include "shapstab/data.hpp"
#include "shapstab/explainer.hpp"
#include "shapstab/importance.hpp"
#include "shapstab/metrics.hpp"
#include "shapstab/rng.hpp"
#include "shapstab/simulation.hpp"
#include "shapstab/text.hpp"

namespace {

namespace fs = std::filesystem;

struct CriterionFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message) {
    if (!condition) {
        throw CriterionFailure(message);
    }
}

std::string fmt(double value) {
    return shapstab::format_sig6(value);
}

int thread_budget() {
    const char* raw = std::getenv("THREADS");
    if (raw != nullptr && *raw != '\0') {
        const int value = std::atoi(raw);
        if (value >= 1) {
            return value;
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
// Shared fixtures (built once, on first use)

struct StudyFixture {
    shapstab::DataTable train;
    shapstab::DataTable explanation;
    shapstab::ModelWeights model;
};

const StudyFixture& study_fixture() {
    static const StudyFixture fixture = [] {
        std::fprintf(stderr, "[acceptance] building the 21-variable study fixture...\n");
        StudyFixture built;
        const shapstab::DataTable all = shapstab::generate_synthetic(6000, 21, 20240901);
        auto [train, explanation] = shapstab::split(all, {5.0 / 6.0, 17});
        built.train = std::move(train);
        built.explanation = std::move(explanation);
        std::fprintf(stderr, "[acceptance] training the 21->128->64->1 model...\n");
        built.model = shapstab::train(built.train, {128, 64}, 30, 0.05, 7);
        return built;
    }();
    return fixture;
}

const shapstab::StabilityReport& study_report() {
    static const shapstab::StabilityReport report = [] {
        const StudyFixture& fixture = study_fixture();
        shapstab::StudyConfig config;
        config.background_sizes = {50, 100, 200, 400};
        config.simulations_per_size = 20;
        config.master_seed = 99;
        config.model = &fixture.model;
        config.train_table = &fixture.train;
        config.explanation_table = &fixture.explanation;
        std::fprintf(stderr, "[acceptance] running the stability study (sizes 50..400, 20 sims"
                             " each, %d threads)...\n", thread_budget());
        return shapstab::run_study(config, thread_budget());
    }();
    return report;
}

std::vector<std::size_t> identity_permutation(std::size_t length) {
    std::vector<std::size_t> order(length);
    std::iota(order.begin(), order.end(), 0);
    return order;
}

shapstab::Matrix random_rows(std::size_t n, std::size_t v, std::uint64_t seed) {
    shapstab::Rng rng(seed);
    shapstab::Matrix rows(n, std::vector<double>(v));
    for (auto& row : rows) {
        for (double& cell : row) {
            cell = rng.next_normal();
        }
    }
    return rows;
}

shapstab::DataTable table_from_rows(shapstab::Matrix rows) {
    shapstab::DataTable table;
    for (std::size_t j = 0; j < rows.front().size(); ++j) {
        table.column_names.push_back("v" + std::to_string(j));
    }
    table.rows = std::move(rows);
    return table;
}

shapstab::BackgroundDataset background_from_rows(shapstab::Matrix rows) {
    shapstab::BackgroundDataset bg;
    bg.rows = std::move(rows);
    bg.source_indices.resize(bg.rows.size());
    std::iota(bg.source_indices.begin(), bg.source_indices.end(), 0);
    return bg;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// ---------------------------------------------------------------------------
// Criteria

std::string criterion_1_bleu_fixture() {
    const std::vector<std::size_t> ranking_one = identity_permutation(12);
    const std::vector<std::size_t> ranking_two = {0, 2, 1, 3, 4, 5, 7, 6, 8, 9, 10, 11};

    const auto start = std::chrono::steady_clock::now();
    const shapstab::QuartileScores scores = shapstab::bleu_q(ranking_one, ranking_two);
    const auto stop = std::chrono::steady_clock::now();
    const double micros =
        std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count() / 1000.0;

    require(scores.per_quartile[0] == 0.0 && scores.per_quartile[1] == 1.0 &&
                scores.per_quartile[2] == 0.0 && scores.per_quartile[3] == 1.0,
            "per-quartile precisions are (" + fmt(scores.per_quartile[0]) + ", " +
                fmt(scores.per_quartile[1]) + ", " + fmt(scores.per_quartile[2]) + ", " +
                fmt(scores.per_quartile[3]) + "), expected (0, 1, 0, 1)");
    require(micros < 1000.0, "runtime " + fmt(micros) + " us exceeds 1 ms");
    require(scores.average == 0.25,
            "BLEU_Q is " + fmt(scores.average) + ", expected exactly 0.25 " +
                "(per-quartile scores matched (0, 1, 0, 1); their mean is 0.5)");
    return "per-quartile (0, 1, 0, 1), average " + fmt(scores.average) + ", " + fmt(micros) +
           " us";
}

std::string criterion_2_jaccard_fixture() {
    const std::vector<std::size_t> ranking_one = identity_permutation(12);
    const std::vector<std::size_t> ranking_two = {0, 2, 1, 3, 4, 5, 7, 6, 8, 9, 10, 11};
    const shapstab::QuartileScores scores = shapstab::jaccard_q(ranking_one, ranking_two);
    for (double value : scores.per_quartile) {
        require(value == 1.0, "a quartile scored " + fmt(value) + ", expected exactly 1");
    }
    require(scores.average == 1.0,
            "Jaccard_Q is " + fmt(scores.average) + ", expected exactly 1.0");
    return "all quartiles 1, average 1";
}

std::string criterion_3_completeness() {
    const StudyFixture& fixture = study_fixture();
    shapstab::DataTable instances;
    instances.column_names = fixture.explanation.column_names;
    instances.rows.assign(fixture.explanation.rows.begin(),
                          fixture.explanation.rows.begin() + 100);

    double worst = 0.0;
    for (std::size_t m : {std::size_t{1}, std::size_t{10}, std::size_t{100}}) {
        const shapstab::BackgroundDataset bg =
            shapstab::sample_background(fixture.train, m, 1000 + m);
        const shapstab::AttributionResult attr =
            shapstab::explain_deep(fixture.model, instances, bg, thread_budget());
        for (std::size_t i = 0; i < instances.n_rows(); ++i) {
            const double total =
                std::accumulate(attr.shap[i].begin(), attr.shap[i].end(), 0.0);
            const double target = attr.predictions[i] - attr.background_expectation;
            const double relative =
                std::abs(total - target) / std::max(1.0, std::abs(target));
            worst = std::max(worst, relative);
            require(relative <= 1e-6, "row " + std::to_string(i) + " at m=" +
                                          std::to_string(m) + " misses completeness by " +
                                          fmt(relative) + " relative");
        }
    }
    return "100 instances x m in {1, 10, 100}, worst relative residual " + fmt(worst);
}

std::string criterion_4_linear_oracle() {
    shapstab::Rng rng(431);
    std::vector<double> weights(6);
    for (double& w : weights) {
        w = rng.next_normal();
    }
    shapstab::ModelWeights model;
    model.layers.push_back({{weights}, {0.3}, shapstab::Activation::kIdentity});

    const shapstab::DataTable instances = table_from_rows(random_rows(10, 6, 432));
    const shapstab::BackgroundDataset bg = background_from_rows(random_rows(20, 6, 433));
    std::vector<double> mean_ref(6, 0.0);
    for (const auto& row : bg.rows) {
        for (std::size_t j = 0; j < 6; ++j) {
            mean_ref[j] += row[j];
        }
    }
    for (double& value : mean_ref) {
        value /= static_cast<double>(bg.rows.size());
    }

    const shapstab::AttributionResult deep = shapstab::explain_deep(model, instances, bg);
    double worst = 0.0;
    for (std::size_t i = 0; i < instances.n_rows(); ++i) {
        const std::vector<double> exact =
            shapstab::explain_exact(model, instances.rows[i], bg);
        for (std::size_t j = 0; j < 6; ++j) {
            const double analytic = weights[j] * (instances.rows[i][j] - mean_ref[j]);
            worst = std::max({worst, std::abs(deep.shap[i][j] - exact[j]),
                              std::abs(deep.shap[i][j] - analytic),
                              std::abs(exact[j] - analytic)});
        }
    }
    require(worst <= 1e-9, "largest disagreement " + fmt(worst) + " exceeds 1e-9");
    return "deep = exact = analytic within " + fmt(worst);
}

std::string criterion_5_nonlinear_oracle() {
    // A fitted 6 -> 4 -> 1 ReLU model, as the pipeline produces.
    const shapstab::DataTable all = shapstab::generate_synthetic(800, 6, 7);
    auto [train_rows, rest] = shapstab::split(all, {0.8, 1});
    const shapstab::ModelWeights model = shapstab::train(train_rows, {4}, 60, 0.1, 73);
    const shapstab::BackgroundDataset bg = shapstab::sample_background(train_rows, 8, 7);
    shapstab::DataTable instances;
    instances.column_names = rest.column_names;
    instances.rows.assign(rest.rows.begin(), rest.rows.begin() + 12);

    double mean_ref_output = 0.0;
    for (const auto& row : bg.rows) {
        mean_ref_output += shapstab::forward(model, row);
    }
    mean_ref_output /= static_cast<double>(bg.rows.size());

    const shapstab::AttributionResult deep = shapstab::explain_deep(model, instances, bg);
    double worst_residual = 0.0;
    std::size_t checked_signs = 0;
    for (std::size_t i = 0; i < instances.n_rows(); ++i) {
        const std::vector<double> exact =
            shapstab::explain_exact(model, instances.rows[i], bg);
        const double total = std::accumulate(exact.begin(), exact.end(), 0.0);
        const double target = shapstab::forward(model, instances.rows[i]) - mean_ref_output;
        worst_residual = std::max(worst_residual, std::abs(total - target));
        require(std::abs(total - target) <= 1e-12,
                "exact completeness residual " + fmt(std::abs(total - target)) +
                    " exceeds 1e-12 on row " + std::to_string(i));

        double largest = 0.0;
        for (double value : exact) {
            largest = std::max(largest, std::abs(value));
        }
        for (std::size_t j = 0; j < 6; ++j) {
            if (std::abs(exact[j]) > 0.1 * largest) {
                ++checked_signs;
                require(std::signbit(deep.shap[i][j]) == std::signbit(exact[j]),
                        "sign mismatch on row " + std::to_string(i) + ", variable " +
                            std::to_string(j));
            }
        }
    }

    // Symmetry axiom on symmetrized inputs: identical roles for variables 0, 1.
    shapstab::ModelWeights symmetric = model;
    for (auto& row : symmetric.layers[0].weights) {
        row[1] = row[0];
    }
    std::vector<double> instance = instances.rows[0];
    instance[1] = instance[0];
    shapstab::Matrix sym_rows = bg.rows;
    for (auto& row : sym_rows) {
        row[1] = row[0];
    }
    const std::vector<double> sym_shap =
        shapstab::explain_exact(symmetric, instance, background_from_rows(sym_rows));
    require(std::abs(sym_shap[0] - sym_shap[1]) <= 1e-12,
            "symmetric variables scored " + fmt(sym_shap[0]) + " vs " + fmt(sym_shap[1]));

    return "exact completeness within " + fmt(worst_residual) + ", symmetry gap " +
           fmt(std::abs(sym_shap[0] - sym_shap[1])) + ", " + std::to_string(checked_signs) +
           " signs agree";
}

std::string criterion_6_monotone_stability() {
    const shapstab::StabilityReport& report = study_report();
    const auto& first = report.sizes.front();   // m = 50
    const auto& last = report.sizes.back();     // m = 400

    std::size_t shrunk = 0;
    for (std::size_t j = 0; j < report.variable_names.size(); ++j) {
        if (last.variance_sums[j] < first.variance_sums[j]) {
            ++shrunk;
        } else {
            throw CriterionFailure("variance sum of '" + report.variable_names[j] +
                                   "' did not shrink: " + fmt(first.variance_sums[j]) +
                                   " at m=50 vs " + fmt(last.variance_sums[j]) + " at m=400");
        }
    }

    const double bleu_gain = last.mean_bleu.average - first.mean_bleu.average;
    const double jaccard_gain = last.mean_jaccard.average - first.mean_jaccard.average;
    require(bleu_gain >= 0.02, "mean BLEU_Q gain " + fmt(bleu_gain) + " is below 0.02");
    require(jaccard_gain >= 0.02, "mean Jaccard_Q gain " + fmt(jaccard_gain) +
                                      " is below 0.02");

    // Trend across all four sizes: non-decreasing, allowing at most one
    // adjacent inversion smaller than 0.02.
    for (const bool use_bleu : {true, false}) {
        std::size_t inversions = 0;
        for (std::size_t s = 0; s + 1 < report.sizes.size(); ++s) {
            const double at = use_bleu ? report.sizes[s].mean_bleu.average
                                       : report.sizes[s].mean_jaccard.average;
            const double next = use_bleu ? report.sizes[s + 1].mean_bleu.average
                                         : report.sizes[s + 1].mean_jaccard.average;
            if (next < at) {
                ++inversions;
                require(at - next < 0.02, std::string(use_bleu ? "BLEU" : "Jaccard") +
                                              " inversion of " + fmt(at - next) +
                                              " between sizes " +
                                              std::to_string(report.sizes[s].background_size) +
                                              " and " +
                                              std::to_string(
                                                  report.sizes[s + 1].background_size));
            }
        }
        require(inversions <= 1, std::string(use_bleu ? "BLEU" : "Jaccard") + " trend has " +
                                     std::to_string(inversions) + " adjacent inversions");
    }

    std::string detail = "variance shrank for all " + std::to_string(shrunk) +
                         " variables; mean BLEU_Q ";
    for (const auto& size : report.sizes) {
        detail += fmt(size.mean_bleu.average) + (&size == &report.sizes.back() ? "" : " -> ");
    }
    detail += "; mean Jaccard_Q ";
    for (const auto& size : report.sizes) {
        detail += fmt(size.mean_jaccard.average) + (&size == &report.sizes.back() ? "" : " -> ");
    }
    return detail;
}

std::string criterion_7_u_shape() {
    const shapstab::StabilityReport& report = study_report();
    const auto& at_400 = report.sizes.back().mean_jaccard.per_quartile;
    const double outer = std::min(at_400[0], at_400[3]);
    const double inner = std::min(at_400[1], at_400[2]);
    const std::string quartiles = "quartiles at m=400: " + fmt(at_400[0]) + ", " +
                                  fmt(at_400[1]) + ", " + fmt(at_400[2]) + ", " +
                                  fmt(at_400[3]);
    require(outer > inner, "min(Q1, Q4) = " + fmt(outer) + " does not exceed min(Q2, Q3) = " +
                               fmt(inner) + " (" + quartiles + ")");
    return quartiles;
}

std::string criterion_8_gradient_check() {
    const shapstab::DataTable batch = shapstab::generate_synthetic(16, 3, 88);
    shapstab::ModelWeights model = shapstab::init_model(3, {4}, 89);
    const auto [loss, grads] = shapstab::log_loss_gradients(model, batch.rows, *batch.labels);
    (void)loss;

    constexpr double kStep = 1e-5;
    double worst = 0.0;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        for (std::size_t u = 0; u < model.layers[l].out_dim(); ++u) {
            for (std::size_t c = 0; c <= model.layers[l].in_dim(); ++c) {
                double& parameter = c < model.layers[l].in_dim()
                                        ? model.layers[l].weights[u][c]
                                        : model.layers[l].bias[u];
                const double saved = parameter;
                parameter = saved + kStep;
                const double up = shapstab::log_loss(model, batch.rows, *batch.labels);
                parameter = saved - kStep;
                const double down = shapstab::log_loss(model, batch.rows, *batch.labels);
                parameter = saved;
                const double numeric = (up - down) / (2.0 * kStep);
                const double analytic = c < model.layers[l].in_dim() ? grads[l].weights[u][c]
                                                                     : grads[l].bias[u];
                const double relative = std::abs(analytic - numeric) /
                                        std::max({1.0, std::abs(analytic), std::abs(numeric)});
                worst = std::max(worst, relative);
            }
        }
    }
    require(worst <= 1e-5, "worst relative gradient error " + fmt(worst) + " exceeds 1e-5");
    return "worst relative error " + fmt(worst) + " on the 3x4x1 model";
}

std::string criterion_9_cli_determinism() {
    const fs::path dir = fs::temp_directory_path() / "shapstab_acceptance";
    fs::create_directories(dir);
    const fs::path train_csv = dir / "train.csv";
    const fs::path explain_csv = dir / "explain.csv";
    const fs::path model_file = dir / "model.txt";

    const shapstab::DataTable all = shapstab::generate_synthetic(120, 8, 5);
    auto [train, explanation] = shapstab::split(all, {0.75, 3});
    shapstab::write_csv(train, train_csv);
    shapstab::write_csv(explanation, explain_csv);
    shapstab::save_model(shapstab::train(train, {8, 4}, 5, 0.05, 1), model_file);

    const auto simulate = [&](const std::string& threads, const fs::path& out) {
        const std::string command =
            "THREADS=" + threads + " " + SHAPSTAB_CLI_PATH + " simulate --model " +
            model_file.string() + " --train-data " + train_csv.string() + " --explain-data " +
            explain_csv.string() + " --sizes 5,15 --sims 4 --seed 12 --out " + out.string() +
            " > /dev/null";
        const int status = std::system(command.c_str());
        require(status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0,
                "cmd_simulate exited abnormally under THREADS=" + threads);
    };

    const fs::path report_serial = dir / "report_t1.json";
    const fs::path report_parallel = dir / "report_t8.json";
    simulate("1", report_serial);
    simulate("8", report_parallel);
    const std::string serial_bytes = read_file(report_serial);
    require(!serial_bytes.empty(), "empty report file");
    require(serial_bytes == read_file(report_parallel),
            "reports differ between THREADS=1 and THREADS=8");

    const fs::path report_again = dir / "report_t1_again.json";
    simulate("1", report_again);
    require(serial_bytes == read_file(report_again), "rerun with identical flags differs");
    return "byte-identical reports across THREADS in {1, 8} and across reruns";
}

std::string criterion_10_metric_properties() {
    shapstab::Rng rng(1312);
    const auto random_permutation = [&rng](std::size_t length) {
        std::vector<std::size_t> order = identity_permutation(length);
        for (std::size_t i = length - 1; i > 0; --i) {
            std::swap(order[i], order[rng.next_index(i + 1)]);
        }
        return order;
    };

    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t length = 8 + rng.next_index(57);  // 8..64
        const std::vector<std::size_t> a = random_permutation(length);
        const std::vector<std::size_t> b = random_permutation(length);
        const std::vector<std::size_t> relabel = random_permutation(length);
        std::vector<std::size_t> a2(length);
        std::vector<std::size_t> b2(length);
        for (std::size_t k = 0; k < length; ++k) {
            a2[k] = relabel[a[k]];
            b2[k] = relabel[b[k]];
        }

        const shapstab::QuartileScores bleu = shapstab::bleu_q(a, b);
        const shapstab::QuartileScores jaccard = shapstab::jaccard_q(a, b);
        require(bleu.average == shapstab::bleu_q(b, a).average, "BLEU symmetry broke");
        require(jaccard.average == shapstab::jaccard_q(b, a).average,
                "Jaccard symmetry broke");
        require(bleu.average >= 0.0 && bleu.average <= 1.0, "BLEU out of [0, 1]");
        require(jaccard.average >= 0.0 && jaccard.average <= 1.0, "Jaccard out of [0, 1]");
        for (double value : bleu.per_quartile) {
            require(value >= 0.0 && value <= 1.0, "BLEU quartile out of [0, 1]");
        }
        for (double value : jaccard.per_quartile) {
            require(value >= 0.0 && value <= 1.0, "Jaccard quartile out of [0, 1]");
        }
        require(shapstab::bleu_q(a2, b2).average == bleu.average,
                "BLEU relabeling invariance broke");
        require(shapstab::jaccard_q(a2, b2).average == jaccard.average,
                "Jaccard relabeling invariance broke");
        require(shapstab::bleu_q(a, a).average == 1.0, "identity BLEU pair is not 1");
        require(shapstab::jaccard_q(b, b).average == 1.0, "identity Jaccard pair is not 1");
    }
    return "1000 randomized trials per metric, lengths 8..64";
}

struct Criterion {
    int id;
    const char* name;
    bool soft;
    std::function<std::string()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "quartile BLEU worked fixture", false, criterion_1_bleu_fixture},
        {2, "quartile Jaccard worked fixture", false, criterion_2_jaccard_fixture},
        {3, "completeness on the trained model", false, criterion_3_completeness},
        {4, "linear-model oracle equivalence", false, criterion_4_linear_oracle},
        {5, "small nonlinear oracle sanity", false, criterion_5_nonlinear_oracle},
        {6, "monotone stability across sizes", false, criterion_6_monotone_stability},
        {7, "U-shaped quartile stability", true, criterion_7_u_shape},
        {8, "trainer gradient check", false, criterion_8_gradient_check},
        {9, "cmd_simulate determinism", false, criterion_9_cli_determinism},
        {10, "randomized metric properties", false, criterion_10_metric_properties},
    };

    int hard_failures = 0;
    int soft_failures = 0;
    for (const Criterion& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        try {
            const std::string detail = criterion.run();
            const double seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            std::printf("PASS  criterion %2d  %s  [%.2fs]  %s\n", criterion.id, criterion.name,
                        seconds, detail.c_str());
        } catch (const std::exception& e) {
            const double seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (criterion.soft) {
                ++soft_failures;
                std::printf("FAIL* criterion %2d  %s  [%.2fs]  %s (soft criterion: flagged for"
                            " investigation, does not gate)\n",
                            criterion.id, criterion.name, seconds, e.what());
            } else {
                ++hard_failures;
                std::printf("FAIL  criterion %2d  %s  [%.2fs]  %s\n", criterion.id,
                            criterion.name, seconds, e.what());
            }
        }
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed", static_cast<int>(criteria.size()) - hard_failures -
                                                 soft_failures,
                criteria.size());
    if (soft_failures > 0) {
        std::printf(" (%d soft failure%s)", soft_failures, soft_failures == 1 ? "" : "s");
    }
    std::printf("\n");
    return hard_failures;
}
