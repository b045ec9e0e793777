#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shapstab/ann.hpp"
#include "shapstab/data.hpp"
#include "shapstab/explainer.hpp"
#include "shapstab/heatmap.hpp"
#include "shapstab/report_io.hpp"
#include "shapstab/simulation.hpp"
#include "shapstab/text.hpp"

namespace {

// Exit codes: 0 success, 1 runtime/data error, 2 usage error.
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// THREADS caps parallelism; unset means one worker per hardware thread.
int thread_budget() {
    const char* raw = std::getenv("THREADS");
    if (raw == nullptr || *raw == '\0') {
        return std::max(1u, std::thread::hardware_concurrency());
    }
    try {
        const int value = std::stoi(raw);
        if (value < 1) {
            throw std::invalid_argument("below 1");
        }
        return value;
    } catch (const std::exception&) {
        throw UsageError("THREADS must be a positive integer, got '" + std::string(raw) + "'");
    }
}

struct GenDataArgs {
    std::size_t rows = 0;
    std::size_t vars = 21;
    std::uint64_t seed = 0;
    std::string out;
};

void run_gen_data(const GenDataArgs& args) {
    if (args.rows < 1) {
        throw UsageError("--rows must be >= 1");
    }
    if (args.vars < 1) {
        throw UsageError("--vars must be >= 1");
    }
    const shapstab::DataTable table =
        shapstab::generate_synthetic(args.rows, args.vars, args.seed);
    shapstab::write_csv(table, args.out);

    const shapstab::SyntheticModel truth = shapstab::synthetic_ground_truth(args.vars);
    nlohmann::json meta;
    meta["seed"] = args.seed;
    meta["rows"] = args.rows;
    meta["vars"] = args.vars;
    meta["coefficients"] = truth.coefficients;
    meta["intercept"] = truth.intercept;
    const std::string meta_path = args.out + ".meta.json";
    std::ofstream meta_out(meta_path, std::ios::binary);
    if (!meta_out) {
        throw std::runtime_error("cannot open '" + meta_path + "' for writing");
    }
    meta_out << meta.dump(2) << '\n';
    if (!meta_out) {
        throw std::runtime_error("failed writing '" + meta_path + "'");
    }
    std::cout << "wrote " << args.out << " (" << args.rows << " rows, " << args.vars
              << " variables) and " << meta_path << '\n';
}

struct SplitArgs {
    std::string data;
    double fraction = 0.7;
    std::uint64_t seed = 0;
    std::string train_out;
    std::string explain_out;
};

void run_split(const SplitArgs& args) {
    if (!(args.fraction > 0.0) || !(args.fraction < 1.0)) {
        throw UsageError("--fraction must lie strictly between 0 and 1");
    }
    const shapstab::DataTable table = shapstab::read_csv(args.data);
    const auto [train, explanation] = shapstab::split(table, {args.fraction, args.seed});
    shapstab::write_csv(train, args.train_out);
    shapstab::write_csv(explanation, args.explain_out);
    std::cout << "wrote " << args.train_out << " (" << train.n_rows() << " rows) and "
              << args.explain_out << " (" << explanation.n_rows() << " rows)\n";
}

struct TrainArgs {
    std::string data;
    std::vector<std::size_t> hidden = {128, 64};
    std::size_t epochs = 30;
    double learning_rate = 0.05;
    std::uint64_t seed = 42;
    std::string out;
};

void run_train(const TrainArgs& args) {
    for (std::size_t h : args.hidden) {
        if (h < 1) {
            throw UsageError("--hidden sizes must be >= 1");
        }
    }
    if (!(args.learning_rate > 0.0)) {
        throw UsageError("--lr must be > 0");
    }
    const shapstab::DataTable table = shapstab::read_csv(args.data);
    const shapstab::ModelWeights model =
        shapstab::train(table, args.hidden, args.epochs, args.learning_rate, args.seed);
    shapstab::save_model(model, args.out);
    const double loss = shapstab::log_loss(model, table.rows, *table.labels);
    std::cout << "final log-loss: " << shapstab::format_sig6(loss) << '\n';
    std::cout << "wrote " << args.out << '\n';
}

struct ExplainArgs {
    std::string model;
    std::string data;
    std::string background_data;
    std::size_t size = 100;
    std::uint64_t seed = 0;
    std::string out;
};

void run_explain(const ExplainArgs& args) {
    if (args.size < 1) {
        throw UsageError("--size must be >= 1");
    }
    const shapstab::ModelWeights model = shapstab::load_model(args.model);
    const shapstab::DataTable instances = shapstab::read_csv(args.data);
    const shapstab::DataTable train = shapstab::read_csv(args.background_data);
    const shapstab::BackgroundDataset bg =
        shapstab::sample_background(train, args.size, args.seed);
    const shapstab::AttributionResult attr =
        shapstab::explain_deep(model, instances, bg, thread_budget());
    shapstab::write_attributions_csv(attr, instances.column_names, args.out);
    std::cout << "wrote " << args.out << " (" << attr.shap.size() << " instances, background "
              << args.size << ")\n";
}

struct SimulateArgs {
    std::string model;
    std::string train_data;
    std::string explain_data;
    std::vector<std::size_t> sizes = {50, 100, 200, 400};
    std::size_t sims = 20;
    std::uint64_t seed = 0;
    std::string out;
};

void run_simulate(const SimulateArgs& args) {
    if (args.sims < 2) {
        throw UsageError("--sims must be >= 2");
    }
    if (args.sizes.empty()) {
        throw UsageError("--sizes must list at least one background size");
    }
    for (std::size_t size : args.sizes) {
        if (size < 1) {
            throw UsageError("--sizes entries must be >= 1");
        }
    }
    const shapstab::ModelWeights model = shapstab::load_model(args.model);
    const shapstab::DataTable train = shapstab::read_csv(args.train_data);
    const shapstab::DataTable explanation = shapstab::read_csv(args.explain_data);

    shapstab::StudyConfig config;
    config.background_sizes = args.sizes;
    config.simulations_per_size = args.sims;
    config.master_seed = args.seed;
    config.model = &model;
    config.train_table = &train;
    config.explanation_table = &explanation;
    const shapstab::StabilityReport report = shapstab::run_study(config, thread_budget());
    shapstab::write_report(report, args.out);
    std::cout << "wrote " << args.out << " (" << args.sizes.size() << " sizes, " << args.sims
              << " simulations each)\n";
}

struct ReportArgs {
    std::string in;
    std::string format = "csv";
    std::string heatmap;
};

std::filesystem::path heatmap_path_for(const std::filesystem::path& base, std::size_t size,
                                       bool single) {
    if (single) {
        return base;
    }
    std::filesystem::path path = base;
    const std::string stem = path.stem().string();
    const std::string extension = path.extension().string();
    path.replace_filename(stem + "-m" + std::to_string(size) + extension);
    return path;
}

void run_report(const ReportArgs& args) {
    const shapstab::StabilityReport report = shapstab::read_report(args.in);
    if (report.sizes.empty()) {
        throw std::runtime_error("report '" + args.in + "' has no size blocks");
    }
    if (args.format == "csv") {
        std::cout << shapstab::render_tables_csv(report);
    } else {
        std::cout << shapstab::render_tables_markdown(report);
    }
    if (!args.heatmap.empty()) {
        const bool single = report.sizes.size() == 1;
        for (const shapstab::SizeReport& size : report.sizes) {
            const std::filesystem::path path =
                heatmap_path_for(args.heatmap, size.background_size, single);
            shapstab::write_heatmap_ppm({size.rankings}, path);
            std::cerr << "wrote " << path.string() << '\n';
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Background-size stability toolkit for SHAP explanations of feed-forward nets"};
    app.require_subcommand(1);

    GenDataArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic labeled dataset");
    gen->add_option("--rows", gen_args.rows, "Number of rows")->required();
    gen->add_option("--vars", gen_args.vars, "Number of variables (21 gives clinical names)");
    gen->add_option("--seed", gen_args.seed, "RNG seed");
    gen->add_option("--out", gen_args.out, "Output CSV path")->required();

    SplitArgs split_args;
    CLI::App* split = app.add_subcommand("split", "Partition a CSV into train/explanation parts");
    split->add_option("--data", split_args.data, "Input CSV")->required();
    split->add_option("--fraction", split_args.fraction, "Training fraction in (0, 1)");
    split->add_option("--seed", split_args.seed, "Shuffle seed");
    split->add_option("--train-out", split_args.train_out, "Training CSV path")->required();
    split->add_option("--explain-out", split_args.explain_out, "Explanation CSV path")
        ->required();

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "Train a classifier on a labeled CSV");
    train->add_option("--data", train_args.data, "Labeled CSV")->required();
    train->add_option("--hidden", train_args.hidden, "Hidden layer sizes")->delimiter(',');
    train->add_option("--epochs", train_args.epochs, "Training epochs");
    train->add_option("--lr", train_args.learning_rate, "Learning rate");
    train->add_option("--seed", train_args.seed, "RNG seed");
    train->add_option("--out", train_args.out, "Output model path")->required();

    ExplainArgs explain_args;
    CLI::App* explain = app.add_subcommand("explain", "Attribute one CSV of instances");
    explain->add_option("--model", explain_args.model, "Model file")->required();
    explain->add_option("--data", explain_args.data, "Instances to explain")->required();
    explain->add_option("--background-data", explain_args.background_data,
                        "Table to sample the background from")->required();
    explain->add_option("--size", explain_args.size, "Background sample size");
    explain->add_option("--seed", explain_args.seed, "Sampling seed");
    explain->add_option("--out", explain_args.out, "Output attribution CSV")->required();

    SimulateArgs sim_args;
    CLI::App* simulate = app.add_subcommand("simulate", "Run the background-size stability sweep");
    simulate->add_option("--model", sim_args.model, "Model file")->required();
    simulate->add_option("--train-data", sim_args.train_data, "Training CSV")->required();
    simulate->add_option("--explain-data", sim_args.explain_data, "Explanation CSV")->required();
    simulate->add_option("--sizes", sim_args.sizes, "Background sizes")->delimiter(',');
    simulate->add_option("--sims", sim_args.sims, "Simulations per size");
    simulate->add_option("--seed", sim_args.seed, "Master seed");
    simulate->add_option("--out", sim_args.out, "Output report path")->required();

    ReportArgs report_args;
    CLI::App* report = app.add_subcommand("report", "Render tables and heatmaps from a report");
    report->add_option("--in", report_args.in, "Report file")->required();
    report->add_option("--format", report_args.format, "Table format")
        ->check(CLI::IsMember({"csv", "md"}));
    report->add_option("--heatmap", report_args.heatmap, "Heatmap PPM path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (gen->parsed()) {
            run_gen_data(gen_args);
        } else if (split->parsed()) {
            run_split(split_args);
        } else if (train->parsed()) {
            run_train(train_args);
        } else if (explain->parsed()) {
            run_explain(explain_args);
        } else if (simulate->parsed()) {
            run_simulate(sim_args);
        } else if (report->parsed()) {
            run_report(report_args);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
