#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "shapstab/ann.hpp"
#include "shapstab/data.hpp"
#include "shapstab/rng.hpp"

using shapstab::Activation;
using shapstab::DataTable;
using shapstab::Layer;
using shapstab::ModelWeights;

namespace {

ModelWeights single_layer(const std::vector<double>& weights, double bias,
                          Activation activation) {
    ModelWeights model;
    model.layers.push_back({{weights}, {bias}, activation});
    return model;
}

bool same_parameters(const ModelWeights& a, const ModelWeights& b) {
    if (a.layers.size() != b.layers.size()) {
        return false;
    }
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        if (a.layers[l].weights != b.layers[l].weights || a.layers[l].bias != b.layers[l].bias ||
            a.layers[l].activation != b.layers[l].activation) {
            return false;
        }
    }
    return true;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("zero single sigmoid layer maps everything to one half") {
    const ModelWeights model = single_layer({0.0, 0.0, 0.0}, 0.0, Activation::kSigmoid);
    const std::vector<double> instance = {4.2, -1.0, 100.0};
    CHECK(shapstab::forward(model, instance) == 0.5);
}

TEST_CASE("single sigmoid layer evaluates the logistic function") {
    const ModelWeights model = single_layer({1.0, 0.0}, 0.0, Activation::kSigmoid);
    const std::vector<double> instance = {1.0, 5.0};
    // Independent evaluation of 1 / (1 + e^-1).
    CHECK(shapstab::forward(model, instance) ==
          doctest::Approx(0.7310585786300049).epsilon(1e-15));
}

TEST_CASE("dead relu hidden layer leaves only the output bias") {
    ModelWeights model;
    model.layers.push_back({{{-1.0, -2.0}, {-3.0, -0.5}}, {0.0, 0.0}, Activation::kRelu});
    model.layers.push_back({{{0.7, -1.3}}, {0.25}, Activation::kSigmoid});
    const std::vector<double> instance = {2.0, 3.0};  // all pre-activations negative
    CHECK(shapstab::forward(model, instance) ==
          shapstab::apply_activation(Activation::kSigmoid, 0.25));
}

TEST_CASE("forward rejects dimension mismatches") {
    const ModelWeights model = single_layer({1.0, 2.0}, 0.0, Activation::kSigmoid);
    const std::vector<double> wrong = {1.0};
    CHECK_THROWS_AS(shapstab::forward(model, wrong), std::invalid_argument);
}

TEST_CASE("forward_batch agrees with forward row by row") {
    const DataTable table = shapstab::generate_synthetic(100, 6, 17);
    const ModelWeights model = shapstab::init_model(6, {5, 3}, 99);
    const std::vector<double> batch = shapstab::forward_batch(model, table);
    REQUIRE(batch.size() == 100);
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        CHECK(batch[i] == shapstab::forward(model, table.rows[i]));
    }

    DataTable single;
    single.column_names = table.column_names;
    single.rows = {table.rows[42]};
    CHECK(shapstab::forward_batch(model, single)[0] == shapstab::forward(model, table.rows[42]));
}

TEST_CASE("permuting rows permutes batch outputs identically") {
    DataTable table = shapstab::generate_synthetic(10, 4, 3);
    const ModelWeights model = shapstab::init_model(4, {3}, 1);
    const std::vector<double> before = shapstab::forward_batch(model, table);
    std::reverse(table.rows.begin(), table.rows.end());
    const std::vector<double> after = shapstab::forward_batch(model, table);
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(after[i] == before[before.size() - 1 - i]);
    }
}

TEST_CASE("sigmoid head keeps outputs inside the unit interval") {
    const ModelWeights model = shapstab::init_model(5, {8, 4}, 7);
    shapstab::Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> instance(5);
        for (double& v : instance) {
            v = 20.0 * (rng.next_double() - 0.5);
        }
        const double p = shapstab::forward(model, instance);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("training with zero epochs returns the seeded initialization") {
    const DataTable table = shapstab::generate_synthetic(50, 4, 21);
    const ModelWeights trained = shapstab::train(table, {6, 3}, 0, 0.1, 77);
    const ModelWeights fresh = shapstab::init_model(4, {6, 3}, 77);
    CHECK(same_parameters(trained, fresh));
}

TEST_CASE("training is deterministic per seed") {
    const DataTable table = shapstab::generate_synthetic(120, 3, 5);
    const ModelWeights a = shapstab::train(table, {4}, 3, 0.05, 123);
    const ModelWeights b = shapstab::train(table, {4}, 3, 0.05, 123);
    CHECK(same_parameters(a, b));
}

TEST_CASE("training fits a linearly separable toy problem") {
    DataTable table;
    table.column_names = {"x1", "x2"};
    std::vector<int> labels;
    shapstab::Rng rng(2024);
    for (int i = 0; i < 200; ++i) {
        const double x1 = rng.next_normal();
        const double x2 = rng.next_normal();
        table.rows.push_back({x1, x2});
        labels.push_back(x1 > 0.0 ? 1 : 0);
    }
    table.labels = labels;

    const double initial = shapstab::log_loss(shapstab::init_model(2, {8}, 9), table.rows,
                                              *table.labels);
    const ModelWeights model = shapstab::train(table, {8}, 200, 0.1, 9);
    const double final_loss = shapstab::log_loss(model, table.rows, *table.labels);
    CHECK(final_loss <= initial);

    int correct = 0;
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        const double p = shapstab::forward(model, table.rows[i]);
        correct += (p > 0.5 ? 1 : 0) == labels[i];
    }
    CHECK(static_cast<double>(correct) / 200.0 >= 0.95);
}

TEST_CASE("training requires labels") {
    DataTable table;
    table.column_names = {"a"};
    table.rows = {{1.0}, {2.0}};
    CHECK_THROWS_AS(shapstab::train(table, {2}, 1, 0.1, 0), std::invalid_argument);
}

TEST_CASE("analytic gradients match central finite differences") {
    const DataTable table = shapstab::generate_synthetic(8, 3, 31);
    ModelWeights model = shapstab::init_model(3, {4}, 13);
    const auto [loss, grads] = shapstab::log_loss_gradients(model, table.rows, *table.labels);
    CHECK(loss == doctest::Approx(shapstab::log_loss(model, table.rows, *table.labels)));

    constexpr double kStep = 1e-5;
    constexpr double kTolerance = 1e-5;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        for (std::size_t u = 0; u < model.layers[l].out_dim(); ++u) {
            for (std::size_t c = 0; c <= model.layers[l].in_dim(); ++c) {
                double& parameter = c < model.layers[l].in_dim() ? model.layers[l].weights[u][c]
                                                                 : model.layers[l].bias[u];
                const double saved = parameter;
                parameter = saved + kStep;
                const double up = shapstab::log_loss(model, table.rows, *table.labels);
                parameter = saved - kStep;
                const double down = shapstab::log_loss(model, table.rows, *table.labels);
                parameter = saved;
                const double numeric = (up - down) / (2.0 * kStep);
                const double analytic = c < model.layers[l].in_dim() ? grads[l].weights[u][c]
                                                                     : grads[l].bias[u];
                CHECK(std::abs(analytic - numeric) <=
                      kTolerance * std::max({1.0, std::abs(analytic), std::abs(numeric)}));
            }
        }
    }
}

TEST_CASE("model save and load round-trips every parameter") {
    const ModelWeights model = shapstab::init_model(21, {128, 64}, 2025);
    const auto path = temp_file("shapstab_model.txt");
    shapstab::save_model(model, path);
    const ModelWeights back = shapstab::load_model(path);
    CHECK(same_parameters(model, back));
    std::filesystem::remove(path);
}

TEST_CASE("model loader rejects malformed files") {
    const auto path = temp_file("shapstab_badmodel.txt");
    const auto write = [&path](const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        out << text;
    };

    write("annmodel v1\nlayers 2\n"
          "layer 2 2 relu\n1 0\n0 1\n0 0\n"
          "layer 1 3 sigmoid\n1 1 1\n0\n");  // chain broken: 2 out vs 3 in
    CHECK_THROWS_WITH_AS(shapstab::load_model(path), doctest::Contains("dimension chain"),
                         std::runtime_error);

    write("annmodel v1\nlayers 0\n");
    CHECK_THROWS_AS(shapstab::load_model(path), std::runtime_error);

    write("not a model\n");
    CHECK_THROWS_AS(shapstab::load_model(path), std::runtime_error);

    write("annmodel v1\nlayers 1\nlayer 1 1 tanh\n1\n0\n");
    CHECK_THROWS_WITH_AS(shapstab::load_model(path), doctest::Contains("tanh"),
                         std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("validate_model enforces the structural invariants") {
    ModelWeights empty;
    CHECK_THROWS_AS(shapstab::validate_model(empty), std::invalid_argument);

    ModelWeights wide = shapstab::init_model(3, {2}, 0);
    wide.layers.back().weights.push_back({1.0, 1.0});  // two output units
    wide.layers.back().bias.push_back(0.0);
    CHECK_THROWS_AS(shapstab::validate_model(wide), std::invalid_argument);

    ModelWeights relu_head = shapstab::init_model(3, {2}, 0);
    relu_head.layers.back().activation = Activation::kRelu;
    CHECK_THROWS_AS(shapstab::validate_model(relu_head), std::invalid_argument);

    ModelWeights nan_weight = shapstab::init_model(3, {2}, 0);
    nan_weight.layers[0].weights[0][0] = std::nan("");
    CHECK_THROWS_AS(shapstab::validate_model(nan_weight), std::invalid_argument);
}
