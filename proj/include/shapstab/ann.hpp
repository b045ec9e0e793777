#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shapstab/data.hpp"

namespace shapstab {

enum class Activation { kRelu, kSigmoid, kIdentity };

Activation activation_from_tag(const std::string& tag);
std::string activation_tag(Activation activation);

double apply_activation(Activation activation, double x);
double activation_derivative(Activation activation, double x);

struct Layer {
    Matrix weights;            // out x in, row-major
    std::vector<double> bias;  // out
    Activation activation = Activation::kIdentity;

    std::size_t out_dim() const { return weights.size(); }
    std::size_t in_dim() const { return weights.empty() ? 0 : weights.front().size(); }
};

// Fully-connected feed-forward network with a scalar output head.
struct ModelWeights {
    std::vector<Layer> layers;

    std::size_t n_inputs() const { return layers.empty() ? 0 : layers.front().in_dim(); }
};

// Structural invariants: at least one layer, chained dimensions, scalar
// head with sigmoid or identity activation, all parameters finite.
void validate_model(const ModelWeights& model);

double forward(const ModelWeights& model, std::span<const double> instance);

// Scalar output plus the pre-activation vector of every layer, in layer
// order. Used by attribution code that needs the intermediate state.
double forward_trace(const ModelWeights& model, std::span<const double> instance,
                     std::vector<std::vector<double>>& pre_activations);

std::vector<double> forward_batch(const ModelWeights& model, const DataTable& table);

// Mean binary log loss over labeled rows; requires a sigmoid head.
double log_loss(const ModelWeights& model, const Matrix& rows, std::span<const int> labels);

struct LayerGradients {
    Matrix weights;
    std::vector<double> bias;
};

// Mean log loss and its gradient by backpropagation.
std::pair<double, std::vector<LayerGradients>> log_loss_gradients(const ModelWeights& model,
                                                                  const Matrix& rows,
                                                                  std::span<const int> labels);

// ReLU hidden layers, sigmoid head. Weights uniform on
// +-sqrt(6 / (fan_in + fan_out)), biases zero, seeded.
ModelWeights init_model(std::size_t n_inputs, const std::vector<std::size_t>& hidden,
                        std::uint64_t seed);

// Minibatch gradient descent (batch 64) on the log loss. Deterministic per
// seed; epochs = 0 returns the seeded initialization unchanged.
ModelWeights train(const DataTable& table, const std::vector<std::size_t>& hidden,
                   std::size_t epochs, double learning_rate, std::uint64_t seed);

// Textual model file: a header with layer dimensions and activation tags,
// then row-major parameters at 17 significant digits.
void save_model(const ModelWeights& model, const std::filesystem::path& path);
ModelWeights load_model(const std::filesystem::path& path);

}  // namespace shapstab
