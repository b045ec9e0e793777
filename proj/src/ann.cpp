#include "shapstab/ann.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "shapstab/rng.hpp"
#include "shapstab/text.hpp"

namespace shapstab {

namespace {

double stable_sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

// Affine map of one layer; activation is applied by the caller.
void layer_preactivation(const Layer& layer, std::span<const double> input,
                         std::vector<double>& out) {
    const std::size_t out_dim = layer.out_dim();
    out.resize(out_dim);
    for (std::size_t u = 0; u < out_dim; ++u) {
        const std::vector<double>& row = layer.weights[u];
        double acc = layer.bias[u];
        for (std::size_t c = 0; c < row.size(); ++c) {
            acc += row[c] * input[c];
        }
        out[u] = acc;
    }
}

// Pre-activation of the output unit, for loss computations on the logit scale.
double final_preactivation(const ModelWeights& model, std::span<const double> instance,
                           std::vector<double>& buf_a, std::vector<double>& buf_b) {
    buf_a.assign(instance.begin(), instance.end());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const Layer& layer = model.layers[l];
        layer_preactivation(layer, buf_a, buf_b);
        if (l + 1 == model.layers.size()) {
            return buf_b[0];
        }
        for (double& v : buf_b) {
            v = apply_activation(layer.activation, v);
        }
        buf_a.swap(buf_b);
    }
    throw std::invalid_argument("model has no layers");
}

void check_input_dimension(const ModelWeights& model, std::size_t got) {
    if (model.layers.empty()) {
        throw std::invalid_argument("model has no layers");
    }
    if (got != model.n_inputs()) {
        throw std::invalid_argument("instance has " + std::to_string(got) +
                                    " variables, model expects " +
                                    std::to_string(model.n_inputs()));
    }
}

std::vector<LayerGradients> zero_gradients(const ModelWeights& model) {
    std::vector<LayerGradients> grads(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        grads[l].weights.assign(model.layers[l].out_dim(),
                                std::vector<double>(model.layers[l].in_dim(), 0.0));
        grads[l].bias.assign(model.layers[l].out_dim(), 0.0);
    }
    return grads;
}

}  // namespace

Activation activation_from_tag(const std::string& tag) {
    if (tag == "relu") {
        return Activation::kRelu;
    }
    if (tag == "sigmoid") {
        return Activation::kSigmoid;
    }
    if (tag == "identity") {
        return Activation::kIdentity;
    }
    throw std::runtime_error("unknown activation tag '" + tag + "'");
}

std::string activation_tag(Activation activation) {
    switch (activation) {
        case Activation::kRelu: return "relu";
        case Activation::kSigmoid: return "sigmoid";
        case Activation::kIdentity: return "identity";
    }
    throw std::logic_error("invalid activation");
}

double apply_activation(Activation activation, double x) {
    switch (activation) {
        case Activation::kRelu: return x > 0.0 ? x : 0.0;
        case Activation::kSigmoid: return stable_sigmoid(x);
        case Activation::kIdentity: return x;
    }
    throw std::logic_error("invalid activation");
}

double activation_derivative(Activation activation, double x) {
    switch (activation) {
        case Activation::kRelu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::kSigmoid: {
            const double s = stable_sigmoid(x);
            return s * (1.0 - s);
        }
        case Activation::kIdentity: return 1.0;
    }
    throw std::logic_error("invalid activation");
}

void validate_model(const ModelWeights& model) {
    if (model.layers.empty()) {
        throw std::invalid_argument("model must have at least one layer");
    }
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const Layer& layer = model.layers[l];
        if (layer.out_dim() == 0 || layer.in_dim() == 0) {
            throw std::invalid_argument("layer " + std::to_string(l) + " is empty");
        }
        for (const auto& row : layer.weights) {
            if (row.size() != layer.in_dim()) {
                throw std::invalid_argument("layer " + std::to_string(l) +
                                            " has ragged weight rows");
            }
            for (double w : row) {
                if (!std::isfinite(w)) {
                    throw std::invalid_argument("layer " + std::to_string(l) +
                                                " has a non-finite weight");
                }
            }
        }
        if (layer.bias.size() != layer.out_dim()) {
            throw std::invalid_argument("layer " + std::to_string(l) + " bias size mismatch");
        }
        for (double b : layer.bias) {
            if (!std::isfinite(b)) {
                throw std::invalid_argument("layer " + std::to_string(l) +
                                            " has a non-finite bias");
            }
        }
        if (l > 0 && layer.in_dim() != model.layers[l - 1].out_dim()) {
            throw std::invalid_argument("dimension chain broken between layers " +
                                        std::to_string(l - 1) + " and " + std::to_string(l));
        }
    }
    const Layer& head = model.layers.back();
    if (head.out_dim() != 1) {
        throw std::invalid_argument("output layer must have exactly one unit");
    }
    if (head.activation == Activation::kRelu) {
        throw std::invalid_argument("output activation must be sigmoid or identity");
    }
}

double forward(const ModelWeights& model, std::span<const double> instance) {
    check_input_dimension(model, instance.size());
    std::vector<double> current(instance.begin(), instance.end());
    std::vector<double> next;
    for (const Layer& layer : model.layers) {
        layer_preactivation(layer, current, next);
        for (double& v : next) {
            v = apply_activation(layer.activation, v);
        }
        current.swap(next);
    }
    return current[0];
}

double forward_trace(const ModelWeights& model, std::span<const double> instance,
                     std::vector<std::vector<double>>& pre_activations) {
    check_input_dimension(model, instance.size());
    pre_activations.resize(model.layers.size());
    std::vector<double> current(instance.begin(), instance.end());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const Layer& layer = model.layers[l];
        layer_preactivation(layer, current, pre_activations[l]);
        current.resize(pre_activations[l].size());
        for (std::size_t u = 0; u < current.size(); ++u) {
            current[u] = apply_activation(layer.activation, pre_activations[l][u]);
        }
    }
    return current[0];
}

std::vector<double> forward_batch(const ModelWeights& model, const DataTable& table) {
    std::vector<double> outputs;
    outputs.reserve(table.n_rows());
    for (const auto& row : table.rows) {
        outputs.push_back(forward(model, row));
    }
    return outputs;
}

double log_loss(const ModelWeights& model, const Matrix& rows, std::span<const int> labels) {
    if (rows.empty() || rows.size() != labels.size()) {
        throw std::invalid_argument("log_loss needs matching non-empty rows and labels");
    }
    if (model.layers.back().activation != Activation::kSigmoid) {
        throw std::invalid_argument("log loss requires a sigmoid output head");
    }
    std::vector<double> buf_a;
    std::vector<double> buf_b;
    double total = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double z = final_preactivation(model, rows[i], buf_a, buf_b);
        total += softplus(z) - static_cast<double>(labels[i]) * z;
    }
    return total / static_cast<double>(rows.size());
}

std::pair<double, std::vector<LayerGradients>> log_loss_gradients(const ModelWeights& model,
                                                                  const Matrix& rows,
                                                                  std::span<const int> labels) {
    if (rows.empty() || rows.size() != labels.size()) {
        throw std::invalid_argument("log_loss_gradients needs matching non-empty rows and labels");
    }
    if (model.layers.back().activation != Activation::kSigmoid) {
        throw std::invalid_argument("log loss requires a sigmoid output head");
    }
    const std::size_t n_layers = model.layers.size();
    std::vector<LayerGradients> grads = zero_gradients(model);
    const double inv_batch = 1.0 / static_cast<double>(rows.size());

    std::vector<std::vector<double>> pre(n_layers);
    std::vector<std::vector<double>> post(n_layers);
    std::vector<double> delta;
    std::vector<double> delta_prev;
    double total_loss = 0.0;

    for (std::size_t i = 0; i < rows.size(); ++i) {
        check_input_dimension(model, rows[i].size());
        // Forward pass, keeping pre- and post-activations per layer.
        std::span<const double> input = rows[i];
        for (std::size_t l = 0; l < n_layers; ++l) {
            layer_preactivation(model.layers[l], input, pre[l]);
            post[l].resize(pre[l].size());
            for (std::size_t u = 0; u < pre[l].size(); ++u) {
                post[l][u] = apply_activation(model.layers[l].activation, pre[l][u]);
            }
            input = post[l];
        }
        const double z = pre[n_layers - 1][0];
        const double y = static_cast<double>(labels[i]);
        total_loss += softplus(z) - y * z;

        // d(loss_i)/dz for the sigmoid head, averaged over the batch.
        delta.assign(1, (stable_sigmoid(z) - y) * inv_batch);

        for (std::size_t l = n_layers; l-- > 0;) {
            const Layer& layer = model.layers[l];
            std::span<const double> below = (l == 0) ? std::span<const double>(rows[i])
                                                     : std::span<const double>(post[l - 1]);
            for (std::size_t u = 0; u < layer.out_dim(); ++u) {
                const double d = delta[u];
                if (d == 0.0) {
                    continue;
                }
                grads[l].bias[u] += d;
                std::vector<double>& grad_row = grads[l].weights[u];
                for (std::size_t c = 0; c < layer.in_dim(); ++c) {
                    grad_row[c] += d * below[c];
                }
            }
            if (l == 0) {
                break;
            }
            delta_prev.assign(layer.in_dim(), 0.0);
            for (std::size_t u = 0; u < layer.out_dim(); ++u) {
                const double d = delta[u];
                if (d == 0.0) {
                    continue;
                }
                const std::vector<double>& row = layer.weights[u];
                for (std::size_t c = 0; c < layer.in_dim(); ++c) {
                    delta_prev[c] += row[c] * d;
                }
            }
            for (std::size_t c = 0; c < layer.in_dim(); ++c) {
                delta_prev[c] *= activation_derivative(model.layers[l - 1].activation,
                                                       pre[l - 1][c]);
            }
            delta.swap(delta_prev);
        }
    }
    return {total_loss * inv_batch, std::move(grads)};
}

ModelWeights init_model(std::size_t n_inputs, const std::vector<std::size_t>& hidden,
                        std::uint64_t seed) {
    if (n_inputs < 1) {
        throw std::invalid_argument("init_model requires at least one input");
    }
    for (std::size_t h : hidden) {
        if (h < 1) {
            throw std::invalid_argument("hidden layer sizes must be >= 1");
        }
    }
    ModelWeights model;
    Rng rng(seed);
    std::size_t fan_in = n_inputs;
    std::vector<std::size_t> out_dims(hidden);
    out_dims.push_back(1);
    for (std::size_t l = 0; l < out_dims.size(); ++l) {
        Layer layer;
        const std::size_t fan_out = out_dims[l];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        layer.weights.assign(fan_out, std::vector<double>(fan_in));
        for (auto& row : layer.weights) {
            for (double& w : row) {
                w = (2.0 * rng.next_double() - 1.0) * limit;
            }
        }
        layer.bias.assign(fan_out, 0.0);
        layer.activation = (l + 1 == out_dims.size()) ? Activation::kSigmoid : Activation::kRelu;
        model.layers.push_back(std::move(layer));
        fan_in = fan_out;
    }
    return model;
}

ModelWeights train(const DataTable& table, const std::vector<std::size_t>& hidden,
                   std::size_t epochs, double learning_rate, std::uint64_t seed) {
    if (!table.labels.has_value()) {
        throw std::invalid_argument("training requires a labeled table");
    }
    if (table.n_rows() == 0) {
        throw std::invalid_argument("training requires a non-empty table");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning rate must be positive and finite");
    }
    constexpr std::size_t kBatchSize = 64;

    ModelWeights model = init_model(table.n_vars(), hidden, seed);
    const std::vector<int>& labels = *table.labels;
    const std::size_t n = table.n_rows();

    Rng shuffle_rng(splitmix64(seed) ^ 0x5851f42d4c957f2dULL);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Matrix batch_rows;
    std::vector<int> batch_labels;

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i = n - 1; i > 0; --i) {
            std::swap(order[i], order[shuffle_rng.next_index(i + 1)]);
        }
        for (std::size_t start = 0; start < n; start += kBatchSize) {
            const std::size_t stop = std::min(start + kBatchSize, n);
            batch_rows.clear();
            batch_labels.clear();
            for (std::size_t k = start; k < stop; ++k) {
                batch_rows.push_back(table.rows[order[k]]);
                batch_labels.push_back(labels[order[k]]);
            }
            auto [loss, grads] = log_loss_gradients(model, batch_rows, batch_labels);
            (void)loss;
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                Layer& layer = model.layers[l];
                for (std::size_t u = 0; u < layer.out_dim(); ++u) {
                    std::vector<double>& row = layer.weights[u];
                    const std::vector<double>& grad_row = grads[l].weights[u];
                    for (std::size_t c = 0; c < row.size(); ++c) {
                        row[c] -= learning_rate * grad_row[c];
                    }
                    layer.bias[u] -= learning_rate * grads[l].bias[u];
                }
            }
        }
    }
    return model;
}

void save_model(const ModelWeights& model, const std::filesystem::path& path) {
    validate_model(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    }
    std::ostringstream text;
    text << "annmodel v1\n";
    text << "layers " << model.layers.size() << '\n';
    for (const Layer& layer : model.layers) {
        text << "layer " << layer.out_dim() << ' ' << layer.in_dim() << ' '
             << activation_tag(layer.activation) << '\n';
        for (const auto& row : layer.weights) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c > 0) {
                    text << ' ';
                }
                text << format_full(row[c]);
            }
            text << '\n';
        }
        for (std::size_t u = 0; u < layer.bias.size(); ++u) {
            if (u > 0) {
                text << ' ';
            }
            text << format_full(layer.bias[u]);
        }
        text << '\n';
    }
    out << text.str();
    if (!out) {
        throw std::runtime_error("failed writing '" + path.string() + "'");
    }
}

ModelWeights load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    }
    const auto fail = [&path](const std::string& why) -> std::runtime_error {
        return std::runtime_error(path.string() + ": " + why);
    };
    auto next_token = [&in, &fail](const char* what) {
        std::string token;
        if (!(in >> token)) {
            throw fail(std::string("unexpected end of file, expected ") + what);
        }
        return token;
    };
    auto next_count = [&next_token, &fail](const char* what) {
        const std::string token = next_token(what);
        try {
            const long long value = std::stoll(token);
            if (value < 0) {
                throw std::out_of_range("negative");
            }
            return static_cast<std::size_t>(value);
        } catch (const std::exception&) {
            throw fail("'" + token + "' is not a valid " + what);
        }
    };
    auto next_value = [&next_token, &fail](const char* what) {
        const std::string token = next_token(what);
        try {
            return parse_double(token);
        } catch (const std::exception& e) {
            throw fail(std::string(what) + ": " + e.what());
        }
    };

    if (next_token("magic") != "annmodel" || next_token("version") != "v1") {
        throw fail("not an annmodel v1 file");
    }
    if (next_token("keyword") != "layers") {
        throw fail("expected 'layers'");
    }
    const std::size_t n_layers = next_count("layer count");
    if (n_layers == 0) {
        throw fail("model must have at least one layer");
    }
    ModelWeights model;
    for (std::size_t l = 0; l < n_layers; ++l) {
        if (next_token("keyword") != "layer") {
            throw fail("expected 'layer'");
        }
        Layer layer;
        const std::size_t out_dim = next_count("output dimension");
        const std::size_t in_dim = next_count("input dimension");
        try {
            layer.activation = activation_from_tag(next_token("activation"));
        } catch (const std::exception& e) {
            throw fail(e.what());
        }
        layer.weights.assign(out_dim, std::vector<double>(in_dim));
        for (auto& row : layer.weights) {
            for (double& w : row) {
                w = next_value("weight");
            }
        }
        layer.bias.resize(out_dim);
        for (double& b : layer.bias) {
            b = next_value("bias");
        }
        model.layers.push_back(std::move(layer));
    }
    std::string trailing;
    if (in >> trailing) {
        throw fail("unexpected trailing content '" + trailing + "'");
    }
    try {
        validate_model(model);
    } catch (const std::exception& e) {
        throw fail(e.what());
    }
    return model;
}

}  // namespace shapstab
