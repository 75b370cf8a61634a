#include "neat/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "neat/errors.hpp"
#include "neat/numeric.hpp"

namespace neat {

namespace {

void check_inputs(const Model& model, const Eigen::MatrixXd& x) {
    if (model.layers.empty()) throw DomainError("model has no layers");
    if (static_cast<std::size_t>(x.cols()) != model.input_dim()) {
        throw DomainError("input has " + std::to_string(x.cols()) + " features, model expects " +
                          std::to_string(model.input_dim()));
    }
}

Eigen::MatrixXd affine(const DenseLayer& l, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd z = x * l.weights.transpose();
    z.rowwise() += l.biases.transpose();
    return z;
}

}  // namespace

void Model::validate() const {
    if (layers.empty()) throw DomainError("model has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        if (layer.weights.size() == 0) throw DomainError("layer " + std::to_string(l) + " is empty");
        if (static_cast<std::size_t>(layer.biases.size()) != layer.out_dim()) {
            throw DomainError("layer " + std::to_string(l) + ": bias length mismatch");
        }
        if (l > 0 && layer.in_dim() != layers[l - 1].out_dim()) {
            throw DomainError("layer " + std::to_string(l) + ": input dim does not match previous layer");
        }
        if (!layer.weights.allFinite() || !layer.biases.allFinite()) {
            throw DomainError("layer " + std::to_string(l) + ": non-finite parameters");
        }
    }
}

Model make_model(std::span<const std::size_t> dims, std::uint64_t seed) {
    if (dims.size() < 2) throw DomainError("make_model: need at least input and output dims");
    Model m;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        if (dims[l] == 0 || dims[l + 1] == 0) throw DomainError("make_model: zero-width layer");
        std::mt19937_64 rng(mix_seed(seed, l));
        std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(dims[l])));
        DenseLayer layer;
        layer.weights.resize(static_cast<Eigen::Index>(dims[l + 1]), static_cast<Eigen::Index>(dims[l]));
        for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
            for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) layer.weights(i, j) = normal(rng);
        }
        layer.biases = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims[l + 1]));
        m.layers.push_back(std::move(layer));
    }
    return m;
}

Eigen::MatrixXd forward(const Model& model, const Eigen::MatrixXd& x) {
    check_inputs(model, x);
    Eigen::MatrixXd h = x;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        h = affine(model.layers[l], h);
        if (l + 1 < model.layers.size()) h = h.cwiseMax(0.0);
    }
    return h;
}

std::vector<Eigen::MatrixXd> layer_inputs(const Model& model, const Eigen::MatrixXd& x) {
    check_inputs(model, x);
    std::vector<Eigen::MatrixXd> inputs;
    inputs.push_back(x);
    for (std::size_t l = 0; l + 1 < model.layers.size(); ++l) {
        inputs.push_back(affine(model.layers[l], inputs.back()).cwiseMax(0.0));
    }
    return inputs;
}

double loss_and_gradients(const Model& model, const Eigen::MatrixXd& x, std::span<const int> labels,
                          Gradients* grads) {
    check_inputs(model, x);
    const auto n = x.rows();
    if (static_cast<std::size_t>(n) != labels.size() || n == 0) {
        throw DomainError("loss: label count does not match batch size");
    }
    const std::size_t depth = model.layers.size();

    // Forward, keeping each layer's input and pre-activation.
    std::vector<Eigen::MatrixXd> inputs{x};
    std::vector<Eigen::MatrixXd> pre;
    for (std::size_t l = 0; l < depth; ++l) {
        pre.push_back(affine(model.layers[l], inputs.back()));
        if (l + 1 < depth) inputs.push_back(pre.back().cwiseMax(0.0));
    }
    const Eigen::MatrixXd& logits = pre.back();
    const auto classes = logits.cols();

    Eigen::MatrixXd probs(n, classes);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= classes) throw DomainError("loss: label out of range");
        const double mx = logits.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp().matrix();
        const double z = e.sum();
        probs.row(i) = e / z;
        loss += -(logits(i, y) - mx - std::log(z));
    }
    loss /= static_cast<double>(n);
    if (!grads) return loss;

    grads->weights.assign(depth, {});
    grads->biases.assign(depth, {});
    Eigen::MatrixXd delta = probs;
    for (Eigen::Index i = 0; i < n; ++i) delta(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    delta /= static_cast<double>(n);
    for (std::size_t l = depth; l-- > 0;) {
        grads->weights[l] = delta.transpose() * inputs[l];
        grads->biases[l] = delta.colwise().sum().transpose();
        if (l == 0) break;
        delta = (delta * model.layers[l].weights).cwiseProduct(
            (pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
    return loss;
}

std::vector<int> predict(const Model& model, const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd logits = forward(model, x);
    std::vector<int> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index arg = 0;
        logits.row(i).maxCoeff(&arg);
        out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
    if (predicted.size() != labels.size() || labels.empty()) {
        throw DomainError("accuracy: size mismatch or empty set");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double accuracy(const Model& model, const Dataset& data) {
    return accuracy(predict(model, data.features), data.labels);
}

Model train(Model model, const Dataset& data, const TrainConfig& config, std::vector<double>* epoch_loss) {
    model.validate();
    if (data.size() == 0) throw DomainError("train: empty dataset");
    if (data.dims() != model.input_dim()) throw DomainError("train: dataset dims do not match model");
    if (config.batch_size == 0) throw DomainError("train: batch size must be >= 1");
    if (!(config.learning_rate >= 0.0)) throw DomainError("train: learning rate must be >= 0");

    const std::size_t depth = model.layers.size();
    std::vector<Eigen::MatrixXd> m_w(depth), v_w(depth);
    std::vector<Eigen::VectorXd> m_b(depth), v_b(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        const auto& L = model.layers[l];
        m_w[l] = v_w[l] = Eigen::MatrixXd::Zero(L.weights.rows(), L.weights.cols());
        m_b[l] = v_b[l] = Eigen::VectorXd::Zero(L.biases.size());
    }

    std::vector<std::size_t> order(data.size());
    std::uint64_t step = 0;
    Gradients g;
    if (epoch_loss) epoch_loss->clear();
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(mix_seed(config.seed, epoch));
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(start + config.batch_size, order.size());
            const auto b = static_cast<Eigen::Index>(end - start);
            Eigen::MatrixXd xb(b, data.features.cols());
            std::vector<int> yb(static_cast<std::size_t>(b));
            for (Eigen::Index i = 0; i < b; ++i) {
                const std::size_t src = order[start + static_cast<std::size_t>(i)];
                xb.row(i) = data.features.row(static_cast<Eigen::Index>(src));
                yb[static_cast<std::size_t>(i)] = data.labels[src];
            }
            const double loss = loss_and_gradients(model, xb, yb, &g);
            if (!std::isfinite(loss)) {
                throw TrainingDivergedError("train: non-finite loss at epoch " + std::to_string(epoch));
            }
            loss_sum += loss;
            ++batches;

            ++step;
            const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
            auto adam = [&](auto& param, auto& m, auto& v, const auto& grad) {
                m = config.beta1 * m + (1.0 - config.beta1) * grad;
                v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
                param.array() -= config.learning_rate * (m.array() / bc1) /
                                 ((v.array() / bc2).sqrt() + config.epsilon);
            };
            for (std::size_t l = 0; l < depth; ++l) {
                adam(model.layers[l].weights, m_w[l], v_w[l], g.weights[l]);
                adam(model.layers[l].biases, m_b[l], v_b[l], g.biases[l]);
            }
        }
        if (epoch_loss) epoch_loss->push_back(loss_sum / static_cast<double>(batches));
    }
    return model;
}

}  // namespace neat
