#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "neat/dataset.hpp"

namespace neat {

/// y = W x + b with W stored out_dim x in_dim.
struct DenseLayer {
    Eigen::MatrixXd weights;
    Eigen::VectorXd biases;

    std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
    std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Dense layers with ReLU between them and a softmax cross-entropy head.
struct Model {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const { return layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.back().out_dim(); }
    /// Throws DomainError on mismatched dims or non-finite parameters.
    void validate() const;
};

/// He-normal initialization; dims = {input, hidden..., classes}.
Model make_model(std::span<const std::size_t> dims, std::uint64_t seed);

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

/// Logits for each row of x.
Eigen::MatrixXd forward(const Model& model, const Eigen::MatrixXd& x);

/// Input of every layer (post-ReLU for all but the first) for each row of x.
std::vector<Eigen::MatrixXd> layer_inputs(const Model& model, const Eigen::MatrixXd& x);

/// Mean softmax cross-entropy over the rows of x; fills grads when given.
double loss_and_gradients(const Model& model, const Eigen::MatrixXd& x, std::span<const int> labels,
                          Gradients* grads);

std::vector<int> predict(const Model& model, const Eigen::MatrixXd& x);
double accuracy(std::span<const int> predicted, std::span<const int> labels);
double accuracy(const Model& model, const Dataset& data);

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Mini-batch training with Adam. Batches follow a shuffle drawn from a
/// stream seeded by (seed, epoch); parameter updates are serial, so the
/// result is a pure function of the inputs. Throws TrainingDivergedError on
/// a non-finite loss.
Model train(Model model, const Dataset& data, const TrainConfig& config,
            std::vector<double>* epoch_loss = nullptr);

}  // namespace neat
