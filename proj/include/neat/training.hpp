#pragma once

#include <vector>

#include "neat/dataset.hpp"
#include "neat/model.hpp"
#include "neat/schedule.hpp"

namespace neat {

struct LinearFraction {
    std::vector<double> per_layer; // share of weights with |w| <= w_cut
    double overall = 1.0;          // over all weights of the model
};

LinearFraction linear_fraction(const Model& model, const VgSchedule& schedule);

/// Projects every layer's weights onto [-w_cut, w_cut]; biases untouched.
void apply_clip(Model& model, const VgSchedule& schedule);

struct IterativeConfig {
    TrainConfig train{.learning_rate = 1e-5, .epochs = 2};
    std::size_t iterations = 30;
};

struct IterationRecord {
    std::size_t iteration = 0;
    double fraction_before_clip = 1.0; // weights inside w_cut entering the iteration
    double loss = 0.0;            // mean loss of the last epoch
    double train_accuracy = 0.0;  // software accuracy after the training step
    double linear_fraction = 1.0; // after the training step
};

struct IterativeResult {
    Model model;
    std::vector<IterationRecord> history;
};

/// Repeats `iterations` times: clip to the schedule, then train for a few
/// epochs. Iteration n trains with seed mix_seed(train.seed, n).
IterativeResult iterative_train(Model model, const VgSchedule& schedule, const Dataset& data,
                                const IterativeConfig& config);

}  // namespace neat
