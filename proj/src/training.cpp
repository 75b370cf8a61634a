#include "neat/training.hpp"

#include <span>

#include "neat/errors.hpp"
#include "neat/mapping.hpp"
#include "neat/numeric.hpp"

namespace neat {

namespace {

void check_coverage(const Model& model, const VgSchedule& schedule) {
    if (schedule.entries.size() != model.layers.size()) {
        throw DomainError("schedule has " + std::to_string(schedule.entries.size()) +
                          " entries for a model with " + std::to_string(model.layers.size()) + " layers");
    }
}

}  // namespace

LinearFraction linear_fraction(const Model& model, const VgSchedule& schedule) {
    check_coverage(model, schedule);
    LinearFraction f;
    std::size_t inside_total = 0;
    std::size_t total = 0;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& w = model.layers[l].weights;
        const double w_cut = schedule.entries[l].w_cut;
        std::size_t inside = 0;
        for (Eigen::Index k = 0; k < w.size(); ++k) inside += std::abs(w.data()[k]) <= w_cut ? 1 : 0;
        f.per_layer.push_back(static_cast<double>(inside) / static_cast<double>(w.size()));
        inside_total += inside;
        total += static_cast<std::size_t>(w.size());
    }
    f.overall = total == 0 ? 1.0 : static_cast<double>(inside_total) / static_cast<double>(total);
    return f;
}

void apply_clip(Model& model, const VgSchedule& schedule) {
    check_coverage(model, schedule);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto& w = model.layers[l].weights;
        clip_weights_inplace(std::span<double>(w.data(), static_cast<std::size_t>(w.size())),
                             schedule.entries[l].w_cut);
    }
}

IterativeResult iterative_train(Model model, const VgSchedule& schedule, const Dataset& data,
                                const IterativeConfig& config) {
    check_coverage(model, schedule);
    IterativeResult result;
    std::vector<double> losses;
    for (std::size_t n = 0; n < config.iterations; ++n) {
        IterationRecord rec;
        rec.iteration = n + 1;
        rec.fraction_before_clip = linear_fraction(model, schedule).overall;
        apply_clip(model, schedule);
        TrainConfig tc = config.train;
        tc.seed = mix_seed(config.train.seed, n);
        model = train(std::move(model), data, tc, &losses);

        rec.loss = losses.empty() ? 0.0 : losses.back();
        rec.train_accuracy = accuracy(model, data);
        rec.linear_fraction = linear_fraction(model, schedule).overall;
        result.history.push_back(rec);
    }
    result.model = std::move(model);
    return result;
}

}  // namespace neat
