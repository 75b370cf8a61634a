#pragma once

#include <vector>

#include <Eigen/Dense>

#include "neat/crossbar.hpp"
#include "neat/dataset.hpp"
#include "neat/model.hpp"
#include "neat/schedule.hpp"

namespace neat {

struct MappingOptions {
    std::size_t tile_rows = 64;
    std::size_t tile_cols = 64;
    double v_supply = 0.5;
    double activation_percentile = 99.9; // of |layer input| on the calibration set
};

struct MappedLayer {
    CrossbarTileSet tiles;
    Eigen::VectorXd biases; // applied digitally
};

struct CrossbarNetwork {
    std::vector<MappedLayer> layers;
    DeviceConfig device;
};

/// Programs every layer at its scheduled Vg and w_cut. Each layer's
/// activation scale a_max is taken from its inputs on `calibration`.
CrossbarNetwork map_network(const Model& model, const VgSchedule& schedule, const Dataset& calibration,
                            const DeviceConfig& device, const MappingOptions& options = {});

/// Logits for each row of x. Signed layer inputs are applied in two passes
/// (positive and negative parts) and subtracted.
Eigen::MatrixXd crossbar_forward(const CrossbarNetwork& net, const Eigen::MatrixXd& x);

double evaluate_crossbar(const CrossbarNetwork& net, const Dataset& data);

struct InferenceEnergy {
    std::vector<double> per_layer; // J per inference, averaged over the samples
    double total = 0.0;
};

InferenceEnergy inference_energy(const CrossbarNetwork& net, const Eigen::MatrixXd& x,
                                 const EnergyConfig& energy);

}  // namespace neat
