#include "neat/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "neat/errors.hpp"
#include "neat/numeric.hpp"

namespace neat {

namespace {

struct SplitInput {
    std::vector<double> pos;
    std::vector<double> neg;
    bool has_neg = false;
};

SplitInput split(const Eigen::MatrixXd& x, Eigen::Index row) {
    SplitInput s;
    s.pos.resize(static_cast<std::size_t>(x.cols()));
    s.neg.resize(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
        const double v = x(row, k);
        s.pos[static_cast<std::size_t>(k)] = v > 0.0 ? v : 0.0;
        s.neg[static_cast<std::size_t>(k)] = v < 0.0 ? -v : 0.0;
        s.has_neg = s.has_neg || v < 0.0;
    }
    return s;
}

// One layer applied to every row of h; the optional energy accumulator
// receives the per-row MVM energy.
Eigen::MatrixXd layer_forward(const MappedLayer& layer, const DeviceConfig& device, const Eigen::MatrixXd& h,
                              const EnergyConfig* energy, std::vector<double>* row_energy) {
    Eigen::MatrixXd out(h.rows(), static_cast<Eigen::Index>(layer.tiles.cols));
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        const SplitInput s = split(h, i);
        MvmResult r = mvm_nonideal(layer.tiles, s.pos, device, energy);
        Eigen::VectorXd y = r.outputs;
        double e = r.energy.value_or(0.0);
        if (s.has_neg) {
            MvmResult rn = mvm_nonideal(layer.tiles, s.neg, device, energy);
            y -= rn.outputs;
            e += rn.energy.value_or(0.0);
        }
        out.row(i) = (y + layer.biases).transpose();
        if (row_energy) (*row_energy)[static_cast<std::size_t>(i)] = e;
    }
    return out;
}

}  // namespace

CrossbarNetwork map_network(const Model& model, const VgSchedule& schedule, const Dataset& calibration,
                            const DeviceConfig& device, const MappingOptions& options) {
    model.validate();
    if (schedule.entries.size() != model.layers.size()) {
        throw DomainError("schedule does not cover every layer of the model");
    }
    if (calibration.size() == 0) throw DomainError("map_network: empty calibration set");
    if (!(options.activation_percentile > 0.0 && options.activation_percentile <= 100.0)) {
        throw DomainError("map_network: activation percentile must be in (0, 100]");
    }
    const auto inputs = layer_inputs(model, calibration.features);

    CrossbarNetwork net;
    net.device = device;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        const auto& entry = schedule.entries[l];
        const auto& in = inputs[l];
        std::vector<double> mags(static_cast<std::size_t>(in.size()));
        for (Eigen::Index k = 0; k < in.size(); ++k) mags[static_cast<std::size_t>(k)] = std::abs(in.data()[k]);
        double a_max = percentile(std::move(mags), options.activation_percentile);
        if (!(a_max > 0.0)) a_max = 1.0;

        LayerScale scale = scale_for_range(entry.w_anchor, device.memristor);
        scale.k_readout = readout_gain(entry.v_g, entry.w_cut, scale, device);

        ProgramOptions po;
        po.tile_rows = options.tile_rows;
        po.tile_cols = options.tile_cols;
        po.a_max = a_max;
        po.v_supply = options.v_supply;
        net.layers.push_back({program(layer.weights.transpose(), entry.v_g, entry.w_cut, scale, po),
                              layer.biases});
    }
    return net;
}

Eigen::MatrixXd crossbar_forward(const CrossbarNetwork& net, const Eigen::MatrixXd& x) {
    if (net.layers.empty()) throw DomainError("crossbar network has no layers");
    if (static_cast<std::size_t>(x.cols()) != net.layers.front().tiles.rows) {
        throw DomainError("crossbar_forward: input width does not match the first layer");
    }
    Eigen::MatrixXd h = x;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        h = layer_forward(net.layers[l], net.device, h, nullptr, nullptr);
        if (l + 1 < net.layers.size()) h = h.cwiseMax(0.0);
    }
    return h;
}

double evaluate_crossbar(const CrossbarNetwork& net, const Dataset& data) {
    const Eigen::MatrixXd logits = crossbar_forward(net, data.features);
    std::vector<int> pred(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index arg = 0;
        logits.row(i).maxCoeff(&arg);
        pred[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    return accuracy(pred, data.labels);
}

InferenceEnergy inference_energy(const CrossbarNetwork& net, const Eigen::MatrixXd& x,
                                 const EnergyConfig& energy) {
    if (net.layers.empty()) throw DomainError("crossbar network has no layers");
    if (x.rows() == 0) throw DomainError("inference_energy: no samples");
    InferenceEnergy report;
    Eigen::MatrixXd h = x;
    std::vector<double> row_energy(static_cast<std::size_t>(x.rows()));
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        h = layer_forward(net.layers[l], net.device, h, &energy, &row_energy);
        if (l + 1 < net.layers.size()) h = h.cwiseMax(0.0);
        report.per_layer.push_back(pairwise_sum(row_energy) / static_cast<double>(x.rows()));
    }
    report.total = pairwise_sum(report.per_layer);
    return report;
}

}  // namespace neat
