#include "neat/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "neat/errors.hpp"

namespace neat {

LayerScale layer_scale(std::span<const double> weights, const MemristorParams& m) {
    double w_r = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w)) throw DomainError("layer_scale: non-finite weight");
        w_r = std::max(w_r, std::abs(w));
    }
    if (w_r == 0.0) throw DegenerateLayerError("layer_scale: all weights are zero");
    return scale_for_range(w_r, m);
}

LayerScale scale_for_range(double w_r, const MemristorParams& m) {
    validate(m);
    if (!(w_r > 0.0) || !std::isfinite(w_r)) {
        throw DegenerateLayerError("scale_for_range: weight range must be > 0");
    }
    LayerScale scale;
    scale.w_r = w_r;
    scale.s = (m.g_on - m.g_off) / w_r;
    scale.g_off = m.g_off;
    scale.g_on = m.g_on;
    return scale;
}

WcutSpec wcut_from_vg(double v_g, const LayerScale& scale, const CutoffTable& table) {
    const CutoffEntry& e = table.at(v_g);
    WcutSpec spec;
    spec.v_g = e.v_g;
    spec.g_m_cutoff = e.g_m_cutoff;
    if (!e.g_m_cutoff) {
        spec.w_cut = 0.0;
        return spec;
    }
    const double frac = (*e.g_m_cutoff - scale.g_off) / (scale.g_on - scale.g_off);
    spec.w_cut = std::clamp(scale.w_r * frac, 0.0, scale.w_r);
    return spec;
}

std::vector<double> clip_weights(std::span<const double> weights, double w_cut) {
    std::vector<double> out(weights.begin(), weights.end());
    clip_weights_inplace(out, w_cut);
    return out;
}

void clip_weights_inplace(std::span<double> weights, double w_cut) {
    if (!(w_cut >= 0.0)) throw DomainError("clip_weights: w_cut must be >= 0");
    for (double& w : weights) w = clip_weight(w, w_cut);
}

DifferentialPair weight_to_conductance(double w, const LayerScale& scale) {
    if (!std::isfinite(w)) throw DomainError("weight_to_conductance: non-finite weight");
    const double mag = std::abs(w);
    if (mag > scale.w_r) {
        throw RangeError("weight_to_conductance: |w| = " + std::to_string(mag) +
                         " exceeds w_r = " + std::to_string(scale.w_r));
    }
    const double g = std::min(scale.g_off + mag * scale.s, scale.g_on);
    if (w > 0.0) return {g, scale.g_off};
    if (w < 0.0) return {scale.g_off, g};
    return {scale.g_off, scale.g_off};
}

double conductance_to_weight(const DifferentialPair& pair, const LayerScale& scale) {
    return (pair.g_plus - pair.g_minus) / scale.s;
}

}  // namespace neat
