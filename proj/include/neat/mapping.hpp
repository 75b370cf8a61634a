#pragma once

#include <span>
#include <vector>

#include "neat/characterize.hpp"
#include "neat/device.hpp"

namespace neat {

/// Linear weight -> conductance scale of one layer. w_r maps to g_on,
/// zero maps to g_off. k_readout multiplies sensed differential currents
/// on the way back to weight units (1 for an ideal device).
struct LayerScale {
    double w_r = 1.0;
    double s = 0.0;
    double k_readout = 1.0;
    double g_off = 0.0;
    double g_on = 0.0;
};

/// Signed weight as two columns; the unused side sits at g_off.
struct DifferentialPair {
    double g_plus = 0.0;
    double g_minus = 0.0;
};

struct WcutSpec {
    double v_g = 0.0;
    double w_cut = 0.0;
    std::optional<double> g_m_cutoff;
};

/// Scale anchored at max |w| of the given weights. Throws
/// DegenerateLayerError when every weight is zero.
LayerScale layer_scale(std::span<const double> weights, const MemristorParams& m);

/// Scale anchored at an explicit weight range (e.g. a network-wide maximum).
LayerScale scale_for_range(double w_r, const MemristorParams& m);

/// w_cut = clamp(w_r (cutoff - g_off) / (g_on - g_off), 0, w_r); zero when
/// the table has no cutoff at v_g. Throws LookupError if v_g is absent.
WcutSpec wcut_from_vg(double v_g, const LayerScale& scale, const CutoffTable& table);

/// Hard projection onto [-w_cut, w_cut].
std::vector<double> clip_weights(std::span<const double> weights, double w_cut);
void clip_weights_inplace(std::span<double> weights, double w_cut);
inline double clip_weight(double w, double w_cut) {
    return w > w_cut ? w_cut : (w < -w_cut ? -w_cut : w);
}

/// Requires |w| <= w_r (RangeError otherwise).
DifferentialPair weight_to_conductance(double w, const LayerScale& scale);

double conductance_to_weight(const DifferentialPair& pair, const LayerScale& scale);

}  // namespace neat
