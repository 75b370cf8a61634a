#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "neat/characterize.hpp"
#include "neat/model.hpp"

namespace neat {

enum class ScheduleMode { homogeneous, heterogeneous };

/// How a layer's weight range is tied to g_on.
///  network: the largest |w| over all layers maps to g_on in every layer, so
///           a layer with small weights gets a proportionally smaller share
///           of the conductance range and reaches full coverage at a lower Vg.
///  layer:   each layer's own max |w| maps to g_on.
enum class ScaleAnchor { network, layer };

enum class EntryFlag {
    none,
    first_covers, // the lowest grid value already covers the layer
    never_covers  // no grid value covers the layer; grid max assigned
};

struct ScheduleEntry {
    double v_g = 1.0;
    double w_cut = 0.0;
    double w_anchor = 1.0; // weight magnitude mapped to g_on for this layer
    EntryFlag flag = EntryFlag::none;
};

struct VgSchedule {
    ScheduleMode mode = ScheduleMode::homogeneous;
    ScaleAnchor anchor = ScaleAnchor::network;
    std::vector<ScheduleEntry> entries; // one per layer
    std::vector<double> search_grid;
};

/// 0.70, 0.75, ..., 1.00
std::vector<double> default_vg_grid();

/// Largest |w| over every layer of the model.
double network_weight_range(const Model& model);

/// Weight magnitude that maps to g_on for layer `l` under the anchor rule.
double layer_anchor(const Model& model, std::size_t l, ScaleAnchor anchor);

/// Per-layer gate-voltage search: scan the ascending grid and stop at the
/// first value whose w_cut reaches w_r; the value before it is assigned.
/// The first grid value is used (flagged) if it already covers, and the last
/// one (flagged) if none does.
ScheduleEntry search_layer_vg(double w_r, std::span<const double> grid,
                              const std::function<double(double)>& wcut_of);

VgSchedule search_heterogeneous_vg(const Model& model, const CutoffTable& table,
                                   std::span<const double> grid, const MemristorParams& m,
                                   ScaleAnchor anchor = ScaleAnchor::network);

/// Every layer at v_g, each with its own w_cut.
VgSchedule homogeneous_schedule(const Model& model, const CutoffTable& table, double v_g,
                                std::span<const double> grid, const MemristorParams& m,
                                ScaleAnchor anchor = ScaleAnchor::network);

/// Moves every entry one grid step down (clamped at the grid minimum) and
/// recomputes its w_cut.
VgSchedule shift_schedule(const VgSchedule& schedule, const CutoffTable& table,
                          const MemristorParams& m);

std::string to_string(ScheduleMode mode);
std::string to_string(ScaleAnchor anchor);
std::string to_string(EntryFlag flag);
ScheduleMode parse_schedule_mode(const std::string& s);
ScaleAnchor parse_scale_anchor(const std::string& s);
EntryFlag parse_entry_flag(const std::string& s);

}  // namespace neat
