#include "neat/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "neat/errors.hpp"
#include "neat/mapping.hpp"
#include "neat/numeric.hpp"

namespace neat {

namespace {

constexpr double kGridTol = 1e-9;

void check_grid(std::span<const double> grid, const CutoffTable& table) {
    if (grid.empty()) throw DomainError("Vg search grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("Vg search grid must be strictly ascending");
        if (!table.contains(grid[i])) {
            throw LookupError("cutoff table has no entry for Vg = " + std::to_string(grid[i]));
        }
    }
}

std::size_t grid_index(std::span<const double> grid, double v_g) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (std::abs(grid[i] - v_g) <= kGridTol) return i;
    }
    throw LookupError("Vg = " + std::to_string(v_g) + " is not on the search grid");
}

double layer_max(const DenseLayer& layer) { return layer.weights.cwiseAbs().maxCoeff(); }

double wcut_at(double v_g, double w_anchor, const CutoffTable& table, const MemristorParams& m) {
    return wcut_from_vg(v_g, scale_for_range(w_anchor, m), table).w_cut;
}

}  // namespace

std::vector<double> default_vg_grid() { return inclusive_range(0.70, 1.00, 0.05); }

double network_weight_range(const Model& model) {
    double w = 0.0;
    for (const auto& layer : model.layers) w = std::max(w, layer_max(layer));
    if (!(w > 0.0)) throw DegenerateLayerError("every weight of the model is zero");
    return w;
}

double layer_anchor(const Model& model, std::size_t l, ScaleAnchor anchor) {
    if (l >= model.layers.size()) throw LookupError("layer index out of range");
    if (anchor == ScaleAnchor::network) return network_weight_range(model);
    const double w = layer_max(model.layers[l]);
    if (!(w > 0.0)) throw DegenerateLayerError("layer " + std::to_string(l) + " has only zero weights");
    return w;
}

ScheduleEntry search_layer_vg(double w_r, std::span<const double> grid,
                              const std::function<double(double)>& wcut_of) {
    if (grid.empty()) throw DomainError("Vg search grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w_cut = wcut_of(grid[i]);
        if (w_cut >= w_r) {
            if (i == 0) return {grid[0], w_cut, 0.0, EntryFlag::first_covers};
            return {grid[i - 1], wcut_of(grid[i - 1]), 0.0, EntryFlag::none};
        }
    }
    return {grid.back(), wcut_of(grid.back()), 0.0, EntryFlag::never_covers};
}

VgSchedule search_heterogeneous_vg(const Model& model, const CutoffTable& table,
                                   std::span<const double> grid, const MemristorParams& m,
                                   ScaleAnchor anchor) {
    model.validate();
    check_grid(grid, table);
    VgSchedule s;
    s.mode = ScheduleMode::heterogeneous;
    s.anchor = anchor;
    s.search_grid.assign(grid.begin(), grid.end());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const double w_anchor = layer_anchor(model, l, anchor);
        auto entry = search_layer_vg(layer_max(model.layers[l]), grid,
                                     [&](double v) { return wcut_at(v, w_anchor, table, m); });
        entry.w_anchor = w_anchor;
        s.entries.push_back(entry);
    }
    return s;
}

VgSchedule homogeneous_schedule(const Model& model, const CutoffTable& table, double v_g,
                                std::span<const double> grid, const MemristorParams& m,
                                ScaleAnchor anchor) {
    model.validate();
    check_grid(grid, table);
    const double v = grid[grid_index(grid, v_g)];
    VgSchedule s;
    s.mode = ScheduleMode::homogeneous;
    s.anchor = anchor;
    s.search_grid.assign(grid.begin(), grid.end());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const double w_anchor = layer_anchor(model, l, anchor);
        s.entries.push_back({v, wcut_at(v, w_anchor, table, m), w_anchor, EntryFlag::none});
    }
    return s;
}

VgSchedule shift_schedule(const VgSchedule& schedule, const CutoffTable& table, const MemristorParams& m) {
    check_grid(schedule.search_grid, table);
    VgSchedule out = schedule;
    for (auto& e : out.entries) {
        const std::size_t i = grid_index(out.search_grid, e.v_g);
        e.v_g = out.search_grid[i == 0 ? 0 : i - 1];
        e.w_cut = wcut_at(e.v_g, e.w_anchor, table, m);
    }
    return out;
}

std::string to_string(ScheduleMode mode) {
    return mode == ScheduleMode::homogeneous ? "homogeneous" : "heterogeneous";
}

std::string to_string(ScaleAnchor anchor) { return anchor == ScaleAnchor::network ? "network" : "layer"; }

std::string to_string(EntryFlag flag) {
    switch (flag) {
        case EntryFlag::first_covers: return "first_covers";
        case EntryFlag::never_covers: return "never_covers";
        default: return "none";
    }
}

ScheduleMode parse_schedule_mode(const std::string& s) {
    if (s == "homogeneous") return ScheduleMode::homogeneous;
    if (s == "heterogeneous") return ScheduleMode::heterogeneous;
    throw DomainError("unknown schedule mode '" + s + "'");
}

ScaleAnchor parse_scale_anchor(const std::string& s) {
    if (s == "network") return ScaleAnchor::network;
    if (s == "layer") return ScaleAnchor::layer;
    throw DomainError("unknown scale anchor '" + s + "'");
}

EntryFlag parse_entry_flag(const std::string& s) {
    if (s == "none") return EntryFlag::none;
    if (s == "first_covers") return EntryFlag::first_covers;
    if (s == "never_covers") return EntryFlag::never_covers;
    throw DomainError("unknown schedule flag '" + s + "'");
}

}  // namespace neat
