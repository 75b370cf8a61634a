#include "neat/crossbar.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "neat/errors.hpp"
#include "neat/numeric.hpp"

namespace neat {

namespace {

void check_activations(const CrossbarTileSet& tiles, std::span<const double> a) {
    if (a.size() != tiles.rows) {
        throw DomainError("mvm: activation length " + std::to_string(a.size()) +
                          " does not match layer input dimension " + std::to_string(tiles.rows));
    }
    for (double x : a) {
        if (!std::isfinite(x) || x < 0.0) throw DomainError("mvm: activations must be finite and >= 0");
    }
}

std::vector<double> input_voltages(const CrossbarTileSet& tiles, std::span<const double> a) {
    std::vector<double> v(a.size());
    const double vpu = tiles.volts_per_unit();
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = std::clamp(a[i] * vpu, 0.0, tiles.v_supply);
    return v;
}

// Per-cell currents for both columns of every logical output, laid out
// column-major so each column's rows are contiguous for the reduction.
struct CellCurrents {
    std::vector<double> plus;
    std::vector<double> minus;
};

template <typename CellFn>
CellCurrents cell_currents(const CrossbarTileSet& tiles, CellFn&& fn) {
    const std::size_t n = tiles.rows * tiles.cols;
    CellCurrents c{std::vector<double>(n), std::vector<double>(n)};
    for (const Tile& t : tiles.tiles) {
        for (std::size_t r = 0; r < t.rows; ++r) {
            const std::size_t row = t.row0 + r;
            for (std::size_t k = 0; k < t.cols; ++k) {
                const std::size_t col = t.col0 + k;
                const DifferentialPair& p = t.cell(r, k);
                c.plus[col * tiles.rows + row] = fn(p.g_plus, row);
                c.minus[col * tiles.rows + row] = fn(p.g_minus, row);
            }
        }
    }
    return c;
}

MvmResult reduce(const CrossbarTileSet& tiles, const CellCurrents& c, double gain) {
    MvmResult out;
    out.outputs.resize(static_cast<Eigen::Index>(tiles.cols));
    out.column_currents.resize(static_cast<Eigen::Index>(tiles.cols));
    const double to_units = gain / (tiles.volts_per_unit() * tiles.scale.s);
    for (std::size_t j = 0; j < tiles.cols; ++j) {
        std::span<const double> plus(c.plus.data() + j * tiles.rows, tiles.rows);
        std::span<const double> minus(c.minus.data() + j * tiles.rows, tiles.rows);
        const double i_diff = pairwise_sum(plus) - pairwise_sum(minus);
        out.column_currents[static_cast<Eigen::Index>(j)] = i_diff;
        out.outputs[static_cast<Eigen::Index>(j)] = i_diff * to_units;
    }
    return out;
}

// Device currents for every cell. Cells pinned at g_off repeat along a row,
// so those are solved once per row.
CellCurrents device_currents(const CrossbarTileSet& tiles, std::span<const double> v,
                             const DeviceConfig& device) {
    std::vector<double> off(tiles.rows, -1.0);
    return cell_currents(tiles, [&](double g, std::size_t row) {
        if (g == tiles.scale.g_off) {
            if (off[row] < 0.0) off[row] = solve_synapse(g, v[row], tiles.v_g, device).current;
            return off[row];
        }
        return solve_synapse(g, v[row], tiles.v_g, device).current;
    });
}

EnergyReport energy_from_currents(const CrossbarTileSet& tiles, std::span<const double> v,
                                  const CellCurrents& c, const EnergyConfig& energy) {
    if (!(energy.pulse_width > 0.0)) throw DomainError("energy: pulse_width must be > 0");
    if (!(energy.c_gate >= 0.0)) throw DomainError("energy: c_gate must be >= 0");
    EnergyReport report;
    report.per_tile.reserve(tiles.tiles.size());
    std::vector<double> cell_energy;
    for (const Tile& t : tiles.tiles) {
        cell_energy.clear();
        std::size_t active_rows = 0;
        for (std::size_t r = 0; r < t.rows; ++r) {
            const std::size_t row = t.row0 + r;
            if (v[row] > 0.0) ++active_rows;
            for (std::size_t k = 0; k < t.cols; ++k) {
                const std::size_t idx = (t.col0 + k) * tiles.rows + row;
                cell_energy.push_back(v[row] * c.plus[idx] * energy.pulse_width);
                cell_energy.push_back(v[row] * c.minus[idx] * energy.pulse_width);
            }
        }
        const double resistive = pairwise_sum(cell_energy);
        const double gate = static_cast<double>(active_rows) * energy.c_gate * tiles.v_g * tiles.v_g;
        report.resistive += resistive;
        report.gate += gate;
        report.per_tile.push_back(resistive + gate);
    }
    report.total = pairwise_sum(report.per_tile);
    return report;
}

}  // namespace

std::size_t CrossbarTileSet::tile_grid_rows() const { return (rows + tile_rows - 1) / tile_rows; }
std::size_t CrossbarTileSet::tile_grid_cols() const { return (cols + tile_cols - 1) / tile_cols; }

const DifferentialPair& CrossbarTileSet::cell(std::size_t row, std::size_t col) const {
    const std::size_t ti = row / tile_rows;
    const std::size_t tj = col / tile_cols;
    const Tile& t = tiles[ti * tile_grid_cols() + tj];
    return t.cell(row - t.row0, col - t.col0);
}

CrossbarTileSet program(const Eigen::MatrixXd& weights, double v_g, double w_cut,
                        const LayerScale& scale, const ProgramOptions& options) {
    if (weights.rows() == 0 || weights.cols() == 0) throw DomainError("program: empty weight matrix");
    if (options.tile_rows == 0 || options.tile_cols == 0) throw DomainError("program: zero tile size");
    if (!(options.a_max > 0.0)) throw DomainError("program: a_max must be > 0");
    if (!(options.v_supply > 0.0)) throw DomainError("program: v_supply must be > 0");
    if (!(w_cut >= 0.0)) throw DomainError("program: w_cut must be >= 0");

    CrossbarTileSet ts;
    ts.rows = static_cast<std::size_t>(weights.rows());
    ts.cols = static_cast<std::size_t>(weights.cols());
    ts.tile_rows = options.tile_rows;
    ts.tile_cols = options.tile_cols;
    ts.v_g = v_g;
    ts.w_cut = std::min(w_cut, scale.w_r);
    ts.scale = scale;
    ts.a_max = options.a_max;
    ts.v_supply = options.v_supply;

    for (std::size_t ti = 0; ti < ts.tile_grid_rows(); ++ti) {
        for (std::size_t tj = 0; tj < ts.tile_grid_cols(); ++tj) {
            Tile t;
            t.row0 = ti * ts.tile_rows;
            t.col0 = tj * ts.tile_cols;
            t.rows = std::min(ts.tile_rows, ts.rows - t.row0);
            t.cols = std::min(ts.tile_cols, ts.cols - t.col0);
            t.cells.reserve(t.rows * t.cols);
            for (std::size_t r = 0; r < t.rows; ++r) {
                for (std::size_t c = 0; c < t.cols; ++c) {
                    const double w = weights(static_cast<Eigen::Index>(t.row0 + r),
                                             static_cast<Eigen::Index>(t.col0 + c));
                    const double clipped = clip_weight(w, ts.w_cut);
                    if (clipped != w) ++ts.clipped_count;
                    t.cells.push_back(weight_to_conductance(clipped, scale));
                }
            }
            ts.tiles.push_back(std::move(t));
        }
    }
    ts.clipped_fraction =
        static_cast<double>(ts.clipped_count) / static_cast<double>(ts.rows * ts.cols);
    return ts;
}

MvmResult mvm_ideal(const CrossbarTileSet& tiles, std::span<const double> activations) {
    check_activations(tiles, activations);
    const double vpu = tiles.volts_per_unit();
    auto c = cell_currents(tiles, [&](double g, std::size_t row) { return g * activations[row] * vpu; });
    return reduce(tiles, c, 1.0);
}

MvmResult mvm_nonideal(const CrossbarTileSet& tiles, std::span<const double> activations,
                       const DeviceConfig& device, const EnergyConfig* energy) {
    check_activations(tiles, activations);
    const auto v = input_voltages(tiles, activations);
    const auto c = device_currents(tiles, v, device);
    MvmResult out = reduce(tiles, c, tiles.scale.k_readout);
    if (energy) out.energy = energy_from_currents(tiles, v, c, *energy).total;
    return out;
}

MvmResult mvm_linearized(const CrossbarTileSet& tiles, std::span<const double> activations,
                         const DeviceConfig& device) {
    check_activations(tiles, activations);
    const auto v = input_voltages(tiles, activations);
    auto c = cell_currents(tiles, [&](double g, std::size_t row) {
        return effective_conductance(g, 0.0, tiles.v_g, device) * v[row];
    });
    return reduce(tiles, c, tiles.scale.k_readout);
}

std::vector<double> column_relative_deviation(const CrossbarTileSet& tiles,
                                              std::span<const double> activations,
                                              const MvmResult& a, const MvmResult& b,
                                              const DeviceConfig& device) {
    check_activations(tiles, activations);
    const auto v = input_voltages(tiles, activations);
    auto c = cell_currents(tiles, [&](double g, std::size_t row) {
        return effective_conductance(g, 0.0, tiles.v_g, device) * v[row];
    });
    const double to_units = tiles.scale.k_readout / (tiles.volts_per_unit() * tiles.scale.s);
    std::vector<double> dev(tiles.cols, 0.0);
    for (std::size_t j = 0; j < tiles.cols; ++j) {
        std::span<const double> plus(c.plus.data() + j * tiles.rows, tiles.rows);
        std::span<const double> minus(c.minus.data() + j * tiles.rows, tiles.rows);
        const double magnitude = (pairwise_sum(plus) + pairwise_sum(minus)) * to_units;
        const auto jj = static_cast<Eigen::Index>(j);
        const double diff = std::abs(a.outputs[jj] - b.outputs[jj]);
        dev[j] = magnitude > 0.0 ? diff / magnitude : diff;
    }
    return dev;
}

EnergyReport mvm_energy(const CrossbarTileSet& tiles, std::span<const double> activations,
                        const EnergyConfig& energy, const DeviceConfig& device) {
    check_activations(tiles, activations);
    const auto v = input_voltages(tiles, activations);
    return energy_from_currents(tiles, v, device_currents(tiles, v, device), energy);
}

double readout_gain(double v_g, double w_cut, const LayerScale& scale, const DeviceConfig& device) {
    if (device.mode == DeviceMode::ideal_switch || w_cut <= 0.0) return 1.0;
    const double g_mid = std::min(scale.g_off + 0.5 * std::min(w_cut, scale.w_r) * scale.s, scale.g_on);
    const double dg = g_mid - scale.g_off;
    const double deff = effective_conductance(g_mid, 0.0, v_g, device) -
                        effective_conductance(scale.g_off, 0.0, v_g, device);
    if (!(dg > 0.0) || !(deff > 0.0)) return 1.0;
    return dg / deff;
}

std::string crossbar_to_json(const CrossbarTileSet& ts) {
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    j["rows"] = ts.rows;
    j["cols"] = ts.cols;
    j["tile_rows"] = ts.tile_rows;
    j["tile_cols"] = ts.tile_cols;
    j["v_g"] = ts.v_g;
    j["w_cut"] = ts.w_cut;
    j["a_max"] = ts.a_max;
    j["v_supply"] = ts.v_supply;
    j["scale"] = {{"w_r", ts.scale.w_r},
                  {"s", ts.scale.s},
                  {"k_readout", ts.scale.k_readout},
                  {"g_off", ts.scale.g_off},
                  {"g_on", ts.scale.g_on}};
    j["clipped_count"] = ts.clipped_count;
    auto tiles = nlohmann::ordered_json::array();
    for (const Tile& t : ts.tiles) {
        nlohmann::ordered_json jt;
        jt["row0"] = t.row0;
        jt["col0"] = t.col0;
        jt["rows"] = t.rows;
        jt["cols"] = t.cols;
        auto gp = nlohmann::ordered_json::array();
        auto gm = nlohmann::ordered_json::array();
        for (const auto& c : t.cells) {
            gp.push_back(c.g_plus);
            gm.push_back(c.g_minus);
        }
        jt["g_plus"] = std::move(gp);
        jt["g_minus"] = std::move(gm);
        tiles.push_back(std::move(jt));
    }
    j["tiles"] = std::move(tiles);
    return j.dump(2);
}

void write_crossbar_json(const std::filesystem::path& path, const CrossbarTileSet& tiles) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << crossbar_to_json(tiles) << '\n';
}

}  // namespace neat
