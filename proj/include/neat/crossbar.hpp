#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "neat/device.hpp"
#include "neat/mapping.hpp"

namespace neat {

/// One physical array. Cell (r, c) holds the differential pair for global
/// input row0 + r and output col0 + c; cells are stored row-major.
struct Tile {
    std::size_t row0 = 0;
    std::size_t col0 = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<DifferentialPair> cells;

    const DifferentialPair& cell(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
};

struct ProgramOptions {
    std::size_t tile_rows = 64;
    std::size_t tile_cols = 64;
    double a_max = 1.0;     // activation mapped to v_supply
    double v_supply = 0.5;
};

/// Programmed realization of one dense layer. Immutable after program().
struct CrossbarTileSet {
    std::size_t rows = 0; // layer inputs (word lines)
    std::size_t cols = 0; // layer outputs (logical differential columns)
    std::size_t tile_rows = 64;
    std::size_t tile_cols = 64;
    std::vector<Tile> tiles; // row-major over the tile grid
    double v_g = 1.0;
    double w_cut = 0.0;
    LayerScale scale;
    double a_max = 1.0;
    double v_supply = 0.5;
    std::size_t clipped_count = 0;
    double clipped_fraction = 0.0;

    std::size_t tile_grid_rows() const;
    std::size_t tile_grid_cols() const;
    const DifferentialPair& cell(std::size_t row, std::size_t col) const;
    /// Volts per activation unit.
    double volts_per_unit() const { return v_supply / a_max; }
};

struct MvmResult {
    Eigen::VectorXd outputs;         // weight x activation units
    Eigen::VectorXd column_currents; // A, I_plus - I_minus per logical column
    std::optional<double> energy;    // J, when requested
};

struct EnergyReport {
    double resistive = 0.0;           // J
    double gate = 0.0;                // J
    double total = 0.0;               // J
    std::vector<double> per_tile;     // J, same order as CrossbarTileSet::tiles
};

/// Maps a crossbar-oriented weight matrix (rows = inputs, cols = outputs)
/// onto tiles. Weights are clipped to w_cut first; the number of weights
/// that moved is recorded.
CrossbarTileSet program(const Eigen::MatrixXd& weights, double v_g, double w_cut,
                        const LayerScale& scale, const ProgramOptions& options = {});

/// Exact product sum_i a_i w_ij of the programmed (clipped) weights, routed
/// through the voltage and current scaling with ideal conductances.
MvmResult mvm_ideal(const CrossbarTileSet& tiles, std::span<const double> activations);

/// Each cell evaluated through the device solver at its own input voltage.
/// v_in = a / a_max * v_supply, clamped to [0, v_supply]. Column sums use a
/// pairwise reduction over the global row index, so results do not depend
/// on the tile size. With `energy` set, the MVM energy is reported as well.
MvmResult mvm_nonideal(const CrossbarTileSet& tiles, std::span<const double> activations,
                       const DeviceConfig& device, const EnergyConfig* energy = nullptr);

/// Data-independent reference: each cell conducts at its small-signal
/// effective conductance regardless of v_in. This is the linear model the
/// tolerance metric measures deviations from.
MvmResult mvm_linearized(const CrossbarTileSet& tiles, std::span<const double> activations,
                         const DeviceConfig& device);

/// Per-column deviation between two results, normalized by the column's
/// total sensed current magnitude (plus and minus sides).
std::vector<double> column_relative_deviation(const CrossbarTileSet& tiles,
                                              std::span<const double> activations,
                                              const MvmResult& a, const MvmResult& b,
                                              const DeviceConfig& device);

EnergyReport mvm_energy(const CrossbarTileSet& tiles, std::span<const double> activations,
                        const EnergyConfig& energy, const DeviceConfig& device);

/// Gain k that maps the small-signal differential response back to weights,
/// matched at the middle of the usable range [0, w_cut]. Exactly 1 for an
/// ideal switch.
double readout_gain(double v_g, double w_cut, const LayerScale& scale, const DeviceConfig& device);

void write_crossbar_json(const std::filesystem::path& path, const CrossbarTileSet& tiles);
std::string crossbar_to_json(const CrossbarTileSet& tiles);

}  // namespace neat
