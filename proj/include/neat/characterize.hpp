#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "neat/device.hpp"

namespace neat {

struct GeffPoint {
    double v_in = 0.0;
    double g_eff = 0.0;
};

struct GeffCurve {
    double g_m = 0.0;
    double v_g = 0.0;
    std::vector<GeffPoint> points;
};

struct ToleranceResult {
    double tm = 0.0;
    double g_eff_max = 0.0;
    double g_eff_min = 0.0;
};

struct VinInterval {
    double v_lo = 0.0;
    double v_hi = 0.0;
    std::size_t first = 0; // grid index of v_lo
    std::size_t last = 0;  // grid index of v_hi (inclusive)
};

struct CutoffEntry {
    double v_g = 0.0;
    std::optional<double> g_m_cutoff; // none: no G_M meets the threshold
};

/// G_M cutoff per gate voltage at a fixed tolerance threshold and supply.
struct CutoffTable {
    std::vector<CutoffEntry> entries;
    double tm_threshold = 0.025;
    double v_supply = 0.5;

    /// Entry whose v_g matches within 1e-9; throws LookupError otherwise.
    const CutoffEntry& at(double v_g) const;
    bool contains(double v_g) const;
    std::vector<double> gate_voltages() const;
};

struct PowerReport {
    double v_g = 0.0;
    double mean_power_per_synapse = 0.0; // W
    double std_error = 0.0;              // W, standard error of the per-sample means
    std::size_t samples = 0;
    std::uint64_t seed = 0;
};

/// Number of G_M grid points scanned by find_gm_cutoff.
inline constexpr std::size_t kCutoffGridPoints = 256;
/// Number of input voltages in a characterization sweep.
inline constexpr std::size_t kVinGridPoints = 64;

GeffCurve sweep_geff(double g_m, double v_g, std::span<const double> v_in_grid,
                     const DeviceConfig& device);

/// tm = (max - min) / max of g_eff over the curve.
ToleranceResult tolerance_metric(const GeffCurve& curve);
ToleranceResult tolerance_metric(std::span<const double> g_eff);

/// Widest contiguous run of the 64-point v_in grid whose own tm stays
/// within the threshold. Ties go to the run starting at the lowest v_in.
std::optional<VinInterval> linear_vin_range(double g_m, double v_g, double tm_threshold,
                                            double v_supply, const DeviceConfig& device);
/// Same search over an explicit curve.
std::optional<VinInterval> linear_vin_range(const GeffCurve& curve, double tm_threshold);

/// Full-range tm of a cell at g_m over the 64-point grid on (0, v_supply].
double full_range_tm(double g_m, double v_g, double v_supply, const DeviceConfig& device);

/// Uniform G_M grid on [g_off, g_on] used by the cutoff search.
std::vector<double> gm_search_grid(const MemristorParams& m, std::size_t n = kCutoffGridPoints);

/// Top of the contiguous run of passing G_M grid values starting at g_off.
/// Returns g_on when every grid value passes and none when g_off fails.
std::optional<double> find_gm_cutoff(double v_g, double tm_threshold, double v_supply,
                                     const DeviceConfig& device);

CutoffTable cutoff_table(std::span<const double> v_g_list, double tm_threshold, double v_supply,
                         const DeviceConfig& device);

/// Average per-synapse power of a rows x cols crossbar over n_samples random
/// draws: weights ~ N(0,1) truncated to [-3, 3] mapped onto [g_off, g_on]
/// by magnitude, inputs ~ U(0, v_supply). Sample k draws from its own
/// stream derived from (seed, k), so the result is independent of threads.
PowerReport power_monte_carlo(std::size_t rows, std::size_t cols, std::size_t n_samples,
                              double v_g, double v_supply, std::uint64_t seed,
                              const DeviceConfig& device, const EnergyConfig& energy = {},
                              unsigned threads = 1);

// CSV writers; floats use 9 significant digits.
void write_geff_csv(const std::filesystem::path& path, const GeffCurve& curve);
void write_cutoff_csv(const std::filesystem::path& path, const CutoffTable& table);
CutoffTable read_cutoff_csv(const std::filesystem::path& path, double tm_threshold,
                            double v_supply);
void write_power_csv(const std::filesystem::path& path, std::span<const PowerReport> reports);

// Calibration of the default transistor parameters.

struct CalibrationTarget {
    double v_supply = 0.5;
    double tm_threshold = 0.025;
    double low_vg = 0.8;
    double high_vg = 1.0;
    double low_vg_cutoff = 1.25e-5; // S, where the low-Vg cutoff should land
};

struct CalibrationResult {
    TransistorParams params;
    std::optional<double> low_cutoff;
    std::optional<double> high_cutoff;
    double objective = 0.0; // |ln(low_cutoff / target)|
};

/// Grid search over (vth, kp) with lambda, n_sub, i0_sub and v_thermal held
/// at the values in `base`. Accepts only candidates where the high-Vg
/// cutoff covers the whole conductance range and the low-Vg cutoff lies
/// strictly inside (g_off, g_on); among those, the low-Vg cutoff closest
/// (in log ratio) to the target wins.
CalibrationResult calibrate_transistor(const TransistorParams& base, const MemristorParams& m,
                                       const CalibrationTarget& target = {});

}  // namespace neat
