#pragma once

#include <filesystem>
#include <string>

namespace neat {

/// Analytical NMOS access transistor: square-law strong inversion with
/// channel-length modulation, exponential subthreshold conduction below vth.
struct TransistorParams {
    double vth = 0.0;          // threshold voltage (V)
    double kp = 0.0;           // transconductance factor (A/V^2)
    double lambda = 0.05;      // channel-length modulation (1/V)
    double n_sub = 1.5;        // subthreshold slope factor
    double i0_sub = 0.0;       // subthreshold current at vgs == vth (A)
    double v_thermal = 0.0258; // kT/q (V)
};

/// Resistive NVM element programmable anywhere in [g_off, g_on].
struct MemristorParams {
    double g_on = 1.0 / 30e3;
    double g_off = 1.0 / 300e3;
};

enum class DeviceMode {
    analytical,
    /// Transistor is a 0 ohm switch when v_g > vth and open otherwise.
    ideal_switch,
};

/// Position of the memristor relative to the access transistor.
enum class Topology {
    /// input -> memristor -> internal node -> drain; source on the virtual-ground bit line.
    memristor_first,
    /// input -> drain; source -> internal node -> memristor -> bit line.
    transistor_first,
};

struct DeviceConfig {
    TransistorParams transistor;
    MemristorParams memristor;
    DeviceMode mode = DeviceMode::analytical;
    Topology topology = Topology::memristor_first;
};

/// Circuit constants for energy accounting. The resistive term is
/// v_in * I * pulse_width per cell; each active row additionally charges
/// its select line, c_gate * v_g^2 per pulse.
struct EnergyConfig {
    double pulse_width = 1e-9; // s
    double c_gate = 1e-15;     // F
};

/// Solved operating point of one 1T-1R cell.
struct SynapseSolution {
    double current = 0.0;    // A, flowing into the bit line
    double v_internal = 0.0; // V, memristor/transistor junction
    double g_eff = 0.0;      // S, current / v_in (small-signal slope at v_in == 0)
};

/// Input used to define g_eff at v_in == 0 as a secant slope.
inline constexpr double kSmallSignalVin = 1e-6;

void validate(const TransistorParams& p);
void validate(const MemristorParams& m);

/// Drain current of the access transistor.
///
/// Regions (vov = vgs - vth):
///   subthreshold  vgs < vth        i0 * exp(vov / (n vT)) * (1 - exp(-vds / vT))
///   triode        vds < vov        kp (vov vds - vds^2/2)(1 + lambda vds) + i0 (1 - exp(-vds / vT))
///   saturation    vds >= vov       kp/2 vov^2 (1 + lambda vds)            + i0 (1 - exp(-vds / vT))
///
/// The i0 term carried into strong inversion is the subthreshold expression
/// evaluated at vgs == vth, which keeps the current continuous and monotone
/// in vgs across the threshold. Throws DomainError for negative or
/// non-finite biases.
double transistor_current(double vgs, double vds, const TransistorParams& p);

/// Operating point of a cell programmed to g_m, driven by v_in at gate bias v_g.
/// Requires g_off <= g_m <= g_on and v_in >= 0.
SynapseSolution solve_synapse(double g_m, double v_in, double v_g, const DeviceConfig& device);

double effective_conductance(double g_m, double v_in, double v_g, const DeviceConfig& device);

/// Relative Kirchhoff residual |I - I_transistor| / max(I, 1e-15) of a
/// returned solution, with the transistor evaluated at the reported junction
/// voltage.
double continuity_residual(double v_in, double v_g, const SynapseSolution& s, const DeviceConfig& device);

// Device parameter files: flat JSON object, SI units.
DeviceConfig load_device_file(const std::filesystem::path& path);
void save_device_file(const std::filesystem::path& path, const DeviceConfig& device,
                      const std::string& description = {});

std::string to_string(DeviceMode mode);
std::string to_string(Topology topology);
DeviceMode parse_device_mode(const std::string& s);
Topology parse_topology(const std::string& s);

}  // namespace neat
