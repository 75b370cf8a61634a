#include "neat/device.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "neat/errors.hpp"

namespace neat {

namespace {

constexpr int kMaxBisectionIterations = 200;

bool finite(double x) { return std::isfinite(x); }

void require(bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
}

// Unchecked evaluation; callers guarantee vgs >= 0 and vds >= 0.
double drain_current(double vgs, double vds, const TransistorParams& p) {
    const double sub_shape = -std::expm1(-vds / p.v_thermal);
    const double vov = vgs - p.vth;
    if (vov < 0.0) {
        return p.i0_sub * std::exp(vov / (p.n_sub * p.v_thermal)) * sub_shape;
    }
    const double clm = 1.0 + p.lambda * vds;
    const double leak = p.i0_sub * sub_shape;
    if (vds < vov) {
        return p.kp * (vov * vds - 0.5 * vds * vds) * clm + leak;
    }
    return 0.5 * p.kp * vov * vov * clm + leak;
}

// Transistor current when the memristor drops u volts. The unknown is the
// memristor drop rather than the junction voltage: when the transistor is
// nearly off the drop is tiny, and solving for it directly keeps the
// memristor current accurate to full relative precision.
double cell_transistor_current(double u, double v_in, double v_g, const DeviceConfig& d) {
    if (d.topology == Topology::memristor_first) {
        return drain_current(v_g, v_in - u, d.transistor);
    }
    // Source sits on the junction; gate-source bias collapses as u rises.
    return drain_current(std::max(v_g - u, 0.0), v_in - u, d.transistor);
}

// Memristor current minus transistor current; strictly increasing in u.
double kcl_residual(double u, double g_m, double v_in, double v_g, const DeviceConfig& d) {
    return g_m * u - cell_transistor_current(u, v_in, v_g, d);
}

SynapseSolution solve_analytical(double g_m, double v_in, double v_g, const DeviceConfig& d) {
    double lo = 0.0;
    double hi = v_in;
    double r_lo = kcl_residual(lo, g_m, v_in, v_g, d);
    double r_hi = kcl_residual(hi, g_m, v_in, v_g, d);
    if (r_lo > 0.0 || r_hi < 0.0) {
        throw InternalError("solve_synapse: KCL residual has no sign change on [0, v_in]");
    }
    // Bisect to machine resolution; the 1e-12 V width target is always met
    // well before the midpoint stops moving.
    for (int it = 0; it < kMaxBisectionIterations; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        const double r = kcl_residual(mid, g_m, v_in, v_g, d);
        if (r < 0.0) {
            lo = mid;
            r_lo = r;
        } else if (r > 0.0) {
            hi = mid;
            r_hi = r;
        } else {
            lo = hi = mid;
            break;
        }
    }
    const double u = (std::abs(r_lo) <= std::abs(r_hi)) ? lo : hi;

    SynapseSolution s;
    s.v_internal = d.topology == Topology::memristor_first ? v_in - u : u;
    s.current = g_m * u;
    s.g_eff = s.current / v_in;
    return s;
}

}  // namespace

void validate(const TransistorParams& p) {
    require(finite(p.vth) && p.vth > 0.0, "transistor: vth must be > 0");
    require(finite(p.kp) && p.kp > 0.0, "transistor: kp must be > 0");
    require(finite(p.lambda) && p.lambda >= 0.0, "transistor: lambda must be >= 0");
    require(finite(p.n_sub) && p.n_sub >= 1.0, "transistor: n_sub must be >= 1");
    require(finite(p.i0_sub) && p.i0_sub >= 0.0, "transistor: i0_sub must be >= 0");
    require(finite(p.v_thermal) && p.v_thermal > 0.0, "transistor: v_thermal must be > 0");
}

void validate(const MemristorParams& m) {
    require(finite(m.g_on) && finite(m.g_off) && m.g_off > 0.0 && m.g_off < m.g_on,
            "memristor: require 0 < g_off < g_on");
}

double transistor_current(double vgs, double vds, const TransistorParams& p) {
    require(finite(vgs) && finite(vds), "transistor_current: non-finite bias");
    require(vgs >= 0.0, "transistor_current: vgs must be >= 0");
    require(vds >= 0.0, "transistor_current: vds must be >= 0");
    validate(p);
    return drain_current(vgs, vds, p);
}

SynapseSolution solve_synapse(double g_m, double v_in, double v_g, const DeviceConfig& device) {
    require(finite(g_m) && finite(v_in) && finite(v_g), "solve_synapse: non-finite input");
    require(v_in >= 0.0, "solve_synapse: v_in must be >= 0");
    require(v_g >= 0.0, "solve_synapse: v_g must be >= 0");
    const auto& m = device.memristor;
    // Absorb rounding from weight -> conductance arithmetic.
    const double slack = 1e-12 * m.g_on;
    require(g_m >= m.g_off - slack && g_m <= m.g_on + slack,
            "solve_synapse: g_m outside [g_off, g_on]");

    if (device.mode == DeviceMode::ideal_switch) {
        const bool on = v_g > device.transistor.vth;
        SynapseSolution s;
        s.current = on ? g_m * v_in : 0.0;
        s.v_internal = on ? (device.topology == Topology::memristor_first ? 0.0 : v_in) : 0.0;
        s.g_eff = on ? g_m : 0.0;
        return s;
    }

    if (v_in == 0.0) {
        SynapseSolution s = solve_analytical(g_m, kSmallSignalVin, v_g, device);
        return {0.0, 0.0, s.g_eff};
    }
    return solve_analytical(g_m, v_in, v_g, device);
}

double effective_conductance(double g_m, double v_in, double v_g, const DeviceConfig& device) {
    return solve_synapse(g_m, v_in, v_g, device).g_eff;
}

double continuity_residual(double v_in, double v_g, const SynapseSolution& s, const DeviceConfig& device) {
    if (device.mode == DeviceMode::ideal_switch || v_in == 0.0) return 0.0;
    const double vx = s.v_internal;
    const double i_t = device.topology == Topology::memristor_first
                           ? drain_current(v_g, vx, device.transistor)
                           : drain_current(std::max(v_g - vx, 0.0), v_in - vx, device.transistor);
    return std::abs(s.current - i_t) / std::max(std::max(s.current, i_t), 1e-15);
}

std::string to_string(DeviceMode mode) {
    return mode == DeviceMode::analytical ? "analytical" : "ideal_switch";
}

std::string to_string(Topology topology) {
    return topology == Topology::memristor_first ? "memristor_first" : "transistor_first";
}

DeviceMode parse_device_mode(const std::string& s) {
    if (s == "analytical") return DeviceMode::analytical;
    if (s == "ideal_switch") return DeviceMode::ideal_switch;
    throw DomainError("unknown device mode '" + s + "'");
}

Topology parse_topology(const std::string& s) {
    if (s == "memristor_first") return Topology::memristor_first;
    if (s == "transistor_first") return Topology::transistor_first;
    throw DomainError("unknown topology '" + s + "'");
}

DeviceConfig load_device_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open device file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed device file " + path.string() + ": " + e.what());
    }
    DeviceConfig d;
    try {
        auto& t = d.transistor;
        t.vth = j.at("vth").get<double>();
        t.kp = j.at("kp").get<double>();
        t.lambda = j.value("lambda", t.lambda);
        t.n_sub = j.value("n_sub", t.n_sub);
        t.i0_sub = j.value("i0_sub", t.i0_sub);
        t.v_thermal = j.value("v_thermal", t.v_thermal);
        d.memristor.g_on = j.value("g_on", d.memristor.g_on);
        d.memristor.g_off = j.value("g_off", d.memristor.g_off);
        if (j.contains("topology")) d.topology = parse_topology(j.at("topology").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw IoError("device file " + path.string() + ": " + e.what());
    }
    validate(d.transistor);
    validate(d.memristor);
    return d;
}

void save_device_file(const std::filesystem::path& path, const DeviceConfig& device,
                      const std::string& description) {
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    if (!description.empty()) j["description"] = description;
    j["vth"] = device.transistor.vth;
    j["kp"] = device.transistor.kp;
    j["lambda"] = device.transistor.lambda;
    j["n_sub"] = device.transistor.n_sub;
    j["i0_sub"] = device.transistor.i0_sub;
    j["v_thermal"] = device.transistor.v_thermal;
    j["g_on"] = device.memristor.g_on;
    j["g_off"] = device.memristor.g_off;
    j["topology"] = to_string(device.topology);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write device file " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace neat
