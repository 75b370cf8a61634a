#include "neat/characterize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "neat/errors.hpp"
#include "neat/mapping.hpp"
#include "neat/numeric.hpp"

namespace neat {

namespace {

constexpr double kVgMatchTol = 1e-9;

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

void check_threshold(double tm_threshold) {
    if (!(tm_threshold > 0.0) || !std::isfinite(tm_threshold)) {
        throw DomainError("tm threshold must be > 0");
    }
}

}  // namespace

const CutoffEntry& CutoffTable::at(double v_g) const {
    for (const auto& e : entries) {
        if (std::abs(e.v_g - v_g) <= kVgMatchTol) return e;
    }
    throw LookupError("cutoff table has no entry for v_g = " + fmt9(v_g));
}

bool CutoffTable::contains(double v_g) const {
    return std::any_of(entries.begin(), entries.end(),
                       [&](const CutoffEntry& e) { return std::abs(e.v_g - v_g) <= kVgMatchTol; });
}

std::vector<double> CutoffTable::gate_voltages() const {
    std::vector<double> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.v_g);
    return out;
}

GeffCurve sweep_geff(double g_m, double v_g, std::span<const double> v_in_grid,
                     const DeviceConfig& device) {
    if (v_in_grid.size() < 2) throw DomainError("sweep_geff: grid needs at least 2 points");
    for (std::size_t k = 0; k < v_in_grid.size(); ++k) {
        if (!(v_in_grid[k] > 0.0)) throw DomainError("sweep_geff: grid must exclude v_in <= 0");
        if (k > 0 && !(v_in_grid[k] > v_in_grid[k - 1])) {
            throw DomainError("sweep_geff: grid must be strictly increasing");
        }
    }
    GeffCurve curve;
    curve.g_m = g_m;
    curve.v_g = v_g;
    curve.points.reserve(v_in_grid.size());
    for (double v : v_in_grid) {
        curve.points.push_back({v, effective_conductance(g_m, v, v_g, device)});
    }
    return curve;
}

ToleranceResult tolerance_metric(std::span<const double> g_eff) {
    if (g_eff.empty()) throw DomainError("tolerance_metric: empty curve");
    const auto [mn, mx] = std::minmax_element(g_eff.begin(), g_eff.end());
    if (!(*mx > 0.0)) throw DomainError("tolerance_metric: g_eff must be positive");
    return {(*mx - *mn) / *mx, *mx, *mn};
}

ToleranceResult tolerance_metric(const GeffCurve& curve) {
    std::vector<double> g;
    g.reserve(curve.points.size());
    for (const auto& p : curve.points) g.push_back(p.g_eff);
    return tolerance_metric(g);
}

std::optional<VinInterval> linear_vin_range(const GeffCurve& curve, double tm_threshold) {
    check_threshold(tm_threshold);
    const auto& pts = curve.points;
    std::optional<VinInterval> best;
    std::size_t best_len = 1;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double mx = pts[i].g_eff;
        double mn = pts[i].g_eff;
        std::size_t j = i;
        // Window tm only grows as the window widens, so stop at the first failure.
        while (j + 1 < pts.size()) {
            const double g = pts[j + 1].g_eff;
            const double nmx = std::max(mx, g);
            const double nmn = std::min(mn, g);
            if ((nmx - nmn) / nmx > tm_threshold) break;
            mx = nmx;
            mn = nmn;
            ++j;
        }
        const std::size_t len = j - i + 1;
        if (len >= 2 && len > best_len) {
            best_len = len;
            best = VinInterval{pts[i].v_in, pts[j].v_in, i, j};
        }
    }
    return best;
}

std::optional<VinInterval> linear_vin_range(double g_m, double v_g, double tm_threshold,
                                            double v_supply, const DeviceConfig& device) {
    check_threshold(tm_threshold);
    const auto grid = uniform_vin_grid(v_supply, kVinGridPoints);
    return linear_vin_range(sweep_geff(g_m, v_g, grid, device), tm_threshold);
}

double full_range_tm(double g_m, double v_g, double v_supply, const DeviceConfig& device) {
    const auto grid = uniform_vin_grid(v_supply, kVinGridPoints);
    return tolerance_metric(sweep_geff(g_m, v_g, grid, device)).tm;
}

std::vector<double> gm_search_grid(const MemristorParams& m, std::size_t n) {
    validate(m);
    std::vector<double> grid(n);
    const double step = (m.g_on - m.g_off) / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) grid[k] = m.g_off + step * static_cast<double>(k);
    grid.back() = m.g_on;
    return grid;
}

std::optional<double> find_gm_cutoff(double v_g, double tm_threshold, double v_supply,
                                     const DeviceConfig& device) {
    check_threshold(tm_threshold);
    const auto grid = gm_search_grid(device.memristor);
    std::optional<double> cutoff;
    for (double g : grid) {
        if (full_range_tm(g, v_g, v_supply, device) > tm_threshold) break;
        cutoff = g;
    }
    return cutoff;
}

CutoffTable cutoff_table(std::span<const double> v_g_list, double tm_threshold, double v_supply,
                         const DeviceConfig& device) {
    check_threshold(tm_threshold);
    if (v_g_list.empty()) throw DomainError("cutoff_table: empty gate-voltage list");
    if (!std::is_sorted(v_g_list.begin(), v_g_list.end())) {
        throw DomainError("cutoff_table: gate voltages must be sorted");
    }
    CutoffTable table;
    table.tm_threshold = tm_threshold;
    table.v_supply = v_supply;
    table.entries.resize(v_g_list.size());
    parallel_for(v_g_list.size(), [&](std::size_t k) {
        table.entries[k] = {v_g_list[k], find_gm_cutoff(v_g_list[k], tm_threshold, v_supply, device)};
    });
    return table;
}

PowerReport power_monte_carlo(std::size_t rows, std::size_t cols, std::size_t n_samples,
                              double v_g, double v_supply, std::uint64_t seed,
                              const DeviceConfig& device, const EnergyConfig& energy,
                              unsigned threads) {
    if (rows == 0 || cols == 0 || n_samples == 0) {
        throw DomainError("power_monte_carlo: rows, cols and samples must be >= 1");
    }
    if (!(v_supply > 0.0)) throw DomainError("power_monte_carlo: v_supply must be > 0");
    if (!(energy.pulse_width > 0.0)) throw DomainError("power_monte_carlo: pulse_width must be > 0");

    constexpr double kWeightRange = 3.0;
    const LayerScale scale = scale_for_range(kWeightRange, device.memristor);
    // Select-line energy per pulse is shared by the cells of the row.
    const double gate_power_per_cell =
        energy.c_gate * v_g * v_g / energy.pulse_width / static_cast<double>(cols);

    std::vector<double> sample_means(n_samples);
    parallel_for(
        n_samples,
        [&](std::size_t k) {
            std::mt19937_64 rng(mix_seed(seed, k));
            std::normal_distribution<double> normal(0.0, 1.0);
            std::uniform_real_distribution<double> uniform(0.0, v_supply);

            std::vector<double> g(rows * cols);
            for (double& cell : g) {
                double w = normal(rng);
                while (std::abs(w) > kWeightRange) w = normal(rng);
                const DifferentialPair pair = weight_to_conductance(w, scale);
                cell = std::max(pair.g_plus, pair.g_minus);
            }
            std::vector<double> v_in(rows);
            for (double& v : v_in) v = uniform(rng);

            std::vector<double> p(rows * cols);
            for (std::size_t i = 0; i < rows; ++i) {
                const double gate = v_in[i] > 0.0 ? gate_power_per_cell : 0.0;
                for (std::size_t j = 0; j < cols; ++j) {
                    const double current = solve_synapse(g[i * cols + j], v_in[i], v_g, device).current;
                    p[i * cols + j] = v_in[i] * current + gate;
                }
            }
            sample_means[k] = pairwise_sum(p) / static_cast<double>(p.size());
        },
        threads);

    PowerReport report;
    report.v_g = v_g;
    report.samples = n_samples;
    report.seed = seed;
    const double n = static_cast<double>(n_samples);
    report.mean_power_per_synapse = pairwise_sum(sample_means) / n;
    if (n_samples > 1) {
        std::vector<double> sq(n_samples);
        for (std::size_t k = 0; k < n_samples; ++k) {
            const double d = sample_means[k] - report.mean_power_per_synapse;
            sq[k] = d * d;
        }
        report.std_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
    }
    return report;
}

void write_geff_csv(const std::filesystem::path& path, const GeffCurve& curve) {
    auto out = open_out(path);
    out << "v_in,g_eff\n";
    for (const auto& p : curve.points) out << fmt9(p.v_in) << ',' << fmt9(p.g_eff) << '\n';
}

void write_cutoff_csv(const std::filesystem::path& path, const CutoffTable& table) {
    auto out = open_out(path);
    out << "v_g,g_m_cutoff\n";
    for (const auto& e : table.entries) {
        out << fmt9(e.v_g) << ',' << (e.g_m_cutoff ? fmt9(*e.g_m_cutoff) : std::string("none"))
            << '\n';
    }
}

CutoffTable read_cutoff_csv(const std::filesystem::path& path, double tm_threshold,
                            double v_supply) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open cutoff table " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "v_g,g_m_cutoff") {
        throw IoError("cutoff table " + path.string() + ": missing 'v_g,g_m_cutoff' header");
    }
    CutoffTable table;
    table.tm_threshold = tm_threshold;
    table.v_supply = v_supply;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw IoError("cutoff table: malformed line '" + line + "'");
        CutoffEntry e;
        try {
            e.v_g = std::stod(line.substr(0, comma));
            const std::string c = line.substr(comma + 1);
            if (c != "none") e.g_m_cutoff = std::stod(c);
        } catch (const std::exception&) {
            throw IoError("cutoff table: malformed line '" + line + "'");
        }
        table.entries.push_back(e);
    }
    return table;
}

void write_power_csv(const std::filesystem::path& path, std::span<const PowerReport> reports) {
    auto out = open_out(path);
    out << "v_g,mean_power_W\n";
    for (const auto& r : reports) {
        out << fmt9(r.v_g) << ',' << fmt9(r.mean_power_per_synapse) << '\n';
    }
}

CalibrationResult calibrate_transistor(const TransistorParams& base, const MemristorParams& m,
                                       const CalibrationTarget& target) {
    validate(m);
    check_threshold(target.tm_threshold);

    auto evaluate = [&](double vth, double kp) {
        CalibrationResult r;
        r.params = base;
        r.params.vth = vth;
        r.params.kp = kp;
        DeviceConfig d;
        d.transistor = r.params;
        d.memristor = m;
        // Cheap rejection: the top of the range must pass at the high gate voltage.
        if (full_range_tm(m.g_on, target.high_vg, target.v_supply, d) > target.tm_threshold) {
            r.objective = HUGE_VAL;
            return r;
        }
        r.low_cutoff = find_gm_cutoff(target.low_vg, target.tm_threshold, target.v_supply, d);
        if (!r.low_cutoff || *r.low_cutoff <= m.g_off || *r.low_cutoff >= m.g_on) {
            r.objective = HUGE_VAL;
            return r;
        }
        r.objective = std::abs(std::log(*r.low_cutoff / target.low_vg_cutoff));
        return r;
    };

    auto search = [&](const std::vector<double>& vths, const std::vector<double>& kps) {
        std::vector<CalibrationResult> results(vths.size() * kps.size());
        parallel_for(results.size(), [&](std::size_t idx) {
            results[idx] = evaluate(vths[idx / kps.size()], kps[idx % kps.size()]);
        });
        return results;
    };

    std::vector<double> vths = inclusive_range(0.40, 0.70, 0.01);
    std::vector<double> kps;
    for (int k = 0; k <= 30; ++k) kps.push_back(1e-4 * std::pow(30.0, k / 30.0));
    auto coarse = search(vths, kps);

    auto best_of = [](std::vector<CalibrationResult>& rs) {
        std::stable_sort(rs.begin(), rs.end(), [](const auto& a, const auto& b) {
            return a.objective < b.objective;
        });
        return rs;
    };
    best_of(coarse);
    if (!std::isfinite(coarse.front().objective)) {
        throw DomainError("calibrate_transistor: no candidate meets the cutoff ordering");
    }

    const TransistorParams c = coarse.front().params;
    std::vector<double> fine_vth;
    std::vector<double> fine_kp;
    for (int k = -10; k <= 10; ++k) fine_vth.push_back(std::round((c.vth + 0.001 * k) * 1e6) / 1e6);
    for (int k = -10; k <= 10; ++k) fine_kp.push_back(c.kp * std::pow(1.12, k / 10.0));
    auto fine = search(fine_vth, fine_kp);
    best_of(fine);

    // Confirm full coverage at the high gate voltage with the complete scan.
    for (const auto& cand : fine) {
        if (!std::isfinite(cand.objective)) break;
        DeviceConfig d;
        d.transistor = cand.params;
        d.memristor = m;
        auto high = find_gm_cutoff(target.high_vg, target.tm_threshold, target.v_supply, d);
        if (high && *high >= m.g_on) {
            CalibrationResult out = cand;
            out.high_cutoff = high;
            return out;
        }
    }
    throw DomainError("calibrate_transistor: refinement found no valid candidate");
}

}  // namespace neat
