#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "neat/characterize.hpp"
#include "neat/errors.hpp"
#include "neat/numeric.hpp"
#include "support.hpp"

using namespace neat;
using neat::test::default_device;
using neat::test::ideal_device;
using neat::test::leakage_device;
using neat::test::TempDir;

namespace {

constexpr double kTm = 0.025;
constexpr double kVs = 0.5;

// Full-range tm straight from the solver, without the library sweep.
double oracle_tm(double g_m, double v_g, const DeviceConfig& d) {
    double mx = 0.0, mn = HUGE_VAL;
    for (int k = 1; k <= 64; ++k) {
        const double v = kVs * k / 64.0;
        const double g = solve_synapse(g_m, v, v_g, d).current / v;
        mx = std::max(mx, g);
        mn = std::min(mn, g);
    }
    return (mx - mn) / mx;
}

GeffCurve curve_of(std::vector<double> g) {
    GeffCurve c;
    for (std::size_t k = 0; k < g.size(); ++k) c.points.push_back({0.01 * (k + 1), g[k]});
    return c;
}

std::string read_all(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(SweepGeff, IdealSwitchIsConstantAtGm) {
    const auto grid = uniform_vin_grid(kVs);
    const auto c = sweep_geff(2e-5, 0.8, grid, ideal_device());
    ASSERT_EQ(c.points.size(), 64u);
    for (const auto& p : c.points) EXPECT_EQ(p.g_eff, 2e-5);
    EXPECT_EQ(tolerance_metric(c).tm, 0.0);
}

TEST(SweepGeff, MatchesPerPointSolverAndDipsAtHighVin) {
    const DeviceConfig d = default_device();
    const auto grid = uniform_vin_grid(kVs);
    const auto c = sweep_geff(3.3e-5, 0.8, grid, d);
    ASSERT_EQ(c.points.size(), grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        EXPECT_EQ(c.points[k].v_in, grid[k]);
        EXPECT_DOUBLE_EQ(c.points[k].g_eff, solve_synapse(3.3e-5, grid[k], 0.8, d).current / grid[k]);
        EXPECT_GT(c.points[k].g_eff, 0.0);
    }
    EXPECT_LT(c.points.back().g_eff, c.points.front().g_eff);
    EXPECT_GT(tolerance_metric(c).tm, kTm);
}

TEST(SweepGeff, GoffAtHighVgIsNearlyConstant) {
    const DeviceConfig d = default_device();
    const auto c = sweep_geff(d.memristor.g_off, 1.0, uniform_vin_grid(kVs), d);
    EXPECT_LE(tolerance_metric(c).tm, kTm);
    EXPECT_NEAR(tolerance_metric(c).tm, oracle_tm(d.memristor.g_off, 1.0, d), 1e-12);
}

TEST(SweepGeff, RejectsBadGrids) {
    const DeviceConfig d = default_device();
    const std::vector<double> one{0.1};
    const std::vector<double> with_zero{0.0, 0.1};
    const std::vector<double> descending{0.2, 0.1};
    EXPECT_THROW(sweep_geff(1e-5, 0.8, one, d), DomainError);
    EXPECT_THROW(sweep_geff(1e-5, 0.8, with_zero, d), DomainError);
    EXPECT_THROW(sweep_geff(1e-5, 0.8, descending, d), DomainError);
}

TEST(ToleranceMetric, Examples) {
    const std::vector<double> flat(10, 1e-5);
    EXPECT_EQ(tolerance_metric(flat).tm, 0.0);
    const std::vector<double> spread{1.0e-5, 9.5e-6, 9.8e-6};
    const auto r = tolerance_metric(spread);
    EXPECT_NEAR(r.tm, 0.05, 1e-12);
    EXPECT_EQ(r.g_eff_max, 1.0e-5);
    EXPECT_EQ(r.g_eff_min, 9.5e-6);
}

TEST(ToleranceMetric, EmptyCurveIsDomainError) {
    EXPECT_THROW(tolerance_metric(std::span<const double>{}), DomainError);
    EXPECT_THROW(tolerance_metric(GeffCurve{}), DomainError);
}

TEST(ToleranceMetric, InvariantUnderReorderingAndScaling) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(1e-6, 3e-5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> g(2 + trial % 30);
        for (double& x : g) x = u(rng);
        const double tm = tolerance_metric(g).tm;
        EXPECT_GE(tm, 0.0);
        std::shuffle(g.begin(), g.end(), rng);
        EXPECT_EQ(tolerance_metric(g).tm, tm);
        for (double& x : g) x *= 4.0;
        EXPECT_NEAR(tolerance_metric(g).tm, tm, 1e-14);
    }
}

TEST(LinearVinRange, IdealSwitchCoversFullGrid) {
    const auto r = linear_vin_range(3e-5, 0.8, kTm, kVs, ideal_device());
    ASSERT_TRUE(r.has_value());
    EXPECT_EQ(r->first, 0u);
    EXPECT_EQ(r->last, 63u);
    EXPECT_DOUBLE_EQ(r->v_lo, kVs / 64.0);
    EXPECT_DOUBLE_EQ(r->v_hi, kVs);
}

TEST(LinearVinRange, SaturationExcludesHighInputsAtLowVg) {
    const auto r = linear_vin_range(3.3e-5, 0.8, kTm, kVs, default_device());
    ASSERT_TRUE(r.has_value());
    EXPECT_EQ(r->first, 0u);
    EXPECT_LT(r->v_hi, kVs);
}

TEST(LinearVinRange, LeakagePresetNarrowsTheRange) {
    const DeviceConfig d = leakage_device();
    const auto r = linear_vin_range(d.memristor.g_off, 1.3, kTm, kVs, d);
    ASSERT_TRUE(r.has_value());
    EXPECT_LT(r->last - r->first + 1, 64u);
}

TEST(LinearVinRange, MatchesBruteForceWindowOracle) {
    const DeviceConfig d = default_device();
    const auto grid = uniform_vin_grid(kVs);
    for (double v_g : {0.7, 0.8, 0.9}) {
        for (double g_m : {1e-5, 2e-5, 3.3e-5}) {
            const auto c = sweep_geff(g_m, v_g, grid, d);
            // All windows, widest first, lowest start on ties.
            std::optional<std::pair<std::size_t, std::size_t>> want;
            for (std::size_t len = grid.size(); len >= 2 && !want; --len) {
                for (std::size_t i = 0; i + len <= grid.size(); ++i) {
                    std::vector<double> w;
                    for (std::size_t k = i; k < i + len; ++k) w.push_back(c.points[k].g_eff);
                    if (tolerance_metric(w).tm <= kTm) {
                        want = {i, i + len - 1};
                        break;
                    }
                }
            }
            const auto got = linear_vin_range(c, kTm);
            ASSERT_EQ(got.has_value(), want.has_value());
            if (got) {
                EXPECT_EQ(got->first, want->first) << v_g << " " << g_m;
                EXPECT_EQ(got->last, want->second) << v_g << " " << g_m;
                EXPECT_EQ(got->v_lo, grid[got->first]);
                EXPECT_EQ(got->v_hi, grid[got->last]);
            }
        }
    }
}

TEST(LinearVinRange, NoneWhenNoPairQualifies) {
    const auto c = curve_of({1.0, 0.5, 1.0, 0.5});
    EXPECT_FALSE(linear_vin_range(c, 0.1).has_value());
    EXPECT_THROW(linear_vin_range(c, 0.0), DomainError);
}

TEST(FindGmCutoff, LowVgCutoffLiesInsideRangeAndBrackets) {
    const DeviceConfig d = default_device();
    const auto c = find_gm_cutoff(0.8, kTm, kVs, d);
    ASSERT_TRUE(c.has_value());
    EXPECT_GT(*c, d.memristor.g_off);
    EXPECT_LT(*c, d.memristor.g_on);
    const auto grid = gm_search_grid(d.memristor);
    const auto it = std::find(grid.begin(), grid.end(), *c);
    ASSERT_NE(it, grid.end());
    EXPECT_LE(oracle_tm(*c, 0.8, d), kTm);
    EXPECT_GT(oracle_tm(*(it + 1), 0.8, d), kTm);
}

TEST(FindGmCutoff, CalibratedOrdering) {
    const DeviceConfig d = default_device();
    const auto low = find_gm_cutoff(0.8, kTm, kVs, d);
    const auto high = find_gm_cutoff(1.0, kTm, kVs, d);
    ASSERT_TRUE(low && high);
    EXPECT_LT(*low, *high);
    EXPECT_NEAR(*low, 1.25e-5, 0.1 * 1.25e-5);
    EXPECT_GE(*high, 0.9 * d.memristor.g_on);
}

TEST(FindGmCutoff, IdealSwitchGivesGon) {
    const DeviceConfig d = ideal_device();
    EXPECT_EQ(find_gm_cutoff(0.8, kTm, kVs, d), d.memristor.g_on);
}

TEST(FindGmCutoff, LeakagePresetHasNoCutoffAtHighVg) {
    EXPECT_FALSE(find_gm_cutoff(1.3, kTm, kVs, leakage_device()).has_value());
}

TEST(FindGmCutoff, RejectsNonPositiveThreshold) {
    EXPECT_THROW(find_gm_cutoff(0.8, 0.0, kVs, default_device()), DomainError);
    EXPECT_THROW(find_gm_cutoff(0.8, -0.1, kVs, default_device()), DomainError);
}

TEST(GmSearchGrid, UniformWithExactEndpoints) {
    const MemristorParams m;
    const auto g = gm_search_grid(m);
    ASSERT_EQ(g.size(), kCutoffGridPoints);
    EXPECT_EQ(g.front(), m.g_off);
    EXPECT_EQ(g.back(), m.g_on);
    const double step = (m.g_on - m.g_off) / 255.0;
    for (std::size_t k = 1; k < g.size(); ++k) EXPECT_NEAR(g[k] - g[k - 1], step, 1e-18);
}

TEST(CutoffTable, PairOrderingAndSingleton) {
    const DeviceConfig d = default_device();
    const std::vector<double> pair{0.8, 1.0};
    const auto t = cutoff_table(pair, kTm, kVs, d);
    ASSERT_EQ(t.entries.size(), 2u);
    EXPECT_LT(*t.at(0.8).g_m_cutoff, *t.at(1.0).g_m_cutoff);
    EXPECT_THROW(t.at(0.9), LookupError);

    const std::vector<double> one{0.9};
    EXPECT_EQ(cutoff_table(one, kTm, kVs, d).entries.size(), 1u);
}

TEST(CutoffTable, NonDecreasingOverDefaultGridAndMatchesPointSearch) {
    const DeviceConfig d = default_device();
    const auto grid = inclusive_range(0.7, 1.0, 0.05);
    const auto t = cutoff_table(grid, kTm, kVs, d);
    ASSERT_EQ(t.entries.size(), 7u);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        ASSERT_TRUE(t.entries[k].g_m_cutoff.has_value());
        EXPECT_EQ(t.entries[k].g_m_cutoff, find_gm_cutoff(grid[k], kTm, kVs, d));
        if (k > 0) {
            EXPECT_GE(*t.entries[k].g_m_cutoff, *t.entries[k - 1].g_m_cutoff);
        }
    }
}

TEST(CutoffTable, RejectsEmptyOrUnsortedLists) {
    const std::vector<double> empty;
    const std::vector<double> unsorted{1.0, 0.8};
    EXPECT_THROW(cutoff_table(empty, kTm, kVs, default_device()), DomainError);
    EXPECT_THROW(cutoff_table(unsorted, kTm, kVs, default_device()), DomainError);
}

TEST(PowerMonteCarlo, DeterministicForFixedSeed) {
    const DeviceConfig d = default_device();
    const auto a = power_monte_carlo(8, 8, 200, 0.9, kVs, 3, d);
    const auto b = power_monte_carlo(8, 8, 200, 0.9, kVs, 3, d);
    EXPECT_EQ(a.mean_power_per_synapse, b.mean_power_per_synapse);
    EXPECT_EQ(a.std_error, b.std_error);
    EXPECT_EQ(a.samples, 200u);
    EXPECT_EQ(a.seed, 3u);
    EXPECT_GT(a.mean_power_per_synapse, 0.0);
}

TEST(PowerMonteCarlo, IndependentOfThreadCount) {
    const DeviceConfig d = default_device();
    const auto serial = power_monte_carlo(8, 8, 300, 0.8, kVs, 5, d, {}, 1);
    const auto par = power_monte_carlo(8, 8, 300, 0.8, kVs, 5, d, {}, 4);
    EXPECT_EQ(serial.mean_power_per_synapse, par.mean_power_per_synapse);
}

TEST(PowerMonteCarlo, HigherGateVoltageDrawsMorePower) {
    const DeviceConfig d = default_device();
    const double p8 = power_monte_carlo(8, 8, 500, 0.8, kVs, 1, d).mean_power_per_synapse;
    const double p9 = power_monte_carlo(8, 8, 500, 0.9, kVs, 1, d).mean_power_per_synapse;
    const double p10 = power_monte_carlo(8, 8, 500, 1.0, kVs, 1, d).mean_power_per_synapse;
    EXPECT_GE(p9, p8);
    EXPECT_GE(p10, p9);
}

TEST(PowerMonteCarlo, IdealSwitchMatchesClosedForm) {
    const DeviceConfig d = ideal_device();
    const EnergyConfig no_gate{.pulse_width = 1e-9, .c_gate = 0.0};
    const auto r = power_monte_carlo(8, 8, 4000, 1.0, kVs, 17, d, no_gate);
    // |Z| for Z ~ N(0,1) truncated to [-3, 3].
    const double phi0 = 1.0 / std::sqrt(2.0 * M_PI);
    const double mass = std::erf(3.0 / std::sqrt(2.0));
    const double e_abs = 2.0 * phi0 * (1.0 - std::exp(-4.5)) / mass;
    const double s = (d.memristor.g_on - d.memristor.g_off) / 3.0;
    const double expected = kVs * kVs / 3.0 * (d.memristor.g_off + e_abs * s);
    ASSERT_GT(r.std_error, 0.0);
    EXPECT_LT(std::abs(r.mean_power_per_synapse - expected), 3.0 * r.std_error)
        << r.mean_power_per_synapse << " vs " << expected << " se " << r.std_error;
}

TEST(PowerMonteCarlo, GateTermAddsExactlyItsShare) {
    const DeviceConfig d = default_device();
    const EnergyConfig no_gate{.pulse_width = 1e-9, .c_gate = 0.0};
    const EnergyConfig gate{.pulse_width = 1e-9, .c_gate = 1e-15};
    const auto a = power_monte_carlo(8, 8, 50, 0.9, kVs, 2, d, no_gate);
    const auto b = power_monte_carlo(8, 8, 50, 0.9, kVs, 2, d, gate);
    EXPECT_NEAR(b.mean_power_per_synapse - a.mean_power_per_synapse, 1e-15 * 0.81 / 1e-9 / 8.0,
                1e-12 * a.mean_power_per_synapse);
}

TEST(PowerMonteCarlo, RejectsEmptyShapes) {
    EXPECT_THROW(power_monte_carlo(0, 8, 10, 0.9, kVs, 1, default_device()), DomainError);
    EXPECT_THROW(power_monte_carlo(8, 8, 0, 0.9, kVs, 1, default_device()), DomainError);
}

TEST(CsvOutput, GeffAndCutoffFormats) {
    TempDir dir("char");
    GeffCurve c = curve_of({1.0e-5, 0.123456789012e-5});
    write_geff_csv(dir / "g.csv", c);
    EXPECT_EQ(read_all(dir / "g.csv"), "v_in,g_eff\n0.01,1e-05\n0.02,1.23456789e-06\n");

    CutoffTable t;
    t.entries = {{0.8, 1.25098039e-5}, {1.3, std::nullopt}};
    write_cutoff_csv(dir / "c.csv", t);
    const std::string text = read_all(dir / "c.csv");
    EXPECT_EQ(text.substr(0, text.find('\n')), "v_g,g_m_cutoff");
    const auto back = read_cutoff_csv(dir / "c.csv", kTm, kVs);
    ASSERT_EQ(back.entries.size(), 2u);
    EXPECT_EQ(back.entries[0].v_g, 0.8);
    EXPECT_NEAR(*back.entries[0].g_m_cutoff, 1.25098039e-5, 1e-14);
    EXPECT_FALSE(back.entries[1].g_m_cutoff.has_value());
}

TEST(CsvOutput, PowerFormat) {
    TempDir dir("power");
    std::vector<PowerReport> r(1);
    r[0].v_g = 0.8;
    r[0].mean_power_per_synapse = 1.5e-6;
    write_power_csv(dir / "p.csv", r);
    const std::string text = read_all(dir / "p.csv");
    EXPECT_EQ(text.substr(0, text.find('\n')), "v_g,mean_power_W");
    EXPECT_NE(text.find("0.8,1.5e-06"), std::string::npos);
}
