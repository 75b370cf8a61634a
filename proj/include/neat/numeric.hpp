#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace neat {

/// Pairwise (cascade) summation over a fixed index range. The reduction
/// tree depends only on the length, so results are reproducible regardless
/// of how the summands were produced.
double pairwise_sum(std::span<const double> values);

/// SplitMix64 finalizer; used to derive independent per-index seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Runs fn(i) for i in [0, n). Each index is processed exactly once; with
/// threads <= 1 this is a plain loop. Callers write results into per-index
/// slots so that the outcome does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned threads = 0);

/// Linear-interpolation percentile (q in [0, 100]) of a copy of values.
double percentile(std::vector<double> values, double q);

/// start, start+step, ... up to and including stop (1e-9 tolerance).
std::vector<double> inclusive_range(double start, double stop, double step);

/// Parses "start:stop:step" or a comma-separated list of values.
std::vector<double> parse_grid(const std::string& spec);

/// Uniform grid of n input voltages on (0, v_supply]: v_supply * k / n, k = 1..n.
std::vector<double> uniform_vin_grid(double v_supply, std::size_t n = 64);

}  // namespace neat
