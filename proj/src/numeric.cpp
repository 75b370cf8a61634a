#include "neat/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <thread>

#include "neat/errors.hpp"

namespace neat {

double pairwise_sum(std::span<const double> values) {
    constexpr std::size_t kLeaf = 8;
    if (values.size() <= kLeaf) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw DomainError("percentile of empty set");
    if (!(q >= 0.0 && q <= 100.0)) throw DomainError("percentile q outside [0, 100]");
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> inclusive_range(double start, double stop, double step) {
    if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step) || step <= 0.0) {
        throw DomainError("grid: need finite start/stop and step > 0");
    }
    if (stop < start) throw DomainError("grid: stop < start");
    constexpr double kTol = 1e-9;
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + kTol)) + 1;
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        // Round to 12 decimals so that 0.7 + 3*0.05 prints and compares as 0.85.
        const double v = start + static_cast<double>(k) * step;
        out.push_back(std::round(v * 1e12) / 1e12);
    }
    return out;
}

std::vector<double> parse_grid(const std::string& spec) {
    auto to_double = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw DomainError("grid: cannot parse '" + s + "'");
        }
        if (used != s.size()) throw DomainError("grid: cannot parse '" + s + "'");
        return v;
    };
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ':')) parts.push_back(item);
        if (parts.size() != 3) throw DomainError("grid: expected start:stop:step, got '" + spec + "'");
        return inclusive_range(to_double(parts[0]), to_double(parts[1]), to_double(parts[2]));
    }
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(item));
    if (out.empty()) throw DomainError("grid: empty list");
    return out;
}

std::vector<double> uniform_vin_grid(double v_supply, std::size_t n) {
    if (!(v_supply > 0.0) || !std::isfinite(v_supply)) throw DomainError("v_supply must be > 0");
    if (n < 2) throw DomainError("v_in grid needs at least 2 points");
    std::vector<double> grid(n);
    for (std::size_t k = 0; k < n; ++k) {
        grid[k] = v_supply * static_cast<double>(k + 1) / static_cast<double>(n);
    }
    return grid;
}

}  // namespace neat
