#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "neat/device.hpp"

namespace neat::test {

inline DeviceConfig default_device() { return load_device_file(NEAT_DEFAULT_DEVICE); }
inline DeviceConfig leakage_device() { return load_device_file(NEAT_LEAKAGE_DEVICE); }

inline DeviceConfig ideal_device() {
    DeviceConfig d = default_device();
    d.mode = DeviceMode::ideal_switch;
    return d;
}

inline double rel_diff(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("neat_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace neat::test
