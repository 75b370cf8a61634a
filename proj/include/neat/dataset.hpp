#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace neat {

/// Row-per-sample classification data.
struct Dataset {
    Eigen::MatrixXd features; // n x d
    std::vector<int> labels;  // n, in [0, num_classes)
    int num_classes = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t dims() const { return static_cast<std::size_t>(features.cols()); }
};

/// Gaussian-blob generator for the desk-scale task. Class centers are drawn
/// from N(0, separation^2) per feature; samples add N(0, noise^2) per feature.
struct BlobConfig {
    std::size_t n_train = 2000;
    std::size_t n_test = 500;
    std::size_t features = 16;
    int classes = 3;
    double separation = 1.0;
    double noise = 1.0;
    std::uint64_t seed = 7;
};

/// Returns {train, test}. Labels cycle through the classes so both splits
/// are balanced.
std::pair<Dataset, Dataset> make_blobs(const BlobConfig& config);

/// CSV with a header line; each row holds the features followed by an
/// integer label.
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const std::filesystem::path& path, const Dataset& data);

}  // namespace neat
