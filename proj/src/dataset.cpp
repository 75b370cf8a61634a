#include "neat/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "neat/errors.hpp"
#include "neat/numeric.hpp"

namespace neat {

namespace {

Dataset sample_split(const Eigen::MatrixXd& centers, std::size_t n, double noise, std::mt19937_64& rng) {
    const auto classes = static_cast<int>(centers.rows());
    std::normal_distribution<double> normal(0.0, noise);
    Dataset d;
    d.num_classes = classes;
    d.features.resize(static_cast<Eigen::Index>(n), centers.cols());
    d.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % static_cast<std::size_t>(classes));
        d.labels[i] = c;
        for (Eigen::Index f = 0; f < centers.cols(); ++f) {
            d.features(static_cast<Eigen::Index>(i), f) = centers(c, f) + normal(rng);
        }
    }
    return d;
}

}  // namespace

std::pair<Dataset, Dataset> make_blobs(const BlobConfig& config) {
    if (config.classes < 2 || config.features == 0 || config.n_train == 0) {
        throw DomainError("make_blobs: need >= 2 classes, >= 1 feature and a non-empty train split");
    }
    if (!(config.noise > 0.0) || !(config.separation > 0.0)) {
        throw DomainError("make_blobs: noise and separation must be > 0");
    }
    std::mt19937_64 center_rng(mix_seed(config.seed, 0));
    std::normal_distribution<double> center(0.0, config.separation);
    Eigen::MatrixXd centers(config.classes, static_cast<Eigen::Index>(config.features));
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        for (Eigen::Index f = 0; f < centers.cols(); ++f) centers(c, f) = center(center_rng);
    }
    std::mt19937_64 train_rng(mix_seed(config.seed, 1));
    std::mt19937_64 test_rng(mix_seed(config.seed, 2));
    return {sample_split(centers, config.n_train, config.noise, train_rng),
            sample_split(centers, config.n_test, config.noise, test_rng)};
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("dataset " + path.string() + ": missing header");

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::size_t width = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<double> values;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("dataset " + path.string() + ":" + std::to_string(line_no) +
                              ": non-numeric field '" + cell + "'");
            }
        }
        if (values.size() < 2) {
            throw IoError("dataset " + path.string() + ":" + std::to_string(line_no) +
                          ": need at least one feature and a label");
        }
        if (width == 0) width = values.size();
        if (values.size() != width) {
            throw IoError("dataset " + path.string() + ":" + std::to_string(line_no) +
                          ": inconsistent column count");
        }
        const double label = values.back();
        if (label < 0.0 || label != std::floor(label)) {
            throw IoError("dataset " + path.string() + ":" + std::to_string(line_no) +
                          ": label must be a non-negative integer");
        }
        labels.push_back(static_cast<int>(label));
        values.pop_back();
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw IoError("dataset " + path.string() + ": no samples");

    Dataset d;
    d.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t f = 0; f + 1 < width; ++f) {
            d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = rows[i][f];
        }
    }
    d.labels = std::move(labels);
    d.num_classes = *std::max_element(d.labels.begin(), d.labels.end()) + 1;
    return d;
}

void save_csv(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (std::size_t f = 0; f < data.dims(); ++f) out << 'x' << f << ',';
    out << "label\n";
    char buf[40];
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t f = 0; f < data.dims(); ++f) {
            std::snprintf(buf, sizeof buf, "%.17g",
                          data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)));
            out << buf << ',';
        }
        out << data.labels[i] << '\n';
    }
}

}  // namespace neat
