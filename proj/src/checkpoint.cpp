#include "neat/checkpoint.hpp"

#include <fstream>

#include "neat/errors.hpp"

namespace neat {

using nlohmann::ordered_json;

ordered_json model_to_json(const Model& model) {
    auto layers = ordered_json::array();
    for (const auto& l : model.layers) {
        ordered_json jl;
        jl["in_dim"] = l.in_dim();
        jl["out_dim"] = l.out_dim();
        auto w = ordered_json::array();
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
        }
        jl["weights"] = std::move(w);
        jl["biases"] = std::vector<double>(l.biases.data(), l.biases.data() + l.biases.size());
        layers.push_back(std::move(jl));
    }
    return layers;
}

Model model_from_json(const ordered_json& j) {
    if (!j.is_array() || j.empty()) throw IoError("checkpoint: 'layers' must be a non-empty array");
    Model m;
    for (const auto& jl : j) {
        const auto in = jl.at("in_dim").get<std::size_t>();
        const auto out = jl.at("out_dim").get<std::size_t>();
        const auto w = jl.at("weights").get<std::vector<double>>();
        const auto b = jl.at("biases").get<std::vector<double>>();
        if (w.size() != in * out || b.size() != out) throw IoError("checkpoint: layer array sizes do not match dims");
        DenseLayer layer;
        layer.weights.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
        for (std::size_t r = 0; r < out; ++r) {
            for (std::size_t c = 0; c < in; ++c) {
                layer.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w[r * in + c];
            }
        }
        layer.biases = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
        m.layers.push_back(std::move(layer));
    }
    try {
        m.validate();
    } catch (const DomainError& e) {
        throw IoError(std::string("checkpoint: ") + e.what());
    }
    return m;
}

ordered_json schedule_to_json(const VgSchedule& s) {
    ordered_json j;
    j["mode"] = to_string(s.mode);
    j["anchor"] = to_string(s.anchor);
    j["search_grid"] = s.search_grid;
    auto entries = ordered_json::array();
    for (const auto& e : s.entries) {
        entries.push_back({{"v_g", e.v_g}, {"w_cut", e.w_cut}, {"w_anchor", e.w_anchor}, {"flag", to_string(e.flag)}});
    }
    j["entries"] = std::move(entries);
    return j;
}

VgSchedule schedule_from_json(const ordered_json& j) {
    VgSchedule s;
    s.mode = parse_schedule_mode(j.at("mode").get<std::string>());
    s.anchor = parse_scale_anchor(j.at("anchor").get<std::string>());
    s.search_grid = j.at("search_grid").get<std::vector<double>>();
    for (const auto& je : j.at("entries")) {
        ScheduleEntry e;
        e.v_g = je.at("v_g").get<double>();
        e.w_cut = je.at("w_cut").get<double>();
        e.w_anchor = je.at("w_anchor").get<double>();
        e.flag = parse_entry_flag(je.at("flag").get<std::string>());
        s.entries.push_back(e);
    }
    return s;
}

std::string checkpoint_to_string(const Checkpoint& c) {
    ordered_json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["layers"] = model_to_json(c.model);
    j["schedule"] = c.schedule ? schedule_to_json(*c.schedule) : ordered_json(nullptr);
    j["config"] = c.config;
    return j.dump(2);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << checkpoint_to_string(checkpoint) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    try {
        const auto j = ordered_json::parse(in);
        const int version = j.at("format_version").get<int>();
        if (version != kCheckpointFormatVersion) {
            throw IoError("checkpoint " + path.string() + ": unsupported format_version " + std::to_string(version));
        }
        Checkpoint c;
        c.model = model_from_json(j.at("layers"));
        if (j.contains("schedule") && !j.at("schedule").is_null()) c.schedule = schedule_from_json(j.at("schedule"));
        if (j.contains("config")) c.config = j.at("config");
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint " + path.string() + ": " + e.what());
    } catch (const DomainError& e) {
        throw IoError("checkpoint " + path.string() + ": " + e.what());
    }
}

}  // namespace neat
