#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "neat/model.hpp"
#include "neat/schedule.hpp"

namespace neat {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
    Model model;
    std::optional<VgSchedule> schedule;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

nlohmann::ordered_json model_to_json(const Model& model);
Model model_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json schedule_to_json(const VgSchedule& schedule);
VgSchedule schedule_from_json(const nlohmann::ordered_json& j);

std::string checkpoint_to_string(const Checkpoint& checkpoint);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws IoError on unreadable or malformed files.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace neat
