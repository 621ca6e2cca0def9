#pragma once

#include <filesystem>
#include <string_view>

#include <json.hpp>

#include "accdiff/pipeline.hpp"

namespace accdiff {

/// Missing fields keep their defaults; unknown fields are rejected.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& config);

PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace accdiff
