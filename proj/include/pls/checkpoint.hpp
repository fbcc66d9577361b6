#pragma once

#include <filesystem>

#include <json.hpp>

#include "pls/nn.hpp"

namespace pls {

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

// {"format_version", "head_mode", "num_classes", "embed_dim", "trunk": [{weight, bias}],
//  "logit_head", "smoothing_head", "metadata"}; every matrix is {"rows", "cols", "data"}.
nlohmann::json model_to_json(const Model& model, const nlohmann::json& metadata = nlohmann::json::object());
Model model_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const nlohmann::json& metadata = nlohmann::json::object());

struct Checkpoint {
  Model model;
  nlohmann::json metadata;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pls
