#include "pls/checkpoint.hpp"

#include <fstream>

#include "pls/errors.hpp"

namespace pls {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()},
              {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from_json(const json& j) {
  try {
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: bad matrix entry: ") + e.what());
  }
}

json model_to_json(const Model& model, const json& metadata) {
  json trunk = json::array();
  for (const auto& layer : model.trunk()) {
    trunk.push_back({{"weight", matrix_to_json(layer.weight)}, {"bias", matrix_to_json(layer.bias)}});
  }
  return json{{"format_version", kCheckpointFormatVersion},
              {"head_mode", to_string(model.head_mode())},
              {"num_classes", model.num_classes()},
              {"embed_dim", model.embed_dim()},
              {"trunk", std::move(trunk)},
              {"logit_head", matrix_to_json(model.logit_head())},
              {"smoothing_head", matrix_to_json(model.smoothing_head())},
              {"metadata", metadata}};
}

Model model_from_json(const json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw FormatError("checkpoint: unsupported format_version " + std::to_string(version));
    }
    std::vector<DenseLayer> trunk;
    for (const auto& layer : j.at("trunk")) {
      trunk.push_back({matrix_from_json(layer.at("weight")), matrix_from_json(layer.at("bias"))});
    }
    Model model(std::move(trunk), matrix_from_json(j.at("logit_head")),
                matrix_from_json(j.at("smoothing_head")),
                head_mode_from_string(j.at("head_mode").get<std::string>()));
    if (model.num_classes() != j.at("num_classes").get<std::size_t>() ||
        model.embed_dim() != j.at("embed_dim").get<std::size_t>()) {
      throw FormatError("checkpoint: declared num_classes/embed_dim disagree with tensors");
    }
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const json& metadata) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << model_to_json(model, metadata).dump() << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("checkpoint " + path.string() + ": " + e.what());
  }
  Checkpoint cp{model_from_json(j), j.value("metadata", json::object())};
  return cp;
}

}  // namespace pls
