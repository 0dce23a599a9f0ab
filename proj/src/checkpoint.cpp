#include "lemda/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace lemda {

namespace {
constexpr const char* kMagic = "LEMDA-CKPT";
constexpr int kVersion = 1;
}  // namespace

void save_checkpoint(const ParameterSet& params, const std::string& path) {
  nlohmann::json doc;
  doc["magic"] = kMagic;
  doc["version"] = kVersion;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : params) {
    nlohmann::json t;
    t["name"] = p.name;
    t["shape"] = p.tensor.shape();
    t["data"] = p.tensor.data();
    tensors.push_back(std::move(t));
  }
  doc["tensors"] = std::move(tensors);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << doc.dump();
}

void load_checkpoint(ParameterSet& params, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  nlohmann::json doc;
  in >> doc;
  if (!doc.contains("magic") || doc["magic"] != kMagic) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  if (!doc.contains("version") || doc["version"].get<int>() != kVersion) {
    throw std::runtime_error("unsupported checkpoint version in " + path);
  }
  const auto& tensors = doc.at("tensors");
  if (tensors.size() != params.size()) {
    throw std::runtime_error("checkpoint has " + std::to_string(tensors.size()) +
                             " tensors, expected " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = tensors[i];
    if (t.at("name").get<std::string>() != params[i].name) {
      throw std::runtime_error("checkpoint tensor " + std::to_string(i) + " is '" +
                               t.at("name").get<std::string>() + "', expected '" + params[i].name + "'");
    }
    const auto shape = t.at("shape").get<Shape>();
    if (shape != params[i].tensor.shape()) {
      throw std::runtime_error("checkpoint tensor '" + params[i].name + "' shape mismatch");
    }
    auto data = t.at("data").get<std::vector<double>>();
    if (data.size() != params[i].tensor.numel()) {
      throw std::runtime_error("checkpoint tensor '" + params[i].name + "' length mismatch");
    }
    params[i].tensor.data() = std::move(data);
  }
}

}  // namespace lemda
