// SPDX-License-Identifier: Apache-2.0
#include "cfspm/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "cfspm/error.hpp"
#include "cfspm/signal/container.hpp"

namespace cfspm {

void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params,
                     const nlohmann::json& config_echo) {
  std::filesystem::create_directories(dir);
  nlohmann::json table = nlohmann::json::object();
  for (const auto& [name, t] : named_parameters(params)) {
    table[name] = t.shape();
    signal::write_container(dir / (name + ".cfsp"), signal::from_tensor(t));
  }
  std::ofstream os(dir / "checkpoint.json");
  if (!os) throw IoError("cannot write " + (dir / "checkpoint.json").string());
  os << nlohmann::json{{"config", config_echo}, {"parameters", table}}.dump(2) << '\n';
}

nlohmann::json load_checkpoint(const std::filesystem::path& dir, ModelParams& params) {
  std::ifstream is(dir / "checkpoint.json");
  if (!is) throw IoError("cannot open " + (dir / "checkpoint.json").string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint.json: ") + e.what());
  }
  const auto named = named_parameters(params);
  if (!j.contains("parameters") || j["parameters"].size() != named.size()) {
    throw IoError("checkpoint parameter table does not match the model");
  }
  for (const auto& [name, t] : named) {
    if (!j["parameters"].contains(name) || j["parameters"][name].get<Shape>() != t.shape()) {
      throw IoError("checkpoint entry '" + name + "' missing or mis-shaped");
    }
    const Tensor loaded = signal::to_tensor(signal::read_container(dir / (name + ".cfsp")));
    if (loaded.shape() != t.shape()) throw IoError("checkpoint container '" + name + "' mis-shaped");
    Tensor handle = t;
    std::ranges::copy(loaded.data(), handle.mutable_data().begin());
  }
  return j.value("config", nlohmann::json::object());
}

}  // namespace cfspm
