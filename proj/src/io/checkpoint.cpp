#include "mtrl/io/checkpoint.hpp"

#include <json.hpp>

#include <fstream>
#include <iterator>
#include <sstream>

#include "mtrl/errors.hpp"

namespace mtrl::io {

using nlohmann::json;
using policy::MultiHeadNet;
using policy::NetArchitecture;

namespace {

json arch_to_json(const NetArchitecture& a) {
  return {{"in_dim", a.in_dim},
          {"trunk_hidden", a.trunk_hidden},
          {"head_hidden", a.head_hidden},
          {"out_dim", a.out_dim},
          {"num_heads", a.num_heads}};
}

NetArchitecture arch_from_json(const json& j) {
  NetArchitecture a;
  a.in_dim = j.at("in_dim").get<std::size_t>();
  a.trunk_hidden = j.at("trunk_hidden").get<std::vector<std::size_t>>();
  a.head_hidden = j.at("head_hidden").get<std::vector<std::size_t>>();
  a.out_dim = j.at("out_dim").get<std::size_t>();
  a.num_heads = j.at("num_heads").get<std::size_t>();
  return a;
}

json net_to_json(const MultiHeadNet& net) {
  json params = json::object();
  const auto names = net.parameter_names();
  const auto tensors = net.parameters();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& t = *tensors[i];
    params[names[i]] = {{"shape", {t.rows(), t.cols()}},
                        {"data", std::vector<double>(t.values().begin(), t.values().end())}};
  }
  return {{"architecture", arch_to_json(net.architecture())}, {"parameters", params}};
}

MultiHeadNet net_from_json(const json& j, const std::string& which) {
  const auto arch = arch_from_json(j.at("architecture"));
  if (arch.num_heads == 0 || arch.in_dim == 0 || arch.out_dim == 0) {
    throw CheckpointError(which + ": degenerate architecture");
  }
  // Shapes come from a freshly built network; values from the file.
  Rng scratch(0);
  MultiHeadNet net(arch, scratch);
  const auto names = net.parameter_names();
  const auto& params = j.at("parameters");
  if (params.size() != names.size()) {
    throw CheckpointError(which + ": expected " + std::to_string(names.size()) +
                          " parameter tensors, found " + std::to_string(params.size()));
  }
  auto tensors = net.parameters();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!params.contains(names[i])) throw CheckpointError(which + ": missing tensor " + names[i]);
    const auto& entry = params.at(names[i]);
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    auto& t = *tensors[i];
    if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols()) {
      throw CheckpointError(which + ": tensor " + names[i] + " has shape inconsistent with the architecture");
    }
    const auto& data = entry.at("data");
    if (!data.is_array() || data.size() != t.size()) {
      throw CheckpointError(which + ": tensor " + names[i] + " has wrong element count");
    }
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (!data[k].is_number()) {
        throw CheckpointError(which + ": tensor " + names[i] + " holds a non-numeric value");
      }
      t[k] = data[k].get<double>();
    }
  }
  return net;
}

}  // namespace

std::size_t Checkpoint::head_for(const std::string& env_name) const {
  if (actor.num_heads() == 1) return 0;
  for (std::size_t i = 0; i < env_names.size(); ++i) {
    if (env_names[i] == env_name) return i;
  }
  throw std::out_of_range("checkpoint has no head for environment '" + env_name + "'");
}

std::string serialize_checkpoint(const Checkpoint& c) {
  json j;
  j["format_version"] = c.format_version;
  j["kind"] = c.kind;
  j["env_names"] = c.env_names;
  j["seed"] = c.seed;
  j["config"] = c.config;
  j["actor"] = net_to_json(c.actor.net());
  j["critic"] = c.critic ? net_to_json(c.critic->net()) : json(nullptr);
  return j.dump(1) + "\n";
}

Checkpoint deserialize_checkpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
  try {
    Checkpoint c;
    c.format_version = j.at("format_version").get<int>();
    if (c.format_version != kCheckpointFormatVersion) {
      throw CheckpointError("checkpoint format_version " + std::to_string(c.format_version) +
                            " is not supported (expected " +
                            std::to_string(kCheckpointFormatVersion) + ")");
    }
    c.kind = j.at("kind").get<std::string>();
    c.env_names = j.at("env_names").get<std::vector<std::string>>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.config = j.at("config").get<std::map<std::string, std::string>>();
    c.actor = policy::ActorNetwork(net_from_json(j.at("actor"), "actor"));
    if (!j.at("critic").is_null()) {
      c.critic = policy::CriticNetwork(net_from_json(j.at("critic"), "critic"));
    }
    if (c.actor.num_heads() > 1 && c.env_names.size() != c.actor.num_heads()) {
      throw CheckpointError("env_names does not cover every actor head");
    }
    return c;
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string text = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw CheckpointError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_checkpoint(text);
}

}  // namespace mtrl::io
