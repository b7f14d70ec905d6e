#include "argpipe/nn/checkpoint.hpp"

#include <fstream>

#include "argpipe/common/error.hpp"

namespace argpipe::nn {

namespace {

OrderedJson parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  OrderedJson j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed checkpoint " + path + ": " + e.what());
  }
  return j;
}

}  // namespace

OrderedJson checkpoint_to_json(const std::string& kind,
                               const OrderedJson& config,
                               const ParameterStore& store) {
  OrderedJson j;
  j["format_version"] = kCheckpointVersion;
  j["kind"] = kind;
  j["config"] = config;
  OrderedJson params;
  for (const auto& p : store.all()) {
    OrderedJson entry;
    entry["rows"] = p->value.rows();
    entry["cols"] = p->value.cols();
    OrderedJson data = OrderedJson::array();
    for (size_t i = 0; i < p->value.size(); ++i)
      data.push_back(p->value.data()[i]);
    entry["data"] = std::move(data);
    params[p->name] = std::move(entry);
  }
  j["params"] = std::move(params);
  return j;
}

void save_checkpoint(const std::string& path, const std::string& kind,
                     const OrderedJson& config, const ParameterStore& store) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out << checkpoint_to_json(kind, config, store).dump() << '\n';
}

CheckpointHeader read_checkpoint_header(const std::string& path) {
  OrderedJson j = parse_file(path);
  CheckpointHeader h;
  try {
    h.version = j.at("format_version").get<int>();
    h.kind = j.at("kind").get<std::string>();
    h.config = j.at("config");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint header missing fields: " +
                          std::string(e.what()));
  }
  if (h.version != kCheckpointVersion)
    throw ValidationError("unsupported checkpoint version " +
                          std::to_string(h.version));
  return h;
}

void load_checkpoint_weights(const std::string& path, ParameterStore& store) {
  OrderedJson j = parse_file(path);
  const auto& params = j.at("params");
  for (auto& p : store.all()) {
    if (!params.contains(p->name))
      throw ValidationError("checkpoint lacks parameter " + p->name);
    const auto& entry = params.at(p->name);
    if (entry.at("rows").get<int>() != p->value.rows() ||
        entry.at("cols").get<int>() != p->value.cols())
      throw ShapeError("checkpoint shape mismatch for " + p->name);
    const auto& data = entry.at("data");
    if (data.size() != p->value.size())
      throw ShapeError("checkpoint data size mismatch for " + p->name);
    for (size_t i = 0; i < p->value.size(); ++i)
      p->value.data()[i] = data[i].get<double>();
  }
}

}  // namespace argpipe::nn
