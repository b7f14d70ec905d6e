#pragma once

#include <string>

#include "json.hpp"

#include "argpipe/nn/param.hpp"

namespace argpipe::nn {

using OrderedJson = nlohmann::ordered_json;

inline constexpr int kCheckpointVersion = 1;

// Versioned header + named weight arrays + a caller-supplied config
// snapshot. The store's creation order fixes the serialization order.
OrderedJson checkpoint_to_json(const std::string& kind,
                               const OrderedJson& config,
                               const ParameterStore& store);

void save_checkpoint(const std::string& path, const std::string& kind,
                     const OrderedJson& config, const ParameterStore& store);

struct CheckpointHeader {
  int version = 0;
  std::string kind;
  OrderedJson config;
};

// Reads header + config without touching weights (used to rebuild the model
// before loading values).
CheckpointHeader read_checkpoint_header(const std::string& path);

// Loads weight values into an already-constructed store. Every parameter in
// the store must be present in the file with a matching shape.
void load_checkpoint_weights(const std::string& path, ParameterStore& store);

}  // namespace argpipe::nn
