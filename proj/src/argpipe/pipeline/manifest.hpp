#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace argpipe::pipeline {

namespace fs = std::filesystem;

// Every stage records what it consumed and produced: input hashes, the
// config hash, the seed and per-file output hashes. Re-running a stage with
// identical inputs is a no-op; silent input drift is a hard error unless
// forced.
enum class ResumeState { kFresh, kUpToDate, kConflict };

struct ResumeCheck {
  ResumeState state = ResumeState::kFresh;
  std::string explanation;
};

ResumeCheck check_resume(const fs::path& manifest_path,
                         const std::string& stage,
                         const std::vector<fs::path>& inputs,
                         const std::string& config_hash, std::uint64_t seed);

void write_manifest(const fs::path& manifest_path, const std::string& stage,
                    const std::vector<fs::path>& inputs,
                    const std::string& config_hash, std::uint64_t seed,
                    const nlohmann::ordered_json& counts,
                    const std::vector<fs::path>& outputs);

// Throws IoError naming the producing stage when a required file is absent.
void require_input(const fs::path& path, const std::string& producing_stage);

}  // namespace argpipe::pipeline
