#include "argpipe/pipeline/manifest.hpp"

#include <fstream>

#include "argpipe/common/error.hpp"
#include "argpipe/common/hash.hpp"

namespace argpipe::pipeline {

namespace {

nlohmann::ordered_json hash_files(const std::vector<fs::path>& files) {
  nlohmann::ordered_json j;
  for (const auto& f : files) j[f.filename().string()] = hash_file(f.string());
  return j;
}

}  // namespace

ResumeCheck check_resume(const fs::path& manifest_path,
                         const std::string& stage,
                         const std::vector<fs::path>& inputs,
                         const std::string& config_hash, std::uint64_t seed) {
  if (!fs::exists(manifest_path)) return {ResumeState::kFresh, ""};
  nlohmann::ordered_json m;
  {
    std::ifstream in(manifest_path);
    try {
      in >> m;
    } catch (const nlohmann::json::exception& e) {
      return {ResumeState::kConflict,
              "existing manifest is unreadable: " + std::string(e.what())};
    }
  }
  if (m.value("stage", "") != stage)
    return {ResumeState::kConflict, "manifest belongs to stage '" +
                                        m.value("stage", "") + "'"};
  if (m.value("config_hash", "") != config_hash)
    return {ResumeState::kConflict,
            "config hash changed (manifest " + m.value("config_hash", "") +
                ", current " + config_hash +
                "); re-run with --force or use a clean directory"};
  if (m.value("seed", std::uint64_t{0}) != seed)
    return {ResumeState::kConflict,
            "seed changed; re-run with --force or use a clean directory"};
  const auto current = hash_files(inputs);
  if (!m.contains("inputs") || m["inputs"] != current)
    return {ResumeState::kConflict,
            "input files changed since this stage last ran; re-run with "
            "--force or use a clean directory"};
  // outputs must still be present and unmodified for a no-op resume
  if (m.contains("outputs")) {
    for (const auto& [name, hash] : m["outputs"].items()) {
      const fs::path p = manifest_path.parent_path() / name;
      if (!fs::exists(p) || hash_file(p.string()) != hash.get<std::string>())
        return {ResumeState::kConflict,
                "output file '" + name +
                    "' is missing or modified; re-run with --force"};
    }
  }
  return {ResumeState::kUpToDate, ""};
}

void write_manifest(const fs::path& manifest_path, const std::string& stage,
                    const std::vector<fs::path>& inputs,
                    const std::string& config_hash, std::uint64_t seed,
                    const nlohmann::ordered_json& counts,
                    const std::vector<fs::path>& outputs) {
  nlohmann::ordered_json m;
  m["stage"] = stage;
  m["config_hash"] = config_hash;
  m["seed"] = seed;
  m["inputs"] = hash_files(inputs);
  m["counts"] = counts;
  m["outputs"] = hash_files(outputs);
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot write manifest: " + manifest_path.string());
  out << m.dump(2) << '\n';
}

void require_input(const fs::path& path, const std::string& producing_stage) {
  if (!fs::exists(path))
    throw IoError("missing input file " + path.filename().string() +
                  "; run the " + producing_stage + " stage first");
}

}  // namespace argpipe::pipeline
