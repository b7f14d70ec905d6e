#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "argpipe/gen/generator.hpp"
#include "argpipe/pipeline/config.hpp"

namespace argpipe::pipeline {

namespace fs = std::filesystem;

struct StageContext {
  fs::path dir;
  PipelineConfig cfg;
  bool force = false;
  bool quiet = false;
};

// Stage entry points; each reads the previous stage's record files from
// ctx.dir, writes its outputs plus a manifest there, and is a no-op when
// its manifest already matches the current inputs, config and seed.
void run_fixture(const StageContext& ctx);
void run_annotate(const StageContext& ctx,
                  const std::optional<std::string>& model_path);
void run_normalize(const StageContext& ctx);
void run_filter(const StageContext& ctx);
// variant: argspan | argspanscheme-parallel | argspanscheme-pipelined |
//          argu-mono | argu-dual | argu-stance | argu-scheme
// For the tagger variants an optional topic split (ratio "cv", "5:1",
// "4:2" or "2:4" with a split id) trains on the split's training side and
// reports validation metrics; a split manifest is written alongside.
void run_train(const StageContext& ctx, const std::string& variant,
               const std::optional<std::string>& split_ratio = std::nullopt,
               int split_id = 1);
void run_generate(const StageContext& ctx,
                  const std::optional<std::string>& model_path,
                  const std::optional<std::string>& requests_path, int count);
void run_evaluate(const StageContext& ctx);

nlohmann::ordered_json generation_record_to_json(
    const gen::GenerationRecord& rec, const std::string& id);

// Stage file names (shared with tests).
inline constexpr const char* kKbFile = "kb.jsonl";
inline constexpr const char* kP1File = "p1.jsonl";
inline constexpr const char* kPcFile = "pc.jsonl";
inline constexpr const char* kPcAnnotatedFile = "pc_annotated.jsonl";
inline constexpr const char* kPcNormalizedFile = "pc_normalized.jsonl";
inline constexpr const char* kNormalizationReportFile =
    "normalization_report.jsonl";
inline constexpr const char* kSchemeFilterReportFile =
    "scheme_filter_report.json";
inline constexpr const char* kPcFilteredFile = "pc_filtered.jsonl";
inline constexpr const char* kKbExpandedFile = "kb_expanded.jsonl";
inline constexpr const char* kMergedFile = "merged.jsonl";
inline constexpr const char* kFilterReportFile = "filter_report.json";
inline constexpr const char* kGenerationsFile = "generations.jsonl";
inline constexpr const char* kEvalReportFile = "eval_report.json";
inline constexpr const char* kEvalTableFile = "eval_table.txt";

std::string model_file_name(const std::string& variant);
std::string train_log_file_name(const std::string& variant);

}  // namespace argpipe::pipeline
