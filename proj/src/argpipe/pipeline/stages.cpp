#include "argpipe/pipeline/stages.hpp"

#include <fstream>
#include <iostream>
#include <set>

#include "argpipe/common/hash.hpp"
#include "argpipe/corpus/serde.hpp"
#include "argpipe/corpus/tokenize.hpp"
#include "argpipe/eval/report.hpp"
#include "argpipe/grounder/grounder.hpp"
#include "argpipe/normalize/claims.hpp"
#include "argpipe/normalize/filters.hpp"
#include "argpipe/normalize/normalize.hpp"
#include "argpipe/grounder/span_metrics.hpp"
#include "argpipe/pipeline/fixture.hpp"
#include "argpipe/pipeline/manifest.hpp"
#include "argpipe/tagger/splits.hpp"
#include "argpipe/tagger/tagger.hpp"

namespace argpipe::pipeline {

using corpus::AnnotatedExample;
using corpus::ArgumentScheme;
using corpus::KnowledgeBase;
using nlohmann::ordered_json;

namespace {

void note(const StageContext& ctx, const std::string& msg) {
  if (!ctx.quiet) std::cout << msg << '\n';
}

// Returns true when the stage may be skipped (manifest up to date); throws
// on conflicts unless forced.
bool stage_preflight(const StageContext& ctx, const std::string& stage,
                     const std::vector<fs::path>& inputs) {
  const ResumeCheck rc =
      check_resume(ctx.dir / (stage + ".manifest.json"), stage, inputs,
                   config_hash(ctx.cfg), ctx.cfg.seed);
  if (rc.state == ResumeState::kUpToDate) {
    note(ctx, stage + ": up to date, nothing to do");
    return true;
  }
  if (rc.state == ResumeState::kConflict && !ctx.force)
    throw ConfigError(stage + ": " + rc.explanation);
  return false;
}

void finish_stage(const StageContext& ctx, const std::string& stage,
                  const std::vector<fs::path>& inputs,
                  const ordered_json& counts,
                  const std::vector<fs::path>& outputs) {
  write_manifest(ctx.dir / (stage + ".manifest.json"), stage, inputs,
                 config_hash(ctx.cfg), ctx.cfg.seed, counts, outputs);
  note(ctx, stage + ": done");
}

std::unique_ptr<normalize::ClaimDetector> make_claim_detector(
    const PipelineConfig& cfg) {
  if (cfg.claim_detector == "constant-true")
    return std::make_unique<normalize::ConstantClaimDetector>(true);
  return std::make_unique<normalize::RuleBasedClaimDetector>();
}

void write_json_file(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string scheme_str(ArgumentScheme s) {
  return std::string(corpus::scheme_name(s));
}

}  // namespace

std::string model_file_name(const std::string& variant) {
  return "model_" + variant + ".ckpt.json";
}

std::string train_log_file_name(const std::string& variant) {
  return "train_log_" + variant + ".json";
}

void run_fixture(const StageContext& ctx) {
  if (stage_preflight(ctx, "fixture", {})) return;
  fs::create_directories(ctx.dir);
  FixtureSpec spec = ctx.cfg.fixture;
  if (spec.seed == 0) spec.seed = derive_seed(ctx.cfg.seed, "fixture");
  FixtureOutput fx = make_fixture(spec);
  for (const auto& ex : fx.labeled) ex.validate(fx.kb);

  corpus::write_kb(fx.kb, (ctx.dir / kKbFile).string());
  corpus::write_corpus(fx.labeled, (ctx.dir / kP1File).string());
  corpus::write_corpus(fx.unlabeled, (ctx.dir / kPcFile).string());

  ordered_json counts;
  counts["kb"] = fx.kb.size();
  counts["labeled"] = fx.labeled.size();
  counts["unlabeled"] = fx.unlabeled.size();
  finish_stage(ctx, "fixture", {}, counts,
               {ctx.dir / kKbFile, ctx.dir / kP1File, ctx.dir / kPcFile});
}

void run_annotate(const StageContext& ctx,
                  const std::optional<std::string>& model_path) {
  const fs::path p1 = ctx.dir / kP1File;
  const fs::path pc = ctx.dir / kPcFile;
  require_input(p1, "fixture");
  require_input(pc, "fixture");
  std::vector<fs::path> inputs = {p1, pc};
  if (model_path) inputs.push_back(*model_path);
  if (stage_preflight(ctx, "annotate", inputs)) return;

  auto labeled = corpus::read_corpus(p1.string());
  auto unlabeled = corpus::read_corpus(pc.string());

  std::unique_ptr<tagger::SchemeTagger> model;
  if (model_path) {
    model = tagger::SchemeTagger::load(*model_path);
    note(ctx, "annotate: loaded tagger from " + *model_path);
  } else {
    tagger::SchemeTaggerConfig tcfg = ctx.cfg.tagger;
    tcfg.seed = derive_seed(ctx.cfg.seed, "annotate-tagger");
    tcfg.train.seed = derive_seed(ctx.cfg.seed, "annotate-tagger-train");
    model = std::make_unique<tagger::SchemeTagger>(
        tcfg, tagger::SchemeTagger::build_vocab(labeled));
    auto log = model->train(labeled, {});
    note(ctx, "annotate: trained tagger for " +
                  std::to_string(log.stopped_at_step) + " steps (" +
                  log.stop_reason + ")");
  }
  model->save((ctx.dir / "annotate_tagger.ckpt.json").string());

  std::vector<AnnotatedExample> annotated;
  annotated.reserve(unlabeled.size());
  for (auto& ex : unlabeled) {
    tagger::SchemePrediction pred = model->predict(ex.argument);
    AnnotatedExample out = ex;
    out.spans = pred.spans;
    out.schemes = pred.labels;
    out.scheme_probs.clear();
    for (const auto& [s, p] : pred.probabilities) out.scheme_probs[s] = p;
    out.provenance = corpus::Provenance::kPcAuto;
    annotated.push_back(std::move(out));
  }
  corpus::write_corpus(annotated, (ctx.dir / kPcAnnotatedFile).string());

  ordered_json counts;
  counts["annotated"] = annotated.size();
  finish_stage(ctx, "annotate", inputs, counts,
               {ctx.dir / kPcAnnotatedFile,
                ctx.dir / "annotate_tagger.ckpt.json"});
}

void run_normalize(const StageContext& ctx) {
  const fs::path annotated_path = ctx.dir / kPcAnnotatedFile;
  const fs::path kb_path = ctx.dir / kKbFile;
  require_input(annotated_path, "annotate");
  require_input(kb_path, "fixture");
  const std::vector<fs::path> inputs = {annotated_path, kb_path};
  if (stage_preflight(ctx, "normalize", inputs)) return;

  auto annotated = corpus::read_corpus(annotated_path.string());
  KnowledgeBase kb = corpus::read_kb(kb_path.string());

  // composition order is fixed: scheme filter, then embedding normalization
  auto scheme_filtered = normalize::scheme_probability_filter(
      annotated, ctx.cfg.filter.scheme_prob_factor);

  normalize::HashedBowEmbedding provider(ctx.cfg.normalizer.embedding_width);
  auto result = normalize::normalize_corpus(scheme_filtered.kept, kb, provider,
                                            ctx.cfg.normalizer);

  corpus::write_corpus(result.examples, (ctx.dir / kPcNormalizedFile).string());
  {
    std::ofstream out(ctx.dir / kNormalizationReportFile);
    if (!out) throw IoError("cannot write normalization report");
    for (const auto& rec : result.outcomes) out << rec.to_json().dump() << '\n';
  }

  ordered_json scheme_report;
  {
    ordered_json means;
    for (ArgumentScheme s : corpus::all_schemes()) {
      auto it = scheme_filtered.mean_probs.find(s);
      if (it != scheme_filtered.mean_probs.end())
        means[scheme_str(s)] = it->second;
    }
    scheme_report["mean_probs"] = std::move(means);
    scheme_report["kept"] = scheme_filtered.kept.size();
    ordered_json dropped = ordered_json::array();
    for (const auto& [id, reason] : scheme_filtered.dropped) {
      dropped.push_back({{"id", id},
                         {"reason", std::string(drop_reason_name(reason))}});
    }
    scheme_report["dropped"] = std::move(dropped);
  }
  write_json_file(ctx.dir / kSchemeFilterReportFile, scheme_report);

  long direct = 0, indirect = 0, unmapped = 0;
  for (const auto& rec : result.outcomes) {
    switch (rec.outcome) {
      case normalize::SpanOutcome::kDirect: ++direct; break;
      case normalize::SpanOutcome::kIndirect: ++indirect; break;
      case normalize::SpanOutcome::kUnmapped: ++unmapped; break;
    }
  }
  ordered_json counts;
  counts["scheme_filter_kept"] = scheme_filtered.kept.size();
  counts["scheme_filter_dropped"] = scheme_filtered.dropped.size();
  counts["spans_direct"] = direct;
  counts["spans_indirect"] = indirect;
  counts["spans_unmapped"] = unmapped;
  finish_stage(ctx, "normalize", inputs, counts,
               {ctx.dir / kPcNormalizedFile, ctx.dir / kNormalizationReportFile,
                ctx.dir / kSchemeFilterReportFile});
}

void run_filter(const StageContext& ctx) {
  const fs::path normalized_path = ctx.dir / kPcNormalizedFile;
  const fs::path report_path = ctx.dir / kNormalizationReportFile;
  const fs::path kb_path = ctx.dir / kKbFile;
  const fs::path p1_path = ctx.dir / kP1File;
  require_input(normalized_path, "normalize");
  require_input(report_path, "normalize");
  require_input(kb_path, "fixture");
  require_input(p1_path, "fixture");
  const std::vector<fs::path> inputs = {normalized_path, report_path, kb_path,
                                        p1_path};
  if (stage_preflight(ctx, "filter", inputs)) return;

  auto normalized = corpus::read_corpus(normalized_path.string());
  auto p1 = corpus::read_corpus(p1_path.string());
  KnowledgeBase kb = corpus::read_kb(kb_path.string());

  std::vector<normalize::SpanOutcomeRecord> outcomes;
  {
    std::ifstream in(report_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      outcomes.push_back(
          normalize::SpanOutcomeRecord::from_json(ordered_json::parse(line)));
    }
  }

  const auto claims = make_claim_detector(ctx.cfg);
  auto result = normalize::apply_quality_filters(normalized, outcomes, kb,
                                                 ctx.cfg.filter, *claims);
  const auto& survivors = result.survivors;
  const auto& dropped = result.dropped;

  corpus::write_corpus(survivors, (ctx.dir / kPcFilteredFile).string());
  corpus::write_kb(result.kb, (ctx.dir / kKbExpandedFile).string());

  std::vector<AnnotatedExample> merged = p1;
  merged.insert(merged.end(), survivors.begin(), survivors.end());
  corpus::write_corpus(merged, (ctx.dir / kMergedFile).string());

  ordered_json report;
  report["kept"] = survivors.size();
  report["dropped"] = dropped.size();
  {
    std::map<std::string, long> reason_counts;
    for (const auto& [id, reason] : dropped)
      ++reason_counts[std::string(normalize::drop_reason_name(reason))];
    ordered_json rc;
    for (const auto& [name, n] : reason_counts) rc[name] = n;
    report["reason_counts"] = std::move(rc);
    ordered_json rows = ordered_json::array();
    for (const auto& [id, reason] : dropped)
      rows.push_back({{"id", id},
                      {"keep", false},
                      {"reason", std::string(normalize::drop_reason_name(reason))}});
    for (const auto& ex : survivors)
      rows.push_back({{"id", ex.id}, {"keep", true}});
    report["per_example"] = std::move(rows);
  }
  report["kb_added"] = result.kb.size() - kb.size();
  write_json_file(ctx.dir / kFilterReportFile, report);

  ordered_json counts;
  counts["kept"] = survivors.size();
  counts["dropped"] = dropped.size();
  counts["merged"] = merged.size();
  counts["kb_total"] = result.kb.size();
  finish_stage(ctx, "filter", inputs, counts,
               {ctx.dir / kPcFilteredFile, ctx.dir / kKbExpandedFile,
                ctx.dir / kMergedFile, ctx.dir / kFilterReportFile});
}

namespace {

ordered_json train_log_json(const nn::TrainLog& log) {
  ordered_json j;
  j["stopped_at_step"] = log.stopped_at_step;
  j["stop_reason"] = log.stop_reason;
  ordered_json evals = ordered_json::array();
  for (const auto& [step, loss] : log.eval_losses)
    evals.push_back({{"step", step}, {"loss", loss}});
  j["eval_losses"] = std::move(evals);
  ordered_json steps = ordered_json::array();
  for (const auto& s : log.steps)
    steps.push_back({{"step", s.step},
                     {"loss", s.batch_loss},
                     {"grad_norm_preclip", s.grad_norm_preclip},
                     {"grad_norm_postclip", s.grad_norm_postclip}});
  j["steps"] = std::move(steps);
  return j;
}

}  // namespace

namespace {

ordered_json span_metrics_json(const grounder::SpanMetricsReport& report) {
  ordered_json j;
  j["partial_f1"] = report.partial_f1;
  j["full_f1"] = report.full_f1;
  j["overall_f1"] = report.overall_f1;
  j["grounding_accuracy"] = report.grounding_accuracy;
  return j;
}

}  // namespace

void run_train(const StageContext& ctx, const std::string& variant,
               const std::optional<std::string>& split_ratio, int split_id) {
  const fs::path merged_path = ctx.dir / kMergedFile;
  const fs::path kb_path = ctx.dir / kKbExpandedFile;
  require_input(merged_path, "filter");
  require_input(kb_path, "filter");
  const std::vector<fs::path> inputs = {merged_path, kb_path};
  const std::string stage = "train-" + variant;
  if (stage_preflight(ctx, stage, inputs)) return;

  auto merged = corpus::read_corpus(merged_path.string());
  KnowledgeBase kb = corpus::read_kb(kb_path.string());
  const fs::path model_path = ctx.dir / model_file_name(variant);
  const fs::path log_path = ctx.dir / train_log_file_name(variant);
  const fs::path metrics_path = ctx.dir / ("metrics_" + variant + ".json");
  std::vector<fs::path> outputs = {model_path, log_path};

  nn::TrainLog log;
  ordered_json counts;
  if (variant == "argspan") {
    if (split_ratio)
      throw ConfigError("topic splits apply to the tagger variants only");
    grounder::GrounderConfig gcfg = ctx.cfg.grounder;
    gcfg.seed = derive_seed(ctx.cfg.seed, stage);
    gcfg.train.seed = derive_seed(ctx.cfg.seed, stage + "-shuffle");
    std::vector<AnnotatedExample> usable;
    for (const auto& ex : merged) {
      if (!ex.variables.empty() && ex.variables.size() <= 5)
        usable.push_back(ex);
    }
    if (usable.empty())
      throw ValidationError("no rows with 1-5 variables to train on");
    grounder::SpanGrounder model(gcfg,
                                 grounder::SpanGrounder::build_vocab(usable, kb));
    log = model.train(usable, {}, kb);
    model.save(model_path.string());
    counts["train_rows"] = usable.size();

    grounder::SpanMetricsAccumulator acc;
    for (const auto& ex : usable) {
      std::vector<const corpus::FactVariable*> vars;
      for (const auto& id : ex.variables) vars.push_back(&kb.get(id));
      acc.add(model.ground(ex.argument, vars).decoded, ex.spans,
              ex.argument.token_count());
    }
    write_json_file(metrics_path, span_metrics_json(acc.report()));
    outputs.push_back(metrics_path);
  } else if (variant == "argspanscheme-parallel" ||
             variant == "argspanscheme-pipelined") {
    tagger::SchemeTaggerConfig tcfg = ctx.cfg.tagger;
    tcfg.variant = variant == "argspanscheme-parallel"
                       ? tagger::TaggerVariant::kParallel
                       : tagger::TaggerVariant::kPipelined;
    tcfg.seed = derive_seed(ctx.cfg.seed, stage);
    tcfg.train.seed = derive_seed(ctx.cfg.seed, stage + "-shuffle");

    std::vector<AnnotatedExample> train_rows = merged;
    std::vector<AnnotatedExample> val_rows;
    if (split_ratio) {
      const auto split = tagger::topic_split(
          merged, tagger::ratio_from_name(*split_ratio), split_id);
      train_rows = split.train;
      val_rows = split.validation;
      const fs::path split_path =
          ctx.dir / ("split_" + variant + ".manifest.json");
      write_json_file(split_path, tagger::split_manifest(split));
      outputs.push_back(split_path);
      counts["split_ratio"] = *split_ratio;
      counts["split_id"] = split_id;
    }
    tagger::SchemeTagger model(tcfg,
                               tagger::SchemeTagger::build_vocab(train_rows));
    log = model.train(train_rows, val_rows);
    model.save(model_path.string());
    counts["train_rows"] = train_rows.size();
    counts["validation_rows"] = val_rows.size();

    // span + scheme metrics over the evaluation side (validation when a
    // split is active, else the training set)
    const auto& eval_rows = val_rows.empty() ? train_rows : val_rows;
    grounder::SpanMetricsAccumulator span_acc;
    std::vector<std::set<ArgumentScheme>> preds, golds;
    for (const auto& ex : eval_rows) {
      const auto pred = model.predict(ex.argument);
      corpus::SpanLabeling gold = ex.spans;
      for (auto& s : gold.spans) s.grounding = std::string(corpus::kOthersGrounding);
      span_acc.add(pred.spans, gold, ex.argument.token_count());
      preds.push_back(pred.labels);
      golds.push_back(ex.schemes);
    }
    const auto scheme_report = tagger::scheme_f1(preds, golds);
    ordered_json metrics;
    metrics["span"] = span_metrics_json(span_acc.report());
    ordered_json per_scheme;
    for (ArgumentScheme s : corpus::all_schemes())
      per_scheme[scheme_str(s)] = scheme_report.per_scheme.at(s);
    metrics["scheme"] = {{"per_scheme", per_scheme},
                         {"overall_f1", scheme_report.overall}};
    write_json_file(metrics_path, metrics);
    outputs.push_back(metrics_path);
  } else if (variant == "argu-mono" || variant == "argu-dual" ||
             variant == "argu-stance" || variant == "argu-scheme") {
    if (split_ratio)
      throw ConfigError("topic splits apply to the tagger variants only");
    gen::GeneratorConfig gcfg = ctx.cfg.generator;
    gcfg.variant = gen::generator_variant_from_name(variant.substr(5));
    gcfg.seed = derive_seed(ctx.cfg.seed, stage);
    gcfg.train.seed = derive_seed(ctx.cfg.seed, stage + "-shuffle");
    gen::ArgumentGenerator model(
        gcfg, gen::ArgumentGenerator::build_vocab(merged, kb));
    std::vector<gen::ArgumentGenerator::TrainingRow> rows;
    long skipped = 0;
    std::string last_error;
    for (const auto& ex : merged) {
      try {
        rows.push_back(model.make_training_row(
            ex, kb, derive_seed(ctx.cfg.seed, "permute-" + ex.id)));
      } catch (const ValidationError& e) {
        ++skipped;
        last_error = e.what();
      }
    }
    if (rows.empty())
      throw ValidationError("no usable training rows for " + variant +
                            (last_error.empty() ? "" : ": " + last_error));
    log = model.train(rows, {});
    model.save(model_path.string());
    counts["train_rows"] = rows.size();
    counts["skipped_rows"] = skipped;
  } else {
    throw ConfigError("unknown training variant '" + variant + "'");
  }

  write_json_file(log_path, train_log_json(log));
  counts["stopped_at_step"] = log.stopped_at_step;
  counts["stop_reason"] = log.stop_reason;
  finish_stage(ctx, stage, inputs, counts, outputs);
}

ordered_json generation_record_to_json(const gen::GenerationRecord& rec,
                                       const std::string& id) {
  ordered_json j;
  j["id"] = id;
  j["topic"] = rec.input.topic;
  ordered_json vars = ordered_json::array();
  for (const auto& [tok, text] : rec.input.variables)
    vars.push_back({{"token", tok}, {"text", text}});
  j["variables"] = std::move(vars);
  j["variant"] = std::string(gen::generator_variant_name(rec.variant));
  if (rec.stance) j["stance"] = std::string(corpus::stance_name(*rec.stance));
  if (rec.scheme) j["scheme"] = scheme_str(*rec.scheme);
  j["control_codes"] = rec.control_codes;
  if (rec.variant == gen::GeneratorVariant::kDual) {
    j["template"] = rec.template_text;
    j["phase2_context"] = rec.phase2_context;
  }
  j["argument"] = rec.argument_text;
  j["beam_score"] = rec.beam_score;
  j["truncated"] = rec.truncated;
  j["flags"] = rec.flags;
  if (!rec.reference.empty()) j["reference"] = rec.reference;
  return j;
}

void run_generate(const StageContext& ctx,
                  const std::optional<std::string>& model_path,
                  const std::optional<std::string>& requests_path, int count) {
  std::string model_file;
  if (model_path) {
    model_file = *model_path;
  } else {
    // prefer the dual model, then mono, then the ablations
    for (const char* v : {"argu-dual", "argu-mono", "argu-stance",
                          "argu-scheme"}) {
      const fs::path p = ctx.dir / model_file_name(v);
      if (fs::exists(p)) {
        model_file = p.string();
        break;
      }
    }
    if (model_file.empty())
      throw IoError("no generator checkpoint found; run the train stage "
                    "first or pass --model");
  }

  std::vector<fs::path> inputs = {model_file};
  const fs::path merged_path = ctx.dir / kMergedFile;
  if (requests_path) {
    inputs.push_back(*requests_path);
  } else {
    require_input(merged_path, "filter");
    inputs.push_back(merged_path);
  }
  if (stage_preflight(ctx, "generate", inputs)) return;

  auto model = gen::ArgumentGenerator::load(model_file);

  struct Request {
    std::string id;
    std::string topic;
    std::vector<std::string> variables;
    corpus::Stance stance;
    std::optional<ArgumentScheme> scheme;
    std::uint64_t seed;
    std::string reference;
  };
  std::vector<Request> requests;

  if (requests_path) {
    std::ifstream in(*requests_path);
    if (!in) throw IoError("cannot open requests file: " + *requests_path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      ordered_json j;
      try {
        j = ordered_json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("requests line " + std::to_string(line_no) +
                              ": " + e.what());
      }
      Request r;
      r.id = j.value("id", "req_" + std::to_string(line_no));
      r.topic = j.at("topic").get<std::string>();
      for (const auto& v : j.at("variables"))
        r.variables.push_back(v.get<std::string>());
      r.stance = corpus::stance_from_name(j.at("stance").get<std::string>());
      if (j.contains("scheme"))
        r.scheme = corpus::scheme_from_name(j.at("scheme").get<std::string>());
      r.seed = j.value("seed", derive_seed(ctx.cfg.seed, "gen-" + r.id));
      if (j.contains("reference"))
        r.reference = j.at("reference").get<std::string>();
      requests.push_back(std::move(r));
    }
  } else {
    auto merged = corpus::read_corpus(merged_path.string());
    KnowledgeBase kb;
    const fs::path kb_path = ctx.dir / kKbExpandedFile;
    require_input(kb_path, "filter");
    kb = corpus::read_kb(kb_path.string());
    for (const auto& ex : merged) {
      if (static_cast<int>(requests.size()) >= count) break;
      if (ex.variables.empty() || ex.variables.size() > 4) continue;
      const auto scheme = gen::pick_control_scheme(ex);
      if (!scheme) continue;
      Request r;
      r.id = ex.id;
      r.topic = ex.topic;
      for (const auto& id : ex.variables) r.variables.push_back(kb.get(id).text);
      r.stance = ex.stance;
      r.scheme = scheme;
      r.seed = derive_seed(ctx.cfg.seed, "gen-" + ex.id);
      r.reference = ex.argument.raw;
      requests.push_back(std::move(r));
    }
    if (requests.empty())
      throw ValidationError("no corpus rows usable as generation requests");
  }

  std::ofstream out(ctx.dir / kGenerationsFile);
  if (!out) throw IoError("cannot write generations file");
  const bool needs_scheme =
      model->config().variant != gen::GeneratorVariant::kStanceOnly;
  long emitted = 0;
  for (const auto& r : requests) {
    if (needs_scheme && !r.scheme)
      throw ValidationError("request " + r.id + " lacks a scheme control code");
    gen::EncoderInput input =
        gen::build_encoder_input(r.topic, r.variables, r.seed);
    gen::GenerationRecord rec = model->generate(
        input, r.stance,
        needs_scheme ? r.scheme : std::optional<ArgumentScheme>{});
    rec.reference = r.reference;
    out << generation_record_to_json(rec, r.id).dump() << '\n';
    ++emitted;
  }
  out.close();

  ordered_json counts;
  counts["generations"] = emitted;
  finish_stage(ctx, "generate", inputs, counts, {ctx.dir / kGenerationsFile});
}

void run_evaluate(const StageContext& ctx) {
  const fs::path gen_path = ctx.dir / kGenerationsFile;
  require_input(gen_path, "generate");
  const std::vector<fs::path> inputs = {gen_path};
  if (stage_preflight(ctx, "evaluate", inputs)) return;

  std::vector<eval::EvalPair> pairs;
  {
    std::ifstream in(gen_path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const ordered_json j = ordered_json::parse(line);
      eval::EvalPair pair;
      pair.id = j.at("id").get<std::string>();
      for (const auto& v : j.at("variables"))
        pair.variables.push_back(v.at("text").get<std::string>());
      if (!j.contains("reference"))
        throw ValidationError("generation record " + pair.id +
                              " has no reference argument to evaluate against");
      pair.original = j.at("reference").get<std::string>();
      pair.generated = j.at("argument").get<std::string>();
      pairs.push_back(std::move(pair));
    }
  }

  normalize::HashedBowEmbedding embeddings(ctx.cfg.normalizer.embedding_width);
  eval::RuleBasedNli nli;
  eval::BleuConfig bleu_cfg;
  bleu_cfg.epsilon = ctx.cfg.eval.bleu_epsilon;
  const eval::EvalReport report = eval::evaluate_corpus(
      pairs, embeddings, nli, ctx.cfg.eval.nli_threshold, bleu_cfg);

  write_json_file(ctx.dir / kEvalReportFile, report.to_json());
  {
    std::ofstream out(ctx.dir / kEvalTableFile);
    out << report.to_table();
  }

  ordered_json counts;
  counts["pairs"] = pairs.size();
  counts["bleu"] = report.bleu;
  counts["rouge_l"] = report.rouge_l;
  finish_stage(ctx, "evaluate", inputs, counts,
               {ctx.dir / kEvalReportFile, ctx.dir / kEvalTableFile});
}

}  // namespace argpipe::pipeline
