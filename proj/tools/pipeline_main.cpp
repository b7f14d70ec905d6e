#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "argpipe/pipeline/config.hpp"
#include "argpipe/pipeline/stages.hpp"

namespace {

using argpipe::pipeline::PipelineConfig;
using argpipe::pipeline::StageContext;

struct CommonArgs {
  std::string config_path;
  std::string in_dir;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "pipeline config file");
  cmd->add_option("--in", args.in_dir, "working directory with input records");
  cmd->add_option("--out", args.out_dir, "working directory for outputs");
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_flag("--force", args.force,
                "re-run the stage even if its manifest conflicts");
}

StageContext make_context(const CommonArgs& args) {
  StageContext ctx;
  ctx.cfg = args.config_path.empty()
                ? PipelineConfig{}
                : argpipe::pipeline::load_config(args.config_path);
  if (args.seed) ctx.cfg.seed = *args.seed;
  std::string dir = args.out_dir.empty() ? args.in_dir : args.out_dir;
  if (!args.in_dir.empty() && !args.out_dir.empty() &&
      args.in_dir != args.out_dir)
    throw argpipe::ConfigError(
        "stages share one working directory; pass matching --in/--out");
  if (dir.empty()) dir = ".";
  ctx.dir = dir;
  ctx.force = args.force;
  return ctx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"controllable factual-argument pipeline"};
  app.require_subcommand(1);

  CommonArgs fixture_args, annotate_args, normalize_args, filter_args,
      train_args, generate_args, evaluate_args, print_args;
  std::string annotate_model;
  std::string train_variant;
  std::string generate_model, generate_requests;
  int generate_count = 16;

  add_common(app.add_subcommand("fixture", "write a synthetic corpus + KB"),
             fixture_args);
  auto* annotate =
      app.add_subcommand("annotate", "tag the expansion corpus for spans and "
                                     "schemes (trains a tagger on the labeled "
                                     "corpus unless --model is given)");
  add_common(annotate, annotate_args);
  annotate->add_option("--model", annotate_model, "tagger checkpoint to use");

  add_common(app.add_subcommand("normalize",
                                "scheme-probability filter + KB grounding of "
                                "tagged spans"),
             normalize_args);
  add_common(app.add_subcommand("filter", "quality filters, KB expansion and "
                                          "merge with the labeled corpus"),
             filter_args);

  auto* train = app.add_subcommand("train", "train a model variant");
  add_common(train, train_args);
  std::string train_split_ratio;
  int train_split_id = 1;
  train
      ->add_option("--variant", train_variant,
                   "argspan | argspanscheme-parallel | argspanscheme-pipelined "
                   "| argu-mono | argu-dual | argu-stance | argu-scheme")
      ->required();
  train->add_option("--split-ratio", train_split_ratio,
                    "tagger-only topic split: cv | 5:1 | 4:2 | 2:4");
  train->add_option("--split-id", train_split_id,
                    "split id (1-5) seeding the topic assignment");

  auto* generate = app.add_subcommand("generate", "decode arguments");
  add_common(generate, generate_args);
  generate->add_option("--model", generate_model, "generator checkpoint");
  generate->add_option("--requests", generate_requests,
                       "JSONL generation requests (default: derive requests "
                       "from the merged corpus)");
  generate->add_option("--count", generate_count,
                       "number of corpus rows to decode when no requests "
                       "file is given");

  add_common(app.add_subcommand("evaluate",
                                "score generations against their references"),
             evaluate_args);

  auto* print_cfg = app.add_subcommand(
      "print-config", "print the effective config (defaults when no file)");
  print_cfg->add_option("--config", print_args.config_path,
                        "pipeline config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("fixture")) {
      run_fixture(make_context(fixture_args));
    } else if (app.got_subcommand("annotate")) {
      run_annotate(make_context(annotate_args),
                   annotate_model.empty()
                       ? std::nullopt
                       : std::optional<std::string>(annotate_model));
    } else if (app.got_subcommand("normalize")) {
      run_normalize(make_context(normalize_args));
    } else if (app.got_subcommand("filter")) {
      run_filter(make_context(filter_args));
    } else if (app.got_subcommand("train")) {
      run_train(make_context(train_args), train_variant,
                train_split_ratio.empty()
                    ? std::nullopt
                    : std::optional<std::string>(train_split_ratio),
                train_split_id);
    } else if (app.got_subcommand("generate")) {
      run_generate(make_context(generate_args),
                   generate_model.empty()
                       ? std::nullopt
                       : std::optional<std::string>(generate_model),
                   generate_requests.empty()
                       ? std::nullopt
                       : std::optional<std::string>(generate_requests),
                   generate_count);
    } else if (app.got_subcommand("evaluate")) {
      run_evaluate(make_context(evaluate_args));
    } else if (app.got_subcommand("print-config")) {
      PipelineConfig cfg = print_args.config_path.empty()
                               ? PipelineConfig{}
                               : argpipe::pipeline::load_config(
                                     print_args.config_path);
      std::cout << argpipe::pipeline::render_config(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
