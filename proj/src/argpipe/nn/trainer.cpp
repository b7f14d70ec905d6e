#include "argpipe/nn/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "argpipe/common/error.hpp"

namespace argpipe::nn {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (early_stop_patience < 1) throw ConfigError("patience must be >= 1");
  if (grad_clip_norm <= 0.0) throw ConfigError("grad_clip_norm must be > 0");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
}

TrainLog train_loop(
    ParameterStore& store, const TrainConfig& cfg, int num_examples,
    const std::function<double(int, double)>& example_loss_backward,
    const std::function<double()>& eval_loss) {
  cfg.validate();
  if (num_examples < 1) throw ValidationError("training corpus is empty");

  TrainLog log;
  AdamW opt(AdamWConfig{.lr = cfg.learning_rate});
  Rng rng(cfg.seed);

  std::vector<int> order(static_cast<size_t>(num_examples));
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();  // forces a shuffle on first use

  double best_eval = 0.0;
  bool have_best = false;
  int bad_evals = 0;

  for (int step = 1; step <= cfg.max_steps; ++step) {
    const int batch = std::min(cfg.batch_size, num_examples);
    const double scale = 1.0 / batch;
    store.zero_grads();
    double batch_loss = 0.0;
    for (int b = 0; b < batch; ++b) {
      if (cursor >= order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch_loss += example_loss_backward(order[cursor++], scale) * scale;
    }
    const double preclip = store.clip_grad_norm(cfg.grad_clip_norm);
    const double postclip = store.grad_global_norm();
    opt.step(store);
    log.steps.push_back({step, batch_loss, preclip, postclip});

    if (step % cfg.eval_every == 0 || step == cfg.max_steps) {
      const double ev = eval_loss();
      log.eval_losses.emplace_back(step, ev);
      if (!have_best || ev < best_eval) {
        best_eval = ev;
        have_best = true;
        bad_evals = 0;
      } else {
        ++bad_evals;
      }
      if (cfg.target_loss > 0.0 && ev <= cfg.target_loss) {
        log.stopped_at_step = step;
        log.stop_reason = "target_loss";
        return log;
      }
      if (bad_evals >= cfg.early_stop_patience) {
        log.stopped_at_step = step;
        log.stop_reason = "early_stop";
        return log;
      }
    }
  }
  log.stopped_at_step = cfg.max_steps;
  log.stop_reason = "max_steps";
  return log;
}

}  // namespace argpipe::nn
