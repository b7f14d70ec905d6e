#pragma once

#include <functional>
#include <vector>

#include "argpipe/common/rng.hpp"
#include "argpipe/nn/param.hpp"

namespace argpipe::nn {

struct TrainConfig {
  double learning_rate = 1e-5;
  int batch_size = 32;
  int early_stop_patience = 5;
  double grad_clip_norm = 1.0;
  int max_steps = 2000;
  int eval_every = 50;
  // When > 0, training also stops once the evaluated loss drops below this.
  double target_loss = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainStepRecord {
  int step;
  double batch_loss;
  double grad_norm_preclip;
  double grad_norm_postclip;
};

struct TrainLog {
  std::vector<TrainStepRecord> steps;
  std::vector<std::pair<int, double>> eval_losses;  // (step, loss)
  int stopped_at_step = 0;
  std::string stop_reason;
};

// Minibatch loop shared by all models. example_loss runs forward+backward
// for one example (gradients accumulate in the store) and returns the
// example's loss; eval_loss evaluates without touching gradients. Batches
// are drawn as seeded shuffled epochs over [0, n). Early stopping: halt
// when eval_loss has failed to improve early_stop_patience times in a row.
TrainLog train_loop(
    ParameterStore& store, const TrainConfig& cfg, int num_examples,
    const std::function<double(int example_index, double loss_scale)>&
        example_loss_backward,
    const std::function<double()>& eval_loss);

}  // namespace argpipe::nn
