#pragma once

#include <memory>
#include <string>
#include <vector>

#include "argpipe/nn/matrix.hpp"

namespace argpipe::nn {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  // AdamW state
  Matrix adam_m;
  Matrix adam_v;
};

enum class Init { kZero, kXavier };

// Owns named parameters in creation order; creation order doubles as the
// deterministic update and serialization order.
class ParameterStore {
 public:
  Parameter& create(const std::string& name, int rows, int cols, Init init,
                    Rng& rng);
  Parameter& get(const std::string& name);
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }

  void zero_grads();
  double grad_global_norm() const;
  // Scales all grads so the global L2 norm is at most max_norm; returns the
  // pre-clip norm.
  double clip_grad_norm(double max_norm);

  size_t parameter_count() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

struct AdamWConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}
  void step(ParameterStore& store);
  long steps_taken() const { return t_; }

 private:
  AdamWConfig cfg_;
  long t_ = 0;
};

}  // namespace argpipe::nn
