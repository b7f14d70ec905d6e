#include "argpipe/nn/param.hpp"

#include <cmath>

namespace argpipe::nn {

Parameter& ParameterStore::create(const std::string& name, int rows, int cols,
                                  Init init, Rng& rng) {
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value.resize_zero(rows, cols);
  if (init == Init::kXavier) xavier_init(p->value, rng);
  p->grad.resize_zero(rows, cols);
  p->adam_m.resize_zero(rows, cols);
  p->adam_v.resize_zero(rows, cols);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterStore::get(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw Error("unknown parameter: " + name);
}

void ParameterStore::zero_grads() {
  for (auto& p : params_) p->grad.fill(0.0);
}

double ParameterStore::grad_global_norm() const {
  double s = 0.0;
  for (const auto& p : params_) s += frobenius_norm_sq(p->grad);
  return std::sqrt(s);
}

double ParameterStore::clip_grad_norm(double max_norm) {
  double norm = grad_global_norm();
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& p : params_)
      for (size_t i = 0; i < p->grad.size(); ++i) p->grad.data()[i] *= scale;
  }
  return norm;
}

size_t ParameterStore::parameter_count() const {
  size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void AdamW::step(ParameterStore& store) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& p : store.all()) {
    double* w = p->value.data();
    const double* g = p->grad.data();
    double* m = p->adam_m.data();
    double* v = p->adam_v.data();
    for (size_t i = 0; i < p->value.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                         cfg_.weight_decay * w[i]);
    }
  }
}

}  // namespace argpipe::nn
