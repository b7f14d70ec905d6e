#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "argpipe/nn/param.hpp"

namespace testsupport {

struct GradCheckResult {
  bool ok = true;
  std::string worst_param;
  double worst_rel = 0.0;
  int checked = 0;
};

// Compares analytic gradients against central finite differences.
// loss_fn(true) must run forward + backward (gradients accumulate into the
// store); loss_fn(false) must run forward only and return the loss.
inline GradCheckResult check_gradients(
    argpipe::nn::ParameterStore& store,
    const std::function<double(bool)>& loss_fn, double step = 1e-5,
    double rel_tol = 1e-4, double abs_tol = 1e-8, int max_per_param = 256) {
  store.zero_grads();
  loss_fn(true);

  GradCheckResult res;
  for (auto& p : store.all()) {
    const size_t n = p->value.size();
    const size_t stride = n > static_cast<size_t>(max_per_param)
                              ? n / static_cast<size_t>(max_per_param)
                              : 1;
    for (size_t i = 0; i < n; i += stride) {
      const double orig = p->value.data()[i];
      p->value.data()[i] = orig + step;
      const double lp = loss_fn(false);
      p->value.data()[i] = orig - step;
      const double lm = loss_fn(false);
      p->value.data()[i] = orig;
      const double numeric = (lp - lm) / (2.0 * step);
      const double analytic = p->grad.data()[i];
      const double diff = std::abs(numeric - analytic);
      const double denom = std::max(std::abs(numeric), std::abs(analytic));
      const double rel = denom > 0.0 ? diff / denom : 0.0;
      ++res.checked;
      if (diff > abs_tol && rel > rel_tol) {
        res.ok = false;
        if (rel > res.worst_rel) {
          res.worst_rel = rel;
          res.worst_param = p->name + "[" + std::to_string(i) + "]";
        }
      }
    }
  }
  return res;
}

}  // namespace testsupport
