#pragma once

#include <functional>
#include <vector>

#include "argpipe/nn/matrix.hpp"
#include "argpipe/nn/param.hpp"

namespace argpipe::nn {

struct Expr {
  int idx = -1;
};

// Dynamic reverse-mode tape over Matrix values. One tape is built per
// forward pass; backward() runs the recorded ops in reverse and flushes
// accumulated parameter gradients into their Parameter::grad.
class Tape {
 public:
  Expr input(Matrix value);
  Expr param(Parameter& p);

  Expr add(Expr a, Expr b);
  Expr scale(Expr a, double c);
  Expr matmul(Expr a, Expr b);
  Expr transpose(Expr a);
  // b broadcast-added to a; b may be 1x1, 1xC (row) or Rx1 (column).
  Expr add_broadcast(Expr a, Expr b);
  Expr slice_rows(Expr a, int row_begin, int row_end);
  Expr slice_cols(Expr a, int col_begin, int col_end);
  Expr concat_cols(const std::vector<Expr>& parts);
  Expr concat_rows(const std::vector<Expr>& parts);
  // rows may repeat; backward scatter-adds.
  Expr gather_rows(Expr a, std::vector<int> rows);
  Expr reshape(Expr a, int rows, int cols);

  Expr softmax_rows(Expr a);
  Expr gelu(Expr a);
  Expr sigmoid(Expr a);
  Expr layer_norm_rows(Expr x, Expr gain, Expr bias, double eps = 1e-5);
  Expr mean_rows(Expr a);

  // Mean negative log-likelihood over rows whose target is >= 0.
  Expr cross_entropy(Expr logits, std::vector<int> targets);
  // Mean binary cross entropy with logits over all entries.
  Expr bce_with_logits(Expr logits, Matrix targets);

  // linear layer convenience: x * w + bias_row
  Expr linear(Expr x, Parameter& w, Parameter& b);

  const Matrix& value(Expr e) const { return val(e.idx); }
  const Matrix& grad(Expr e) const { return nodes_[static_cast<size_t>(e.idx)].grad; }

  // loss must be 1x1. Flushes parameter grads (+=) into their stores.
  void backward(Expr loss);

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;               // unused when param != nullptr
    Matrix grad;
    Parameter* param = nullptr;
    std::function<void(Tape&)> back;
  };

  const Matrix& val(int i) const {
    const Node& n = nodes_[static_cast<size_t>(i)];
    return n.param ? n.param->value : n.value;
  }
  Matrix& grad_ref(int i) { return nodes_[static_cast<size_t>(i)].grad; }

  Expr emit(Matrix value, std::function<void(Tape&)> back);

  std::vector<Node> nodes_;
  std::vector<int> param_nodes_;
};

}  // namespace argpipe::nn
