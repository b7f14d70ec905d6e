#include "argpipe/nn/tape.hpp"

#include <cmath>

namespace argpipe::nn {

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

void softmax_row(const double* x, double* y, int n) {
  double mx = x[0];
  for (int j = 1; j < n; ++j) mx = std::max(mx, x[j]);
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    y[j] = std::exp(x[j] - mx);
    sum += y[j];
  }
  for (int j = 0; j < n; ++j) y[j] /= sum;
}

}  // namespace

Expr Tape::emit(Matrix value, std::function<void(Tape&)> back) {
  Node n;
  n.value = std::move(value);
  n.grad.resize_zero(n.value.rows(), n.value.cols());
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Expr{static_cast<int>(nodes_.size()) - 1};
}

Expr Tape::input(Matrix value) { return emit(std::move(value), nullptr); }

Expr Tape::param(Parameter& p) {
  Node n;
  n.param = &p;
  n.grad.resize_zero(p.value.rows(), p.value.cols());
  nodes_.push_back(std::move(n));
  int idx = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.push_back(idx);
  return Expr{idx};
}

// Each op emits its node first, then assigns the backward closure so the
// closure can capture its own node index.
Expr Tape::add(Expr a, Expr b) {
  const Matrix& av = val(a.idx);
  const Matrix& bv = val(b.idx);
  if (av.rows() != bv.rows() || av.cols() != bv.cols())
    throw ShapeError("add: shape mismatch");
  Matrix out = av;
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] += bv.data()[i];
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx, ai = a.idx, bi = b.idx;
  nodes_[static_cast<size_t>(self)].back = [self, ai, bi](Tape& t) {
    const Matrix& g = t.grad_ref(self);
    Matrix& ga = t.grad_ref(ai);
    Matrix& gb = t.grad_ref(bi);
    for (size_t i = 0; i < g.size(); ++i) {
      ga.data()[i] += g.data()[i];
      gb.data()[i] += g.data()[i];
    }
  };
  return e;
}

Expr Tape::scale(Expr a, double c) {
  Matrix out = val(a.idx);
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] *= c;
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx, ai = a.idx;
  nodes_[static_cast<size_t>(self)].back = [self, ai, c](Tape& t) {
    const Matrix& g = t.grad_ref(self);
    Matrix& ga = t.grad_ref(ai);
    for (size_t i = 0; i < g.size(); ++i) ga.data()[i] += c * g.data()[i];
  };
  return e;
}

Expr Tape::matmul(Expr a, Expr b) {
  const Matrix& av = val(a.idx);
  const Matrix& bv = val(b.idx);
  Matrix out(av.rows(), bv.cols());
  add_mm_nn(out, av, bv);
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx, ai = a.idx, bi = b.idx;
  nodes_[static_cast<size_t>(self)].back = [self, ai, bi](Tape& t) {
    const Matrix& g = t.grad_ref(self);
    add_mm_nt(t.grad_ref(ai), g, t.val(bi));  // dA += g * B^T
    add_mm_tn(t.grad_ref(bi), t.val(ai), g);  // dB += A^T * g
  };
  return e;
}

Expr Tape::transpose(Expr a) {
  Expr e = emit(transposed(val(a.idx)), nullptr);
  int self = e.idx, ai = a.idx;
  nodes_[static_cast<size_t>(self)].back = [self, ai](Tape& t) {
    const Matrix& g = t.grad_ref(self);
    Matrix& ga = t.grad_ref(ai);
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
  };
  return e;
}

Expr Tape::add_broadcast(Expr a, Expr b) {
  const Matrix& av = val(a.idx);
  const Matrix& bv = val(b.idx);
  const bool scalar = bv.rows() == 1 && bv.cols() == 1;
  const bool row = bv.rows() == 1 && bv.cols() == av.cols();
  const bool col = bv.cols() == 1 && bv.rows() == av.rows();
  if (!scalar && !row && !col)
    throw ShapeError("add_broadcast: b must be 1x1, 1xC or Rx1");
  Matrix out = av;
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j)
      out(i, j) += scalar ? bv(0, 0) : (row ? bv(0, j) : bv(i, 0));
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx, ai = a.idx, bi = b.idx;
  nodes_[static_cast<size_t>(self)].back = [self, ai, bi, scalar,
                                            row](Tape& t) {
    const Matrix& g = t.grad_ref(self);
    Matrix& ga = t.grad_ref(ai);
    Matrix& gb = t.grad_ref(bi);
    for (size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i];
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) {
        if (scalar)
          gb(0, 0) += g(i, j);
        else if (row)
          gb(0, j) += g(i, j);
        else
          gb(i, 0) += g(i, j);
      }
  };
  return e;
}

Expr Tape::slice_rows(Expr a, int row_begin, int row_end) {
  const Matrix& av = val(a.idx);
  if (row_begin < 0 || row_begin >= row_end || row_end > av.rows())
    throw RangeError("slice_rows out of range");
  Matrix out(row_end - row_begin, av.cols());
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) = av(row_begin + i, j);
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx, ai = a.idx;
  nodes_[static_cast<size_t>(self)].back = [self, ai, row_begin](Tape& t) {
    const Matrix& g = t.grad_ref(self);
    Matrix& ga = t.grad_ref(ai);
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) ga(row_begin + i, j) += g(i, j);
  };
  return e;
}

Expr Tape::slice_cols(Expr a, int col_begin, int col_end) {
  const Matrix& av = val(a.idx);
  if (col_begin < 0 || col_begin >= col_end || col_end > av.cols())
    throw RangeError("slice_cols out of range");
  Matrix out(av.rows(), col_end - col_begin);
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) = av(i, col_begin + j);
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx, ai = a.idx;
  nodes_[static_cast<size_t>(self)].back = [self, ai, col_begin](Tape& t) {
    const Matrix& g = t.grad_ref(self);
    Matrix& ga = t.grad_ref(ai);
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) ga(i, col_begin + j) += g(i, j);
  };
  return e;
}

Expr Tape::concat_cols(const std::vector<Expr>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  int rows = val(parts[0].idx).rows();
  int cols = 0;
  for (Expr p : parts) {
    if (val(p.idx).rows() != rows)
      throw ShapeError("concat_cols: row count mismatch");
    cols += val(p.idx).cols();
  }
  Matrix out(rows, cols);
  int off = 0;
  for (Expr p : parts) {
    const Matrix& pv = val(p.idx);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < pv.cols(); ++j) out(i, off + j) = pv(i, j);
    off += pv.cols();
  }
  std::vector<int> idxs;
  for (Expr p : parts) idxs.push_back(p.idx);
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx;
  nodes_[static_cast<size_t>(self)].back = [self, idxs](Tape& t) {
    const Matrix& g = t.grad_ref(self);
    int off = 0;
    for (int pi : idxs) {
      Matrix& gp = t.grad_ref(pi);
      for (int i = 0; i < gp.rows(); ++i)
        for (int j = 0; j < gp.cols(); ++j) gp(i, j) += g(i, off + j);
      off += gp.cols();
    }
  };
  return e;
}

Expr Tape::concat_rows(const std::vector<Expr>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no parts");
  int cols = val(parts[0].idx).cols();
  int rows = 0;
  for (Expr p : parts) {
    if (val(p.idx).cols() != cols)
      throw ShapeError("concat_rows: column count mismatch");
    rows += val(p.idx).rows();
  }
  Matrix out(rows, cols);
  int off = 0;
  for (Expr p : parts) {
    const Matrix& pv = val(p.idx);
    for (int i = 0; i < pv.rows(); ++i)
      for (int j = 0; j < cols; ++j) out(off + i, j) = pv(i, j);
    off += pv.rows();
  }
  std::vector<int> idxs;
  for (Expr p : parts) idxs.push_back(p.idx);
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx;
  nodes_[static_cast<size_t>(self)].back = [self, idxs](Tape& t) {
    const Matrix& g = t.grad_ref(self);
    int off = 0;
    for (int pi : idxs) {
      Matrix& gp = t.grad_ref(pi);
      for (int i = 0; i < gp.rows(); ++i)
        for (int j = 0; j < gp.cols(); ++j) gp(i, j) += g(off + i, j);
      off += gp.rows();
    }
  };
  return e;
}

Expr Tape::gather_rows(Expr a, std::vector<int> rows) {
  const Matrix& av = val(a.idx);
  Matrix out(static_cast<int>(rows.size()), av.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= av.rows())
      throw RangeError("gather_rows index out of range");
    for (int j = 0; j < av.cols(); ++j)
      out(static_cast<int>(i), j) = av(rows[i], j);
  }
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx, ai = a.idx;
  nodes_[static_cast<size_t>(self)].back = [self, ai,
                                            rows = std::move(rows)](Tape& t) {
    const Matrix& g = t.grad_ref(self);
    Matrix& ga = t.grad_ref(ai);
    for (size_t i = 0; i < rows.size(); ++i)
      for (int j = 0; j < g.cols(); ++j)
        ga(rows[i], j) += g(static_cast<int>(i), j);
  };
  return e;
}

Expr Tape::reshape(Expr a, int rows, int cols) {
  const Matrix& av = val(a.idx);
  if (static_cast<size_t>(rows) * cols != av.size())
    throw ShapeError("reshape: element count mismatch");
  Matrix out(rows, cols);
  for (size_t i = 0; i < av.size(); ++i) out.data()[i] = av.data()[i];
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx, ai = a.idx;
  nodes_[static_cast<size_t>(self)].back = [self, ai](Tape& t) {
    const Matrix& g = t.grad_ref(self);
    Matrix& ga = t.grad_ref(ai);
    for (size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i];
  };
  return e;
}

Expr Tape::softmax_rows(Expr a) {
  const Matrix& av = val(a.idx);
  Matrix out(av.rows(), av.cols());
  for (int i = 0; i < av.rows(); ++i)
    softmax_row(av.row(i), out.row(i), av.cols());
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx, ai = a.idx;
  nodes_[static_cast<size_t>(self)].back = [self, ai](Tape& t) {
    const Matrix& g = t.grad_ref(self);
    const Matrix& y = t.val(self);
    Matrix& ga = t.grad_ref(ai);
    for (int i = 0; i < y.rows(); ++i) {
      double dot = 0.0;
      for (int j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
      for (int j = 0; j < y.cols(); ++j)
        ga(i, j) += y(i, j) * (g(i, j) - dot);
    }
  };
  return e;
}

Expr Tape::gelu(Expr a) {
  const Matrix& av = val(a.idx);
  Matrix out(av.rows(), av.cols());
  for (size_t i = 0; i < av.size(); ++i) {
    const double x = av.data()[i];
    const double u = kGeluC * (x + kGeluA * x * x * x);
    out.data()[i] = 0.5 * x * (1.0 + std::tanh(u));
  }
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx, ai = a.idx;
  nodes_[static_cast<size_t>(self)].back = [self, ai](Tape& t) {
    const Matrix& g = t.grad_ref(self);
    const Matrix& x = t.val(ai);
    Matrix& ga = t.grad_ref(ai);
    for (size_t i = 0; i < x.size(); ++i) {
      const double xi = x.data()[i];
      const double u = kGeluC * (xi + kGeluA * xi * xi * xi);
      const double th = std::tanh(u);
      const double du = kGeluC * (1.0 + 3.0 * kGeluA * xi * xi);
      const double dydx = 0.5 * (1.0 + th) + 0.5 * xi * (1.0 - th * th) * du;
      ga.data()[i] += g.data()[i] * dydx;
    }
  };
  return e;
}

Expr Tape::sigmoid(Expr a) {
  const Matrix& av = val(a.idx);
  Matrix out(av.rows(), av.cols());
  for (size_t i = 0; i < av.size(); ++i)
    out.data()[i] = 1.0 / (1.0 + std::exp(-av.data()[i]));
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx, ai = a.idx;
  nodes_[static_cast<size_t>(self)].back = [self, ai](Tape& t) {
    const Matrix& g = t.grad_ref(self);
    const Matrix& y = t.val(self);
    Matrix& ga = t.grad_ref(ai);
    for (size_t i = 0; i < y.size(); ++i) {
      const double yi = y.data()[i];
      ga.data()[i] += g.data()[i] * yi * (1.0 - yi);
    }
  };
  return e;
}

Expr Tape::layer_norm_rows(Expr x, Expr gain, Expr bias, double eps) {
  const Matrix& xv = val(x.idx);
  const Matrix& gv = val(gain.idx);
  const Matrix& bv = val(bias.idx);
  if (gv.rows() != 1 || bv.rows() != 1 || gv.cols() != xv.cols() ||
      bv.cols() != xv.cols())
    throw ShapeError("layer_norm: gain/bias must be 1 x cols");
  const int R = xv.rows(), C = xv.cols();
  Matrix out(R, C);
  Matrix xhat(R, C);
  std::vector<double> inv_sigma(static_cast<size_t>(R));
  for (int i = 0; i < R; ++i) {
    double mu = 0.0;
    for (int j = 0; j < C; ++j) mu += xv(i, j);
    mu /= C;
    double var = 0.0;
    for (int j = 0; j < C; ++j) {
      const double d = xv(i, j) - mu;
      var += d * d;
    }
    var /= C;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[static_cast<size_t>(i)] = is;
    for (int j = 0; j < C; ++j) {
      xhat(i, j) = (xv(i, j) - mu) * is;
      out(i, j) = gv(0, j) * xhat(i, j) + bv(0, j);
    }
  }
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx, xi = x.idx, gi = gain.idx, bi = bias.idx;
  nodes_[static_cast<size_t>(self)].back =
      [self, xi, gi, bi, xhat = std::move(xhat),
       inv_sigma = std::move(inv_sigma)](Tape& t) {
        const Matrix& g = t.grad_ref(self);
        const Matrix& gainv = t.val(gi);
        Matrix& gx = t.grad_ref(xi);
        Matrix& gg = t.grad_ref(gi);
        Matrix& gb = t.grad_ref(bi);
        const int R = g.rows(), C = g.cols();
        for (int i = 0; i < R; ++i) {
          double mean_h = 0.0, mean_hx = 0.0;
          for (int j = 0; j < C; ++j) {
            const double h = g(i, j) * gainv(0, j);
            mean_h += h;
            mean_hx += h * xhat(i, j);
            gg(0, j) += g(i, j) * xhat(i, j);
            gb(0, j) += g(i, j);
          }
          mean_h /= C;
          mean_hx /= C;
          const double is = inv_sigma[static_cast<size_t>(i)];
          for (int j = 0; j < C; ++j) {
            const double h = g(i, j) * gainv(0, j);
            gx(i, j) += (h - mean_h - xhat(i, j) * mean_hx) * is;
          }
        }
      };
  return e;
}

Expr Tape::mean_rows(Expr a) {
  const Matrix& av = val(a.idx);
  if (av.rows() < 1) throw ShapeError("mean_rows: empty input");
  Matrix out(1, av.cols());
  for (int i = 0; i < av.rows(); ++i)
    for (int j = 0; j < av.cols(); ++j) out(0, j) += av(i, j);
  for (int j = 0; j < av.cols(); ++j) out(0, j) /= av.rows();
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx, ai = a.idx;
  const int R = av.rows();
  nodes_[static_cast<size_t>(self)].back = [self, ai, R](Tape& t) {
    const Matrix& g = t.grad_ref(self);
    Matrix& ga = t.grad_ref(ai);
    for (int i = 0; i < ga.rows(); ++i)
      for (int j = 0; j < ga.cols(); ++j) ga(i, j) += g(0, j) / R;
  };
  return e;
}

Expr Tape::cross_entropy(Expr logits, std::vector<int> targets) {
  const Matrix& lv = val(logits.idx);
  if (static_cast<int>(targets.size()) != lv.rows())
    throw ShapeError("cross_entropy: one target per row required");
  Matrix probs(lv.rows(), lv.cols());
  int active = 0;
  double loss = 0.0;
  for (int i = 0; i < lv.rows(); ++i) {
    softmax_row(lv.row(i), probs.row(i), lv.cols());
    const int tgt = targets[static_cast<size_t>(i)];
    if (tgt < 0) continue;
    if (tgt >= lv.cols()) throw RangeError("cross_entropy: target out of range");
    loss -= std::log(std::max(probs(i, tgt), 1e-300));
    ++active;
  }
  if (active == 0) throw ValidationError("cross_entropy: no active targets");
  Matrix out(1, 1);
  out(0, 0) = loss / active;
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx, li = logits.idx;
  nodes_[static_cast<size_t>(self)].back =
      [self, li, probs = std::move(probs), targets = std::move(targets),
       active](Tape& t) {
        const double gscale = t.grad_ref(self)(0, 0) / active;
        Matrix& gl = t.grad_ref(li);
        for (int i = 0; i < gl.rows(); ++i) {
          const int tgt = targets[static_cast<size_t>(i)];
          if (tgt < 0) continue;
          for (int j = 0; j < gl.cols(); ++j) {
            const double delta = (j == tgt) ? 1.0 : 0.0;
            gl(i, j) += gscale * (probs(i, j) - delta);
          }
        }
      };
  return e;
}

Expr Tape::bce_with_logits(Expr logits, Matrix targets) {
  const Matrix& lv = val(logits.idx);
  if (lv.rows() != targets.rows() || lv.cols() != targets.cols())
    throw ShapeError("bce_with_logits: shape mismatch");
  const int K = static_cast<int>(lv.size());
  if (K == 0) throw ShapeError("bce_with_logits: empty input");
  double loss = 0.0;
  for (size_t i = 0; i < lv.size(); ++i) {
    const double z = lv.data()[i];
    const double y = targets.data()[i];
    loss += softplus(z) - y * z;
  }
  Matrix out(1, 1);
  out(0, 0) = loss / K;
  Expr e = emit(std::move(out), nullptr);
  int self = e.idx, li = logits.idx;
  nodes_[static_cast<size_t>(self)].back =
      [self, li, targets = std::move(targets), K](Tape& t) {
        const double gscale = t.grad_ref(self)(0, 0) / K;
        const Matrix& z = t.val(li);
        Matrix& gl = t.grad_ref(li);
        for (size_t i = 0; i < z.size(); ++i) {
          const double s = 1.0 / (1.0 + std::exp(-z.data()[i]));
          gl.data()[i] += gscale * (s - targets.data()[i]);
        }
      };
  return e;
}

Expr Tape::linear(Expr x, Parameter& w, Parameter& b) {
  return add_broadcast(matmul(x, param(w)), param(b));
}

void Tape::backward(Expr loss) {
  const Matrix& lv = val(loss.idx);
  if (lv.rows() != 1 || lv.cols() != 1)
    throw ShapeError("backward: loss must be 1x1");
  grad_ref(loss.idx)(0, 0) = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    if (nodes_[static_cast<size_t>(i)].back)
      nodes_[static_cast<size_t>(i)].back(*this);
  }
  for (int pi : param_nodes_) {
    Node& n = nodes_[static_cast<size_t>(pi)];
    for (size_t i = 0; i < n.grad.size(); ++i)
      n.param->grad.data()[i] += n.grad.data()[i];
  }
}

}  // namespace argpipe::nn
