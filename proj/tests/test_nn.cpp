#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "argpipe/nn/tape.hpp"
#include "argpipe/nn/trainer.hpp"
#include "argpipe/nn/transformer.hpp"
#include "support/gradcheck.hpp"

using namespace argpipe;
using namespace argpipe::nn;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double scale = 0.5) {
  Matrix m(r, c);
  std::uniform_real_distribution<double> d(-scale, scale);
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

}  // namespace

TEST_CASE("matmul against naive reference") {
  Rng rng(1);
  Matrix a = random_matrix(3, 4, rng), b = random_matrix(4, 5, rng);
  Matrix c = mm(a, b);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 5; ++j) {
      double acc = 0;
      for (int k = 0; k < 4; ++k) acc += a(i, k) * b(k, j);
      CHECK(c(i, j) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("elementwise and structural op gradients") {
  Rng rng(2);
  ParameterStore store;
  Parameter& w1 = store.create("w1", 4, 6, Init::kXavier, rng);
  Parameter& w2 = store.create("w2", 6, 3, Init::kXavier, rng);
  Parameter& gain = store.create("gain", 1, 6, Init::kZero, rng);
  gain.value.fill(1.0);
  Parameter& bias = store.create("bias", 1, 6, Init::kZero, rng);
  Matrix x = random_matrix(5, 4, rng);
  std::vector<int> targets = {0, 2, 1, -1, 0};

  auto loss_fn = [&](bool backward) {
    Tape t;
    Expr h = t.matmul(t.input(x), t.param(w1));
    h = t.layer_norm_rows(h, t.param(gain), t.param(bias));
    h = t.gelu(h);
    Expr pooled = t.mean_rows(h);                        // exercises mean_rows
    Expr cat = t.concat_rows({h, pooled});               // 6 x 6
    Expr sl = t.slice_rows(cat, 0, 5);
    Expr logits = t.matmul(sl, t.param(w2));
    Expr sm = t.softmax_rows(t.slice_cols(logits, 0, 3));  // identity slice
    Expr back_to_logits = t.reshape(sm, 5, 3);
    (void)back_to_logits;
    Expr loss = t.cross_entropy(logits, targets);
    double v = t.value(loss)(0, 0);
    if (backward) t.backward(loss);
    return v;
  };
  auto res = testsupport::check_gradients(store, loss_fn);
  INFO("worst: ", res.worst_param, " rel ", res.worst_rel);
  CHECK(res.ok);
  CHECK(res.checked > 0);
}

TEST_CASE("sigmoid / bce / broadcast gradients") {
  Rng rng(3);
  ParameterStore store;
  Parameter& w = store.create("w", 4, 4, Init::kXavier, rng);
  Parameter& col = store.create("col", 3, 1, Init::kXavier, rng);
  Parameter& row = store.create("row", 1, 4, Init::kXavier, rng);
  Parameter& sc = store.create("sc", 1, 1, Init::kXavier, rng);
  Matrix x = random_matrix(3, 4, rng);
  Matrix y(3, 4);
  for (size_t i = 0; i < y.size(); ++i) y.data()[i] = (i % 3 == 0) ? 1.0 : 0.0;

  auto loss_fn = [&](bool backward) {
    Tape t;
    Expr h = t.matmul(t.input(x), t.param(w));
    h = t.add_broadcast(h, t.param(col));
    h = t.add_broadcast(h, t.param(row));
    h = t.add_broadcast(h, t.param(sc));
    Expr s = t.sigmoid(h);
    Expr loss = t.bce_with_logits(t.add(h, t.scale(s, 0.25)), y);
    double v = t.value(loss)(0, 0);
    if (backward) t.backward(loss);
    return v;
  };
  auto res = testsupport::check_gradients(store, loss_fn);
  INFO("worst: ", res.worst_param, " rel ", res.worst_rel);
  CHECK(res.ok);
}

TEST_CASE("cross entropy of uniform logits is ln(num_classes)") {
  Tape t;
  Expr logits = t.input(Matrix::zeros(7, 3));
  Expr loss = t.cross_entropy(logits, {0, 1, 2, 0, 1, 2, 0});
  CHECK(t.value(loss)(0, 0) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("bce of zero logits is ln 2") {
  Tape t;
  Matrix y(1, 6);
  y(0, 2) = 1.0;
  Expr loss = t.bce_with_logits(t.input(Matrix::zeros(1, 6)), y);
  CHECK(t.value(loss)(0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("gather_rows accumulates duplicate indices") {
  Rng rng(4);
  ParameterStore store;
  Parameter& emb = store.create("emb", 5, 3, Init::kXavier, rng);
  auto loss_fn = [&](bool backward) {
    Tape t;
    Expr rows = t.gather_rows(t.param(emb), {1, 1, 4, 0});
    Expr loss = t.cross_entropy(rows, {0, 1, 2, 0});
    double v = t.value(loss)(0, 0);
    if (backward) t.backward(loss);
    return v;
  };
  auto res = testsupport::check_gradients(store, loss_fn);
  CHECK(res.ok);
}

TEST_CASE("masked self-attention stack gradients (width 8)") {
  Rng rng(5);
  ParameterStore store;
  SelfAttentionStack stack(store, "stack", 2, 8, 2, rng);
  Matrix x = random_matrix(6, 8, rng);
  auto loss_fn = [&](bool backward) {
    Tape t;
    Expr h = stack.apply(t, t.input(x));
    Expr loss = t.cross_entropy(h, {0, 1, 2, 3, 4, 5});
    double v = t.value(loss)(0, 0);
    if (backward) t.backward(loss);
    return v;
  };
  auto res = testsupport::check_gradients(store, loss_fn);
  INFO("worst: ", res.worst_param, " rel ", res.worst_rel);
  CHECK(res.ok);
}

TEST_CASE("full encoder/decoder loss gradients (width 8)") {
  Rng rng(6);
  ParameterStore store;
  TransformerDims dims;
  dims.layers = 2;
  dims.width = 8;
  dims.heads = 2;
  dims.max_len = 16;
  Parameter& embed = store.create("embed", 11, 8, Init::kXavier, rng);
  TransformerEncoder enc(store, "enc", dims, 11, rng, &embed);
  TransformerDecoder dec(store, "dec", dims, 11, rng, &embed);
  std::vector<int> src = {1, 4, 2, 9};
  std::vector<int> tgt = {0, 3, 5, 7, 2};
  std::vector<int> labels = {3, 5, 7, 2, 10};

  auto loss_fn = [&](bool backward) {
    Tape t;
    Expr h = enc.encode(t, src);
    Expr d = dec.decode(t, tgt, h);
    Expr logits = t.matmul(d, t.transpose(t.param(embed)));
    Expr loss = t.cross_entropy(logits, labels);
    double v = t.value(loss)(0, 0);
    if (backward) t.backward(loss);
    return v;
  };
  auto res = testsupport::check_gradients(store, loss_fn, 1e-5, 1e-4, 1e-8, 64);
  INFO("worst: ", res.worst_param, " rel ", res.worst_rel);
  CHECK(res.ok);
}

TEST_CASE("decoder causal mask blocks future tokens") {
  Rng rng(7);
  ParameterStore store;
  TransformerDims dims;
  dims.layers = 1;
  dims.width = 8;
  dims.heads = 2;
  dims.max_len = 16;
  TransformerEncoder enc(store, "enc", dims, 9, rng);
  TransformerDecoder dec(store, "dec", dims, 9, rng);
  std::vector<int> src = {1, 2};
  std::vector<int> a = {0, 3, 5, 7};
  std::vector<int> b = {0, 3, 5, 8};  // differs only at the last position
  Tape t1, t2;
  Matrix h1 = t1.value(dec.decode(t1, a, enc.encode(t1, src)));
  Matrix h2 = t2.value(dec.decode(t2, b, enc.encode(t2, src)));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 8; ++j)
      CHECK(h1(i, j) == doctest::Approx(h2(i, j)).epsilon(1e-14));
}

TEST_CASE("grad clipping caps the global norm exactly") {
  Rng rng(8);
  ParameterStore store;
  Parameter& w = store.create("w", 4, 4, Init::kXavier, rng);
  for (size_t i = 0; i < w.grad.size(); ++i) w.grad.data()[i] = 10.0;
  const double pre = store.grad_global_norm();
  CHECK(pre > 1.0);
  store.clip_grad_norm(1.0);
  CHECK(store.grad_global_norm() == doctest::Approx(1.0).epsilon(1e-12));
  // below the cap nothing changes
  store.clip_grad_norm(5.0);
  CHECK(store.grad_global_norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("training loop early-stops on plateaued eval loss") {
  Rng rng(9);
  ParameterStore store;
  store.create("w", 2, 2, Init::kXavier, rng);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 2;
  cfg.eval_every = 1;
  cfg.early_stop_patience = 5;
  cfg.max_steps = 100;
  int evals = 0;
  auto log = train_loop(
      store, cfg, 4, [&](int, double) { return 1.0; },
      [&]() {
        ++evals;
        return 1.0;  // never improves after the first eval
      });
  CHECK(log.stop_reason == "early_stop");
  CHECK(log.stopped_at_step == 6);  // first eval sets best, then 5 bad evals
}

TEST_CASE("seeded construction is bitwise reproducible") {
  auto build = [] {
    Rng rng(42);
    ParameterStore store;
    TransformerDims dims;
    dims.layers = 1;
    dims.width = 8;
    dims.heads = 2;
    TransformerEncoder enc(store, "enc", dims, 7, rng);
    Tape t;
    return t.value(enc.encode(t, {1, 2, 3}));
  };
  CHECK(build() == build());
}
