#pragma once

#include <string>
#include <vector>

#include "argpipe/common/error.hpp"

namespace argpipe::normalize {

// Text -> unit-norm vector. Deterministic per text; implementations must
// produce an L2 norm of 1 (+-1e-6) for non-empty text.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<double> embed(const std::string& text) const = 0;
  virtual std::string name() const = 0;
  virtual int width() const = 0;
};

// Feature-hashed bag-of-words over reference tokens, signed and
// L2-normalized. Needs no model download and keeps nearest-neighbor
// decisions exactly reproducible, which the brute-force oracles rely on.
// Real sentence-embedding backends plug in behind the same interface.
class HashedBowEmbedding : public EmbeddingProvider {
 public:
  explicit HashedBowEmbedding(int width = 256);
  std::vector<double> embed(const std::string& text) const override;
  std::string name() const override { return "hashed-bow"; }
  int width() const override { return width_; }

 private:
  int width_;
};

double cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace argpipe::normalize
