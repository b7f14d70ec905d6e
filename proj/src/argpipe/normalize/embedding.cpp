#include "argpipe/normalize/embedding.hpp"

#include <cctype>
#include <cmath>

#include "argpipe/common/hash.hpp"
#include "argpipe/corpus/tokenize.hpp"

namespace argpipe::normalize {

HashedBowEmbedding::HashedBowEmbedding(int width) : width_(width) {
  if (width < 1) throw ConfigError("embedding width must be positive");
}

std::vector<double> HashedBowEmbedding::embed(const std::string& text) const {
  std::vector<double> v(static_cast<size_t>(width_), 0.0);
  for (const auto& raw_tok : corpus::tokenize(text).tokens) {
    std::string tok;
    tok.reserve(raw_tok.size());
    for (char c : raw_tok)
      tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    const std::uint64_t h = fnv1a64(tok);
    const size_t idx = static_cast<size_t>(h % static_cast<std::uint64_t>(width_));
    const double sign = ((h >> 32) & 1u) ? 1.0 : -1.0;
    v[idx] += sign;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("cosine: width mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace argpipe::normalize
