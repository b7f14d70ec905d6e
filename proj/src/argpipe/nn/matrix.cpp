#include "argpipe/nn/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace argpipe::nn {

Matrix Matrix::full(int rows, int cols, double v) {
  Matrix m(rows, cols);
  m.fill(v);
  return m;
}

void Matrix::resize_zero(int rows, int cols) {
  rows_ = rows;
  cols_ = cols;
  data_.assign(static_cast<size_t>(rows) * cols, 0.0);
}

void add_mm_nn(Matrix& c, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols())
    throw ShapeError("matmul nn shape mismatch");
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    const double* ar = a.row(i);
    double* cr = c.row(i);
    for (int p = 0; p < k; ++p) {
      const double av = ar[p];
      const double* br = b.row(p);
      for (int j = 0; j < m; ++j) cr[j] += av * br[j];
    }
  }
}

void add_mm_nt(Matrix& c, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols() || c.rows() != a.rows() || c.cols() != b.rows())
    throw ShapeError("matmul nt shape mismatch");
  const int n = a.rows(), k = a.cols(), m = b.rows();
  for (int i = 0; i < n; ++i) {
    const double* ar = a.row(i);
    double* cr = c.row(i);
    for (int j = 0; j < m; ++j) {
      const double* br = b.row(j);
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ar[p] * br[p];
      cr[j] += acc;
    }
  }
}

void add_mm_tn(Matrix& c, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || c.rows() != a.cols() || c.cols() != b.cols())
    throw ShapeError("matmul tn shape mismatch");
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    const double* ar = a.row(i);
    const double* br = b.row(i);
    for (int p = 0; p < k; ++p) {
      const double av = ar[p];
      double* cr = c.row(p);
      for (int j = 0; j < m; ++j) cr[j] += av * br[j];
    }
  }
}

Matrix mm(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  add_mm_nn(c, a, b);
  return c;
}

Matrix transposed(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

double frobenius_norm_sq(const Matrix& m) {
  double s = 0.0;
  for (size_t i = 0; i < m.size(); ++i) s += m.data()[i] * m.data()[i];
  return s;
}

void xavier_init(Matrix& m, Rng& rng) {
  const double bound = std::sqrt(6.0 / (m.rows() + m.cols()));
  std::uniform_real_distribution<double> d(-bound, bound);
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
}

}  // namespace argpipe::nn
