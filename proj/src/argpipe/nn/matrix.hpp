#pragma once

#include <cstddef>
#include <vector>

#include "argpipe/common/error.hpp"
#include "argpipe/common/rng.hpp"

namespace argpipe::nn {

// Dense row-major double matrix. Everything trains at 64-bit precision so
// that analytic gradients can be checked against central finite differences.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols),
                               data_(static_cast<size_t>(rows) * cols, 0.0) {}

  static Matrix zeros(int rows, int cols) { return Matrix(rows, cols); }
  static Matrix full(int rows, int cols, double v);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int i, int j) {
    return data_[static_cast<size_t>(i) * cols_ + j];
  }
  double operator()(int i, int j) const {
    return data_[static_cast<size_t>(i) * cols_ + j];
  }
  double* row(int i) { return data_.data() + static_cast<size_t>(i) * cols_; }
  const double* row(int i) const {
    return data_.data() + static_cast<size_t>(i) * cols_;
  }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void resize_zero(int rows, int cols);

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// c += a * b
void add_mm_nn(Matrix& c, const Matrix& a, const Matrix& b);
// c += a * b^T
void add_mm_nt(Matrix& c, const Matrix& a, const Matrix& b);
// c += a^T * b
void add_mm_tn(Matrix& c, const Matrix& a, const Matrix& b);

Matrix mm(const Matrix& a, const Matrix& b);
Matrix transposed(const Matrix& m);

double frobenius_norm_sq(const Matrix& m);

// Glorot/Xavier uniform initialization.
void xavier_init(Matrix& m, Rng& rng);

}  // namespace argpipe::nn
