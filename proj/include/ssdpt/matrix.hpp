#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace ssdpt {

// Dense row-major matrix of doubles. The numeric workhorse for spectrograms,
// segments, and model math. Vectors are stored as 1 x n matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows),
        cols_(cols),
        data_(static_cast<size_t>(rows) * static_cast<size_t>(cols), fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) { return data_[index(r, c)]; }
  double operator()(int r, int c) const { return data_[index(r, c)]; }

  double* row(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
  const double* row(int r) const {
    return data_.data() + static_cast<size_t>(r) * cols_;
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  void fill(double v) { data_.assign(data_.size(), v); }

  // Reshapes; contents are unspecified afterwards.
  void resize(int rows, int cols) {
    rows_ = rows;
    cols_ = cols;
    data_.resize(static_cast<size_t>(rows) * static_cast<size_t>(cols));
  }

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  size_t index(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return static_cast<size_t>(r) * cols_ + c;
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& a);

// c = a * b, or c += a * b when accumulate is set.
void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);

// c = a * b^T
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);

// c = a^T * b
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);

bool all_finite(const Matrix& a);

}  // namespace ssdpt
