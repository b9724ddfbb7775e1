#include "ssdpt/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace ssdpt {

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (int r = 0; r < a.rows(); ++r) {
    const double* src = a.row(r);
    for (int c = 0; c < a.cols(); ++c) {
      t(c, r) = src[c];
    }
  }
  return t;
}

void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("gemm: inner dimensions do not match");
  }
  c.resize(a.rows(), b.cols());
  if (!accumulate) {
    c.fill(0.0);
  }
  const int m = a.rows(), k = a.cols(), n = b.cols();
  for (int i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b.row(p);
      for (int j = 0; j < n; ++j) {
        crow[j] += av * brow[j];
      }
    }
  }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("gemm_nt: inner dimensions do not match");
  }
  c.resize(a.rows(), b.rows());
  const int m = a.rows(), k = a.cols(), n = b.rows();
  for (int i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int j = 0; j < n; ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (int p = 0; p < k; ++p) {
        acc += arow[p] * brow[p];
      }
      crow[j] = accumulate ? crow[j] + acc : acc;
    }
  }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("gemm_tn: inner dimensions do not match");
  }
  c.resize(a.cols(), b.cols());
  if (!accumulate) {
    c.fill(0.0);
  }
  const int k = a.rows(), m = a.cols(), n = b.cols();
  for (int p = 0; p < k; ++p) {
    const double* arow = a.row(p);
    const double* brow = b.row(p);
    for (int i = 0; i < m; ++i) {
      const double av = arow[i];
      double* crow = c.row(i);
      for (int j = 0; j < n; ++j) {
        crow[j] += av * brow[j];
      }
    }
  }
}

bool all_finite(const Matrix& a) {
  const double* p = a.data();
  for (size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(p[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace ssdpt
