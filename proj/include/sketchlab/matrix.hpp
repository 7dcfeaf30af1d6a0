#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sketchlab {

// Dense real matrix, row-major storage. Entries are validated to be finite
// on construction; all downstream code may assume no NaN/Inf.
class DenseMatrix {
 public:
  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), entries_(rows * cols, 0.0) {
    check_dims();
  }

  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    check_dims();
    if (entries_.size() != rows_ * cols_)
      throw std::invalid_argument("DenseMatrix: entries length " +
                                  std::to_string(entries_.size()) +
                                  " != rows*cols " +
                                  std::to_string(rows_ * cols_));
    for (double x : entries_)
      if (!std::isfinite(x))
        throw std::invalid_argument("DenseMatrix: non-finite entry");
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix I(n, n);
    for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
  }

  static DenseMatrix diagonal(const std::vector<double>& d) {
    DenseMatrix D(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) D(i, i) = d[i];
    return D;
  }

  static DenseMatrix from_eigen(const Eigen::MatrixXd& M) {
    DenseMatrix A(static_cast<std::size_t>(M.rows()),
                  static_cast<std::size_t>(M.cols()));
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      for (Eigen::Index j = 0; j < M.cols(); ++j)
        A(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = M(i, j);
    for (double x : A.entries_)
      if (!std::isfinite(x))
        throw std::invalid_argument("DenseMatrix: non-finite entry");
    return A;
  }

  Eigen::MatrixXd to_eigen() const {
    Eigen::MatrixXd M(static_cast<Eigen::Index>(rows_),
                      static_cast<Eigen::Index>(cols_));
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j)
        M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            (*this)(i, j);
    return M;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return entries_.size(); }

  double operator()(std::size_t i, std::size_t j) const {
    return entries_[i * cols_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return entries_[i * cols_ + j];
  }

  // Row-major flat view; index i*cols+j.
  const std::vector<double>& entries() const { return entries_; }
  std::vector<double>& entries() { return entries_; }

  bool same_shape(const DenseMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  void check_dims() const {
    if (rows_ == 0 || cols_ == 0)
      throw std::invalid_argument("DenseMatrix: dimensions must be positive");
  }

  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> entries_;
};

// Entrywise inner product; equals tr(A^T B).
inline double frobenius_inner(const DenseMatrix& A, const DenseMatrix& B) {
  if (!A.same_shape(B))
    throw std::invalid_argument("frobenius_inner: dimension mismatch");
  double acc = 0.0;
  const auto& a = A.entries();
  const auto& b = B.entries();
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double frobenius_norm(const DenseMatrix& A) {
  return std::sqrt(frobenius_inner(A, A));
}

}  // namespace sketchlab
