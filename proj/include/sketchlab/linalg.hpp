#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "sketchlab/matrix.hpp"

namespace sketchlab {

// Full singular spectrum, non-increasing, length min(rows, cols).
struct SingularSpectrum {
  std::vector<double> values;
};

class SvdError : public std::runtime_error {
 public:
  explicit SvdError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
// 64-bit FNV-1a over the raw entry bytes; identifies the offending matrix
// in error messages.
inline std::uint64_t matrix_fingerprint(const DenseMatrix& A) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double x : A.entries()) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(x));
    std::memcpy(&bits, &x, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xFF;
      h *= 1099511628211ULL;
    }
  }
  return h;
}
}  // namespace detail

// Exact (to working precision) singular values via a dense decomposition of
// the full matrix. The decomposition is verified by reconstruction; relative
// residual above 1e-10 is treated as non-convergence.
inline SingularSpectrum singular_values(const DenseMatrix& A) {
  const Eigen::MatrixXd M = A.to_eigen();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double fro = M.norm();
  const Eigen::MatrixXd recon =
      svd.matrixU() * svd.singularValues().asDiagonal() *
      svd.matrixV().transpose();
  const double resid = (recon - M).norm();
  if (fro > 0.0 && resid > 1e-10 * fro) {
    std::ostringstream os;
    os << "singular_values: decomposition residual " << resid / fro
       << " exceeds 1e-10 for " << A.rows() << "x" << A.cols()
       << " matrix, fro=" << fro << ", fingerprint=" << std::hex
       << detail::matrix_fingerprint(A);
    throw SvdError(os.str());
  }
  SingularSpectrum s;
  s.values.resize(std::min(A.rows(), A.cols()), 0.0);
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    s.values[static_cast<std::size_t>(i)] =
        std::max(0.0, svd.singularValues()(i));
  std::sort(s.values.begin(), s.values.end(), std::greater<double>());
  return s;
}

inline double operator_norm(const DenseMatrix& A) {
  return singular_values(A).values.front();
}

// (sum sigma_i^p)^(1/p) over the nonzero singular values; sigma_i counts as
// nonzero when sigma_i > rank_tol * sigma_1.
inline double schatten_norm(const DenseMatrix& A, double p,
                            double rank_tol = 1e-10) {
  if (!(p > 0.0))
    throw std::invalid_argument("schatten_norm: p must be positive");
  const auto sv = singular_values(A).values;
  const double cutoff = rank_tol * sv.front();
  double acc = 0.0;
  for (double s : sv)
    if (s > cutoff) acc += std::pow(s, p);
  return std::pow(acc, 1.0 / p);
}

// Sum of the s largest singular values.
inline double kyfan_norm(const DenseMatrix& A, std::size_t s) {
  const auto sv = singular_values(A).values;
  if (s < 1 || s > sv.size())
    throw std::invalid_argument("kyfan_norm: s out of range [1, " +
                                std::to_string(sv.size()) + "]");
  double acc = 0.0;
  for (std::size_t i = 0; i < s; ++i) acc += sv[i];
  return acc;
}

}  // namespace sketchlab
