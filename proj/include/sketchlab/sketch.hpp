#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sketchlab/matrix.hpp"
#include "sketchlab/rng.hpp"

namespace sketchlab {

class DependentFamilyError : public std::runtime_error {
 public:
  DependentFamilyError(std::size_t index, const std::string& what)
      : std::runtime_error(what), index(index) {}
  std::size_t index;
};

namespace detail {

// Gram-Schmidt with one re-orthogonalization pass, blocked so that the
// projections against the finished prefix run as GEMMs. Columns of B are
// orthonormalized in place. Returns the post-projection pivot norm of each
// column relative to its original norm.
inline std::vector<double> gram_schmidt_inplace(Eigen::MatrixXd& B,
                                                std::size_t panel = 64) {
  const auto k = static_cast<std::size_t>(B.cols());
  std::vector<double> rel_pivot(k, 0.0);
  std::vector<double> orig_norm(k, 0.0);
  for (std::size_t j = 0; j < k; ++j)
    orig_norm[j] = B.col(static_cast<Eigen::Index>(j)).norm();
  for (std::size_t lo = 0; lo < k; lo += panel) {
    const std::size_t hi = std::min(k, lo + panel);
    auto P = B.middleCols(static_cast<Eigen::Index>(lo),
                          static_cast<Eigen::Index>(hi - lo));
    if (lo > 0) {
      auto Q = B.leftCols(static_cast<Eigen::Index>(lo));
      for (int pass = 0; pass < 2; ++pass) P -= Q * (Q.transpose() * P);
    }
    for (std::size_t j = lo; j < hi; ++j) {
      auto col = B.col(static_cast<Eigen::Index>(j));
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t i = lo; i < j; ++i) {
          auto q = B.col(static_cast<Eigen::Index>(i));
          col -= q.dot(col) * q;
        }
      const double nrm = col.norm();
      rel_pivot[j] = orig_norm[j] > 0.0 ? nrm / orig_norm[j] : 0.0;
      if (nrm > 0.0) col /= nrm;
    }
  }
  return rel_pivot;
}

// First row-major coordinate above threshold is made positive; fixes the
// sign left free by normalization so constructions are reproducible.
inline void fix_sign(Eigen::MatrixXd& B, double tol = 1e-12) {
  for (Eigen::Index j = 0; j < B.cols(); ++j) {
    for (Eigen::Index i = 0; i < B.rows(); ++i) {
      const double x = B(i, j);
      if (std::abs(x) > tol) {
        if (x < 0.0) B.col(j) = -B.col(j);
        break;
      }
    }
  }
}

}  // namespace detail

// Ordered family of k trace-orthonormal m x n measurement matrices, stored
// as the columns of an (m*n) x k matrix under row-major flattening, so that
// applying the sketch is a single matrix-vector product.
class SketchOperator {
 public:
  // Memory guard: dense storage only, refuse k*m*n beyond 2e9 entries
  // without the override.
  SketchOperator(std::size_t k, std::size_t m, std::size_t n,
                 Eigen::MatrixXd basis, bool skip_checks = false)
      : k_(k), m_(m), n_(n), basis_(std::move(basis)) {
    if (k_ == 0 || k_ > m_ * n_)
      throw std::invalid_argument("SketchOperator: need 1 <= k <= m*n");
    if (basis_.rows() != static_cast<Eigen::Index>(m_ * n_) ||
        basis_.cols() != static_cast<Eigen::Index>(k_))
      throw std::invalid_argument("SketchOperator: basis shape mismatch");
    if (!skip_checks) {
      const double resid = gram_residual();
      if (resid > 1e-10)
        throw std::invalid_argument(
            "SketchOperator: family not trace-orthonormal, residual " +
            std::to_string(resid));
    }
  }

  std::size_t k() const { return k_; }
  std::size_t m() const { return m_; }
  std::size_t n() const { return n_; }
  const Eigen::MatrixXd& basis() const { return basis_; }

  // max |tr((L^i)^T L^j) - delta_ij|
  double gram_residual() const {
    const Eigen::MatrixXd G = basis_.transpose() * basis_;
    return (G - Eigen::MatrixXd::Identity(G.rows(), G.cols()))
        .cwiseAbs()
        .maxCoeff();
  }

  DenseMatrix measurement(std::size_t i) const {
    if (i >= k_) throw std::out_of_range("SketchOperator::measurement");
    DenseMatrix L(m_, n_);
    for (std::size_t e = 0; e < m_ * n_; ++e)
      L.entries()[e] = basis_(static_cast<Eigen::Index>(e),
                              static_cast<Eigen::Index>(i));
    return L;
  }

  // y_i = <L^i, A>_F
  std::vector<double> apply(const DenseMatrix& A) const {
    if (A.rows() != m_ || A.cols() != n_)
      throw std::invalid_argument("apply_sketch: dimension mismatch");
    Eigen::Map<const Eigen::VectorXd> vec(A.entries().data(),
                                          static_cast<Eigen::Index>(m_ * n_));
    const Eigen::VectorXd y = basis_.transpose() * vec;
    return std::vector<double>(y.data(), y.data() + y.size());
  }

  // Batched application: each column of `flats` is a row-major flattened
  // m x n matrix; returns the k x batch sketch outputs.
  Eigen::MatrixXd apply_flat(const Eigen::MatrixXd& flats) const {
    if (flats.rows() != static_cast<Eigen::Index>(m_ * n_))
      throw std::invalid_argument("apply_flat: dimension mismatch");
    return basis_.transpose() * flats;
  }

 private:
  std::size_t k_, m_, n_;
  Eigen::MatrixXd basis_;
};

inline void check_sketch_memory(std::size_t k, std::size_t m, std::size_t n,
                                bool override_guard = false) {
  if (!override_guard && k * m * n > 2000000000ULL)
    throw std::invalid_argument(
        "sketch memory guard: k*m*n > 2e9 entries (pass the override to "
        "proceed)");
}

inline SketchOperator make_random_sketch(std::size_t k, std::size_t m,
                                         std::size_t n, Rng rng,
                                         bool override_memory_guard = false) {
  if (k == 0 || k > m * n)
    throw std::invalid_argument("make_random_sketch: need 1 <= k <= m*n");
  check_sketch_memory(k, m, n, override_memory_guard);
  const auto mn = static_cast<Eigen::Index>(m * n);
  Eigen::MatrixXd B(mn, static_cast<Eigen::Index>(k));
  for (Eigen::Index j = 0; j < B.cols(); ++j)
    for (Eigen::Index i = 0; i < mn; ++i) B(i, j) = rng.next_gaussian();
  // Random Gaussian columns are independent with probability 1; the retry
  // loop only fires on numerical degeneracy.
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXd W = B;
    const auto pivots = detail::gram_schmidt_inplace(W);
    std::size_t bad = k;
    for (std::size_t j = 0; j < k; ++j)
      if (pivots[j] < 1e-10) {
        bad = j;
        break;
      }
    if (bad == k) {
      detail::fix_sign(W);
      return SketchOperator(k, m, n, std::move(W), /*skip_checks=*/true);
    }
    if (attempt >= 5)
      throw std::runtime_error(
          "make_random_sketch: persistent rank deficiency at column " +
          std::to_string(bad));
    Rng redraw = rng.split(0x7265647261770000ULL + attempt);
    for (Eigen::Index i = 0; i < mn; ++i)
      B(i, static_cast<Eigen::Index>(bad)) = redraw.next_gaussian();
  }
}

// Orthonormalizes a user-supplied family, preserving its span. Throws
// DependentFamilyError naming the first dependent member.
inline SketchOperator orthonormalize(const std::vector<DenseMatrix>& family) {
  if (family.empty())
    throw std::invalid_argument("orthonormalize: empty family");
  const std::size_t m = family.front().rows();
  const std::size_t n = family.front().cols();
  if (family.size() > m * n)
    throw std::invalid_argument("orthonormalize: more than m*n matrices");
  const auto mn = static_cast<Eigen::Index>(m * n);
  Eigen::MatrixXd B(mn, static_cast<Eigen::Index>(family.size()));
  for (std::size_t j = 0; j < family.size(); ++j) {
    if (family[j].rows() != m || family[j].cols() != n)
      throw std::invalid_argument("orthonormalize: mixed dimensions");
    for (Eigen::Index i = 0; i < mn; ++i)
      B(i, static_cast<Eigen::Index>(j)) =
          family[j].entries()[static_cast<std::size_t>(i)];
  }
  const auto pivots = detail::gram_schmidt_inplace(B);
  for (std::size_t j = 0; j < family.size(); ++j)
    if (pivots[j] < 1e-10)
      throw DependentFamilyError(
          j, "orthonormalize: matrix " + std::to_string(j) +
                 " is linearly dependent on its predecessors (pivot " +
                 std::to_string(pivots[j]) + ")");
  detail::fix_sign(B);
  return SketchOperator(family.size(), m, n, std::move(B),
                        /*skip_checks=*/true);
}

// Raw measurement family realizing the bilinear sketch A -> S_bil * A as a
// general linear sketch: measurement (i,j), in row-major (i,j) order, picks
// out (S_bil * A)_{ij}, i.e. L(a,b) = S_bil(i,a) * delta_{bj}.
inline std::vector<DenseMatrix> bilinear_family(const DenseMatrix& S_bil,
                                                std::size_t n) {
  const std::size_t kp = S_bil.rows();
  const std::size_t m = S_bil.cols();
  std::vector<DenseMatrix> family;
  family.reserve(kp * n);
  for (std::size_t i = 0; i < kp; ++i) {
    double rownorm = 0.0;
    for (std::size_t a = 0; a < m; ++a)
      rownorm += S_bil(i, a) * S_bil(i, a);
    if (!(rownorm > 0.0))
      throw std::invalid_argument("embed_bilinear: degenerate row " +
                                  std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) {
      DenseMatrix L(m, n);
      for (std::size_t a = 0; a < m; ++a) L(a, j) = S_bil(i, a);
      family.push_back(std::move(L));
    }
  }
  return family;
}

inline SketchOperator embed_bilinear(const DenseMatrix& S_bil, std::size_t n) {
  return orthonormalize(bilinear_family(S_bil, n));
}

// Binary dump: k, m, n as 64-bit little-endian unsigned integers, then the
// k measurement matrices in order, each row-major, as little-endian IEEE-754
// doubles.
inline void save_sketch(const SketchOperator& S, const std::string& path) {
  static_assert(sizeof(double) == 8);
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("save_sketch: cannot open " + path);
  auto write_u64 = [f](std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = (v >> (8 * i)) & 0xFF;
    std::fwrite(buf, 1, 8, f);
  };
  write_u64(S.k());
  write_u64(S.m());
  write_u64(S.n());
  for (std::size_t i = 0; i < S.k(); ++i)
    for (Eigen::Index e = 0; e < S.basis().rows(); ++e) {
      const double x = S.basis()(e, static_cast<Eigen::Index>(i));
      std::uint64_t bits;
      std::memcpy(&bits, &x, 8);
      write_u64(bits);
    }
  if (std::fclose(f) != 0)
    throw std::runtime_error("save_sketch: write failure on " + path);
}

inline SketchOperator load_sketch(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("load_sketch: cannot open " + path);
  auto read_u64 = [f, &path]() {
    unsigned char buf[8];
    if (std::fread(buf, 1, 8, f) != 8)
      throw std::runtime_error("load_sketch: truncated file " + path);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  };
  try {
    const std::uint64_t k = read_u64(), m = read_u64(), n = read_u64();
    Eigen::MatrixXd B(static_cast<Eigen::Index>(m * n),
                      static_cast<Eigen::Index>(k));
    for (std::uint64_t i = 0; i < k; ++i)
      for (std::uint64_t e = 0; e < m * n; ++e) {
        const std::uint64_t bits = read_u64();
        double x;
        std::memcpy(&x, &bits, 8);
        B(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(i)) = x;
      }
    std::fclose(f);
    return SketchOperator(k, m, n, std::move(B));
  } catch (...) {
    std::fclose(f);
    throw;
  }
}

}  // namespace sketchlab
