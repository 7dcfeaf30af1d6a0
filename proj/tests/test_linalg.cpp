#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "sketchlab/sketchlab.hpp"

using namespace sketchlab;

namespace {

DenseMatrix random_matrix(std::size_t m, std::size_t n, Rng& rng) {
  DenseMatrix A(m, n);
  for (auto& x : A.entries()) x = rng.next_gaussian();
  return A;
}

// Cyclic Jacobi eigensolver for a symmetric matrix, written against plain
// arrays on purpose: it is the independent oracle for the SVD path.
std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> S) {
  const std::size_t n = S.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += S[p][q] * S[p][q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(S[p][q]) < 1e-300) continue;
        const double theta = (S[q][q] - S[p][p]) / (2.0 * S[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double sip = S[i][p], siq = S[i][q];
          S[i][p] = c * sip - s * siq;
          S[i][q] = s * sip + c * siq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double spi = S[p][i], sqi = S[q][i];
          S[p][i] = c * spi - s * sqi;
          S[q][i] = s * spi + c * sqi;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = S[i][i];
  std::sort(ev.begin(), ev.end(), std::greater<double>());
  return ev;
}

DenseMatrix random_orthogonal(std::size_t n, Rng& rng) {
  Eigen::MatrixXd G(n, n);
  for (Eigen::Index i = 0; i < G.size(); ++i) G(i) = rng.next_gaussian();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  return DenseMatrix::from_eigen(
      qr.householderQ() * Eigen::MatrixXd::Identity(n, n));
}

DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B) {
  return DenseMatrix::from_eigen(A.to_eigen() * B.to_eigen());
}

}  // namespace

TEST_CASE("DenseMatrix invariants") {
  CHECK_THROWS_AS(DenseMatrix(2, 2, {1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(DenseMatrix(1, 2, {1.0, std::nan("")}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DenseMatrix(0, 3), std::invalid_argument);
  const DenseMatrix A(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(A(1, 2) == 6.0);
}

TEST_CASE("singular_values: diagonal and zero") {
  const auto sv = singular_values(DenseMatrix::diagonal({3, 1, 2})).values;
  CHECK(sv == std::vector<double>{3, 2, 1});
  const auto z = singular_values(DenseMatrix(4, 2)).values;
  CHECK(z == std::vector<double>{0, 0});
}

TEST_CASE("singular_values: squared spectrum matches Jacobi oracle on A^T A") {
  Rng rng(42);
  for (int rep = 0; rep < 10; ++rep) {
    const DenseMatrix A = random_matrix(5, 5, rng);
    const auto sv = singular_values(A).values;
    std::vector<std::vector<double>> S(5, std::vector<double>(5, 0.0));
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t k = 0; k < 5; ++k) S[i][j] += A(k, i) * A(k, j);
    const auto ev = jacobi_eigenvalues(S);
    for (std::size_t i = 0; i < 5; ++i)
      CHECK(sv[i] * sv[i] ==
            doctest::Approx(ev[i]).epsilon(1e-8));
  }
}

TEST_CASE("operator_norm basics") {
  CHECK(operator_norm(DenseMatrix::diagonal({3, 1, 2})) == doctest::Approx(3));
  CHECK(operator_norm(DenseMatrix::identity(7)) == doctest::Approx(1));
}

TEST_CASE("operator_norm: sup over random unit vectors from below") {
  Rng rng(7);
  const DenseMatrix A = random_matrix(4, 4, rng);
  const double op = operator_norm(A);
  const Eigen::MatrixXd M = A.to_eigen();
  double best = 0.0;
  Eigen::VectorXd x(4);
  for (int t = 0; t < 1000000; ++t) {
    for (int i = 0; i < 4; ++i) x(i) = rng.next_gaussian();
    best = std::max(best, (M * x).norm() / x.norm());
  }
  CHECK(best <= op * (1 + 1e-12));
  CHECK(best >= op * (1 - 1e-3));
}

TEST_CASE("schatten_norm") {
  CHECK(schatten_norm(DenseMatrix::diagonal({3, 4}), 2.0) ==
        doctest::Approx(5.0));
  CHECK(schatten_norm(DenseMatrix::diagonal({1, 1, 1}), 1.0) ==
        doctest::Approx(3.0));
  CHECK_THROWS_AS(schatten_norm(DenseMatrix::identity(2), 0.0),
                  std::invalid_argument);

  // p=4 against the trace-of-power oracle (tr((A^T A)^2))^(1/4).
  Rng rng(3);
  const DenseMatrix A = random_matrix(4, 4, rng);
  Eigen::MatrixXd AtA = A.to_eigen().transpose() * A.to_eigen();
  const double tr = (AtA * AtA).trace();
  CHECK(schatten_norm(A, 4.0) ==
        doctest::Approx(std::pow(tr, 0.25)).epsilon(1e-10));

  // p=2 equals Frobenius.
  CHECK(schatten_norm(A, 2.0) == doctest::Approx(frobenius_norm(A)));
}

TEST_CASE("kyfan_norm") {
  const DenseMatrix D = DenseMatrix::diagonal({3, 2, 1});
  CHECK(kyfan_norm(D, 2) == doctest::Approx(5.0));
  CHECK_THROWS_AS(kyfan_norm(D, 0), std::invalid_argument);
  CHECK_THROWS_AS(kyfan_norm(D, 4), std::invalid_argument);

  Rng rng(11);
  const DenseMatrix A = random_matrix(5, 4, rng);
  CHECK(kyfan_norm(A, 1) == doctest::Approx(operator_norm(A)));
  CHECK(kyfan_norm(A, 4) == doctest::Approx(schatten_norm(A, 1.0)));
}

TEST_CASE("frobenius_inner") {
  CHECK(frobenius_inner(DenseMatrix::identity(2), DenseMatrix::identity(2)) ==
        doctest::Approx(2.0));
  Rng rng(5);
  const DenseMatrix A = random_matrix(3, 4, rng);
  CHECK(frobenius_inner(A, DenseMatrix(3, 4)) == 0.0);
  CHECK_THROWS_AS(frobenius_inner(A, DenseMatrix(4, 3)),
                  std::invalid_argument);

  const DenseMatrix B = random_matrix(3, 4, rng);
  const double tr = (A.to_eigen().transpose() * B.to_eigen()).trace();
  CHECK(frobenius_inner(A, B) == doctest::Approx(tr).epsilon(1e-12));
  CHECK(frobenius_inner(A, B) == doctest::Approx(frobenius_inner(B, A)));
  CHECK(frobenius_inner(A, A) ==
        doctest::Approx(frobenius_norm(A) * frobenius_norm(A)));
}

TEST_CASE("norm inequalities on random matrices") {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const DenseMatrix A = random_matrix(6, 5, rng);
    const double op = operator_norm(A);
    const double fro = frobenius_norm(A);
    const auto sv = singular_values(A).values;
    std::size_t rank = 0;
    for (double s : sv)
      if (s > 1e-10 * sv.front()) ++rank;
    CHECK(op <= fro * (1 + 1e-12));
    CHECK(fro <= std::sqrt(static_cast<double>(rank)) * op * (1 + 1e-12));

    // Schatten p-norm non-increasing in p.
    double prev = schatten_norm(A, 1.0);
    for (double p : {2.0, 4.0, 8.0}) {
      const double cur = schatten_norm(A, p);
      CHECK(cur <= prev * (1 + 1e-12));
      prev = cur;
    }

    // Ky-Fan non-decreasing and discretely concave in s.
    std::vector<double> kf;
    for (std::size_t s = 1; s <= 5; ++s) kf.push_back(kyfan_norm(A, s));
    for (std::size_t i = 1; i < kf.size(); ++i) CHECK(kf[i] >= kf[i - 1]);
    for (std::size_t i = 1; i + 1 < kf.size(); ++i)
      CHECK(kf[i + 1] - kf[i] <= kf[i] - kf[i - 1] + 1e-12);
  }
}

TEST_CASE("singular values invariant under orthogonal rotations") {
  Rng rng(17);
  const DenseMatrix A = random_matrix(6, 4, rng);
  const DenseMatrix Q = random_orthogonal(6, rng);
  const DenseMatrix R = random_orthogonal(4, rng);
  const auto sv = singular_values(A).values;
  const auto sv2 = singular_values(matmul(matmul(Q, A), R)).values;
  for (std::size_t i = 0; i < sv.size(); ++i)
    CHECK(sv2[i] == doctest::Approx(sv[i]).epsilon(1e-8));
}
