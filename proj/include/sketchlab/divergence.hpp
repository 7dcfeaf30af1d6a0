#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sketchlab/ensembles.hpp"
#include "sketchlab/linalg.hpp"
#include "sketchlab/matrix.hpp"
#include "sketchlab/rng.hpp"
#include "sketchlab/sketch.hpp"
#include "sketchlab/stats.hpp"

namespace sketchlab {

struct Lemma1Result {
  double product;          // prod_i (1 - sigma_i^2)^(-1/2)
  double frobenius_bound;  // 1 / sqrt(1 - ||A||_F^2)
};

// Closed form of E e^{x^T A y} for Gaussian x, y, together with its
// Frobenius-norm bound. Requires ||A||_F < 1.
inline Lemma1Result lemma1_exact(const DenseMatrix& A) {
  const double fro = frobenius_norm(A);
  if (!(fro < 1.0))
    throw std::domain_error(
        "lemma1_exact: ||A||_F >= 1, the expectation may diverge");
  double product = 1.0;
  for (double s : singular_values(A).values)
    product /= std::sqrt(1.0 - s * s);
  const double bound = 1.0 / std::sqrt(1.0 - fro * fro);
  if (product > bound * (1.0 + 1e-12))
    throw std::logic_error("lemma1_exact: product exceeds Frobenius bound");
  return {product, bound};
}

struct MonteCarloEstimate {
  double estimate;
  double std_error;
  std::size_t samples;
  // Overflow diagnostics: exponents above ~700 would overflow the double
  // exponential and are reported, not silently dropped.
  std::size_t overflow_count = 0;
  double max_exponent = 0.0;
};

// Sample mean of e^{x^T A y} over independent standard Gaussian x, y.
// ||A||_F is capped at 0.9: the exact quantity stays finite up to 1 but the
// estimator's variance explodes as ||A||_F -> 1.
inline MonteCarloEstimate lemma1_monte_carlo(const DenseMatrix& A,
                                             std::size_t samples, Rng rng) {
  const double fro = frobenius_norm(A);
  if (fro > 0.9)
    throw std::domain_error(
        "lemma1_monte_carlo: ||A||_F > 0.9 (empirical-variance guard)");
  if (samples < 1000)
    throw std::invalid_argument("lemma1_monte_carlo: samples >= 1000");
  const Eigen::MatrixXd M = A.to_eigen();
  MeanVar mv;
  MonteCarloEstimate out;
  out.samples = samples;
  Eigen::VectorXd x(M.rows()), y(M.cols());
  for (std::size_t t = 0; t < samples; ++t) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.next_gaussian();
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = rng.next_gaussian();
    const double e = x.dot(M * y);
    if (e > 700.0) {
      ++out.overflow_count;
      out.max_exponent = std::max(out.max_exponent, e);
      continue;
    }
    out.max_exponent = std::max(out.max_exponent, e);
    mv.add(std::exp(e));
  }
  out.estimate = mv.mean();
  out.std_error = mv.std_error();
  return out;
}

// Per-trial record of the xi statistic: shift vector z_i = sum_j s_j
// (u^j)^T L^i v^j, xi = ||z||^2, and the conditioning event
// E = { ||s||^2 xi < 1/2 }.
struct XiSample {
  double xi;
  std::vector<double> shift;
  bool accepted;
};

namespace detail {
// Row-major flattening of sum_j s_j u_j v_j^T.
inline Eigen::VectorXd shift_flat(const SpikeParams& spike,
                                  const DenseMatrix& U, const DenseMatrix& V) {
  const std::size_t m = U.rows();
  const std::size_t n = V.rows();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m * n));
  for (std::size_t j = 0; j < spike.r; ++j)
    for (std::size_t a = 0; a < m; ++a) {
      const double su = spike.s[j] * U(a, j);
      for (std::size_t b = 0; b < n; ++b)
        w(static_cast<Eigen::Index>(a * n + b)) += su * V(b, j);
    }
  return w;
}
}  // namespace detail

inline XiSample xi_statistic(const SketchOperator& S, const SpikeParams& spike,
                             const DenseMatrix& U, const DenseMatrix& V) {
  if (U.rows() != S.m() || V.rows() != S.n() || U.cols() != spike.r ||
      V.cols() != spike.r)
    throw std::invalid_argument("xi_statistic: factor dimension mismatch");
  const Eigen::VectorXd w = detail::shift_flat(spike, U, V);
  const Eigen::VectorXd z = S.basis().transpose() * w;
  XiSample out;
  out.shift.assign(z.data(), z.data() + z.size());
  out.xi = z.squaredNorm();
  out.accepted = spike.norm2() * out.xi < 0.5;
  return out;
}

class LowAcceptanceError : public std::runtime_error {
 public:
  LowAcceptanceError(double rate, const std::string& what)
      : std::runtime_error(what), rate(rate) {}
  double rate;
};

struct Chi2Estimate {
  double estimate;  // plug-in mean of e^{<z1,z2>} - 1
  double std_error;
  double acceptance_rate;
  std::size_t trials;
};

// Estimates E e^{<z1,z2>} - 1 with z1 drawn from the shift distribution
// conditioned on event E (realized by rejection sampling) and z2 drawn
// unconditioned. Aborts if the acceptance rate falls below 1e-2.
inline Chi2Estimate chi2_monte_carlo(const SketchOperator& S,
                                     const SpikeParams& spike,
                                     std::size_t trials, Rng rng) {
  if (trials < 1000)
    throw std::invalid_argument("chi2_monte_carlo: trials >= 1000");
  const std::size_t m = S.m();
  const std::size_t n = S.n();
  const double s2 = spike.norm2();
  std::size_t attempts = 0;
  std::uint64_t stream_id = 0;
  auto draw_shift = [&]() {
    Rng sub = rng.split(stream_id++);
    const SpikedSample sp = sample_spiked(m, n, spike, sub);
    const Eigen::VectorXd w = detail::shift_flat(spike, sp.u, sp.v);
    return Eigen::VectorXd(S.basis().transpose() * w);
  };
  MeanVar mv;
  std::size_t accepted = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Eigen::VectorXd z1;
    for (;;) {
      ++attempts;
      z1 = draw_shift();
      if (s2 * z1.squaredNorm() < 0.5) {
        ++accepted;
        break;
      }
      const double rate =
          static_cast<double>(accepted) / static_cast<double>(attempts);
      if (attempts >= 200 && rate < 1e-2)
        throw LowAcceptanceError(
            rate,
            "chi2_monte_carlo: acceptance rate " + std::to_string(rate) +
                " below 1e-2, parameters too aggressive for conditioning");
    }
    const Eigen::VectorXd z2 = draw_shift();
    mv.add(std::exp(z1.dot(z2)) - 1.0);
  }
  Chi2Estimate out;
  out.estimate = mv.mean();
  out.std_error = mv.std_error();
  out.acceptance_rate =
      static_cast<double>(accepted) / static_cast<double>(attempts);
  out.trials = trials;
  return out;
}

struct BoundReport {
  std::size_t k;
  double spike_norm2;
  double spike_norm4;
  double c;
  double chi2_bound;  // k * ||s||^4
  double tv_bound;    // sqrt(k ||s||^4 / (1-2c)) + 2c / (1-2c)
  double acceptance_rate = std::nan("");
};

// Closed-form chi^2 and total-variation bounds; pure arithmetic.
inline BoundReport tv_bound(std::size_t k, const SpikeParams& spike,
                            double c) {
  if (!(c > 0.0 && c < 0.5))
    throw std::invalid_argument("tv_bound: c in (0, 1/2)");
  BoundReport r;
  r.k = k;
  r.spike_norm2 = spike.norm2();
  r.spike_norm4 = spike.norm4();
  r.c = c;
  r.chi2_bound = static_cast<double>(k) * r.spike_norm4;
  r.tv_bound = std::sqrt(r.chi2_bound / (1.0 - 2.0 * c)) +
               2.0 * c / (1.0 - 2.0 * c);
  return r;
}

}  // namespace sketchlab
