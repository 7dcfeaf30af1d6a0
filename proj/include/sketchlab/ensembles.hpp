#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sketchlab/linalg.hpp"
#include "sketchlab/matrix.hpp"
#include "sketchlab/rng.hpp"
#include "sketchlab/stats.hpp"

namespace sketchlab {

// Rank and magnitudes of the planted low-rank perturbation in the spiked
// ensemble: G(m,n) + sum_i s_i u_i v_i^T.
struct SpikeParams {
  std::size_t r;
  std::vector<double> s;

  SpikeParams(std::size_t rank, std::vector<double> magnitudes)
      : r(rank), s(std::move(magnitudes)) {
    if (r == 0 || s.size() != r)
      throw std::invalid_argument("SpikeParams: need r >= 1 magnitudes");
    for (double x : s)
      if (!(x > 0.0))
        throw std::invalid_argument("SpikeParams: magnitudes must be > 0");
  }

  // Uniform magnitudes with a prescribed squared l2 norm.
  static SpikeParams uniform_norm2(std::size_t rank, double norm2) {
    if (!(norm2 > 0.0))
      throw std::invalid_argument("SpikeParams: norm2 must be > 0");
    return SpikeParams(
        rank, std::vector<double>(
                  rank, std::sqrt(norm2 / static_cast<double>(rank))));
  }

  // ||s||_2^2
  double norm2() const {
    double acc = 0.0;
    for (double x : s) acc += x * x;
    return acc;
  }
  // ||s||_2^4
  double norm4() const {
    const double n2 = norm2();
    return n2 * n2;
  }
};

inline DenseMatrix sample_gaussian(std::size_t m, std::size_t n, Rng rng) {
  DenseMatrix A(m, n);
  for (auto& x : A.entries()) x = rng.next_gaussian();
  return A;
}

// Spiked sample with the latent factors retained: matrix = background +
// sum_i s_i u_i v_i^T. Columns of u (m x r) and v (n x r) are the factors.
struct SpikedSample {
  DenseMatrix matrix;
  DenseMatrix u;
  DenseMatrix v;
};

// Sub-streams: split(0) background Gaussian, split(1) the u factors,
// split(2) the v factors. matrix - sum s_i u_i v_i^T reproduces
// sample_gaussian(m, n, rng.split(0)) exactly.
inline SpikedSample sample_spiked(std::size_t m, std::size_t n,
                                  const SpikeParams& spike, Rng rng) {
  if (spike.r > std::min(m, n))
    throw std::invalid_argument("sample_spiked: r > min(m, n)");
  DenseMatrix X = sample_gaussian(m, n, rng.split(0));
  Rng ru = rng.split(1);
  Rng rv = rng.split(2);
  DenseMatrix U(m, spike.r);
  DenseMatrix V(n, spike.r);
  for (std::size_t j = 0; j < spike.r; ++j)
    for (std::size_t i = 0; i < m; ++i) U(i, j) = ru.next_gaussian();
  for (std::size_t j = 0; j < spike.r; ++j)
    for (std::size_t i = 0; i < n; ++i) V(i, j) = rv.next_gaussian();
  for (std::size_t j = 0; j < spike.r; ++j)
    for (std::size_t a = 0; a < m; ++a) {
      const double su = spike.s[j] * U(a, j);
      for (std::size_t b = 0; b < n; ++b) X(a, b) += su * V(b, j);
    }
  return {std::move(X), std::move(U), std::move(V)};
}

enum class InstanceTag { alpha_operator, schatten_p, eps_operator_rect, kyfan };

inline std::string to_string(InstanceTag tag) {
  switch (tag) {
    case InstanceTag::alpha_operator: return "alpha-operator";
    case InstanceTag::schatten_p: return "schatten-p";
    case InstanceTag::eps_operator_rect: return "eps-operator-rect";
    case InstanceTag::kyfan: return "kyfan";
  }
  return "?";
}

// Preset hard-instance family. Parameter meaning by tag:
//   alpha-operator:    n, alpha (>1), C (spike constant, default 5)
//   schatten-p:        n, p (>2)
//   eps-operator-rect: d, eps in (0,1/3), alpha (default 3*sqrt(7/2))
//   kyfan:             n, s_count <= 0.0789*sqrt(n) unless the override
//                      flag opens the unproven regime
struct InstanceKind {
  InstanceTag tag;
  std::size_t n = 0;
  std::size_t d = 0;
  double alpha = 0.0;
  double p = 0.0;
  double eps = 0.0;
  std::size_t s_count = 0;
  double C = 5.0;
  bool allow_out_of_regime = false;
};

// Norm-gap predicate distinguishing the two sides of a corollary instance.
// Null side passes when value(X) <= null_max, spiked side when
// value(X) >= spiked_min.
struct GapPredicate {
  std::string norm;  // "operator" | "schatten-p-pth-power" | "kyfan"
  double p = 0.0;
  std::size_t s = 0;
  double null_max = 0.0;
  double spiked_min = 0.0;

  double value(const DenseMatrix& X) const {
    if (norm == "operator") return operator_norm(X);
    if (norm == "schatten-p-pth-power")
      return std::pow(schatten_norm(X, p), p);
    return kyfan_norm(X, s);
  }
};

struct CorollaryInstance {
  std::size_t m;
  std::size_t n;
  SpikeParams spike;
  GapPredicate gap;
};

inline CorollaryInstance corollary_instance(const InstanceKind& kind) {
  switch (kind.tag) {
    case InstanceTag::alpha_operator: {
      if (kind.n == 0)
        throw std::invalid_argument("alpha-operator: n required");
      if (!(kind.alpha > 1.0))
        throw std::invalid_argument("alpha-operator: need alpha > 1");
      const double rootn = std::sqrt(static_cast<double>(kind.n));
      const double s1 = kind.C * kind.alpha / rootn;
      GapPredicate gap;
      gap.norm = "operator";
      gap.null_max = 2.1 * rootn;
      // Planted top singular value is ~ C*alpha*sqrt(n); the 0.9 slack and
      // the 2.1*sqrt(n) null edge give the spiked-side floor.
      gap.spiked_min = (0.9 * kind.C * kind.alpha - 2.1) * rootn;
      return {kind.n, kind.n, SpikeParams(1, {s1}), gap};
    }
    case InstanceTag::schatten_p: {
      if (kind.n == 0) throw std::invalid_argument("schatten-p: n required");
      if (!(kind.p > 2.0))
        throw std::invalid_argument("schatten-p: need p > 2");
      const double nd = static_cast<double>(kind.n);
      const double s1 = 5.0 / std::pow(nd, 0.5 - 1.0 / kind.p);
      GapPredicate gap;
      gap.norm = "schatten-p-pth-power";
      gap.p = kind.p;
      // ||X||_p^p scale: spike contributes ~ 5^p * n^(p/2+1), the null bulk
      // an O(1) multiple of n^(p/2+1). Threshold pair at 1/4 and 1/2 of the
      // spike contribution.
      const double spike_pp = std::pow(5.0, kind.p) * std::pow(nd, kind.p / 2.0 + 1.0);
      gap.null_max = 0.25 * spike_pp;
      gap.spiked_min = 0.5 * spike_pp;
      return {kind.n, kind.n, SpikeParams(1, {s1}), gap};
    }
    case InstanceTag::eps_operator_rect: {
      if (kind.d == 0)
        throw std::invalid_argument("eps-operator-rect: d required");
      if (!(kind.eps > 0.0 && kind.eps < 1.0 / 3.0))
        throw std::invalid_argument("eps-operator-rect: eps in (0, 1/3)");
      const double alpha =
          kind.alpha > 0.0 ? kind.alpha : 3.0 * std::sqrt(7.0 / 2.0);
      const double dd = static_cast<double>(kind.d);
      const auto m = static_cast<std::size_t>(
          std::llround(dd / (kind.eps * kind.eps)));
      const double s1 = alpha * std::sqrt(kind.eps / dd);
      GapPredicate gap;
      gap.norm = "operator";
      gap.null_max = (1.0 + 1.1 * kind.eps) * std::sqrt(dd) / kind.eps;
      gap.spiked_min = (1.0 + 2.0 * kind.eps) * std::sqrt(dd) / kind.eps;
      return {m, kind.d, SpikeParams(1, {s1}), gap};
    }
    case InstanceTag::kyfan: {
      if (kind.n == 0 || kind.s_count == 0)
        throw std::invalid_argument("kyfan: n and s_count required");
      const double rootn = std::sqrt(static_cast<double>(kind.n));
      if (static_cast<double>(kind.s_count) > 0.0789 * rootn &&
          !kind.allow_out_of_regime)
        throw std::invalid_argument(
            "kyfan: s_count > 0.0789*sqrt(n) is outside the proven regime "
            "(pass allow_out_of_regime to explore anyway)");
      const double s1 = 5.0 / rootn;
      GapPredicate gap;
      gap.norm = "kyfan";
      gap.s = kind.s_count;
      gap.null_max = 2.1 * static_cast<double>(kind.s_count) * rootn;
      gap.spiked_min = 2.4 * static_cast<double>(kind.s_count) * rootn;
      return {kind.n, kind.n,
              SpikeParams(kind.s_count,
                          std::vector<double>(kind.s_count, s1)),
              gap};
    }
  }
  throw std::invalid_argument("corollary_instance: unknown tag");
}

struct GapCheckResult {
  std::size_t trials;
  double null_rate;
  double spiked_rate;
  WilsonInterval null_ci;
  WilsonInterval spiked_ci;
  // schatten-p only: median ||X||_p^p ratio spiked/null.
  std::optional<double> median_ratio;
  // kyfan only: empirical Pr[||P||_1 >= 0.9 * s * n] for P = sum u_i v_i^T.
  std::optional<double> p_trace_rate;
};

// Monte Carlo check of a corollary's norm-gap event on both sides.
inline GapCheckResult gap_check(const InstanceKind& kind, std::size_t trials,
                                Rng rng, std::size_t threads = 1) {
  if (trials < 1) throw std::invalid_argument("gap_check: trials >= 1");
  const CorollaryInstance inst = corollary_instance(kind);
  std::vector<char> null_ok(trials, 0), spiked_ok(trials, 0), p_ok(trials, 0);
  std::vector<double> null_val(trials, 0.0), spiked_val(trials, 0.0);
  parallel_for(trials, threads, [&](std::size_t t) {
    Rng trial = rng.split(t);
    const DenseMatrix G =
        sample_gaussian(inst.m, inst.n, trial.split(0));
    const SpikedSample sp =
        sample_spiked(inst.m, inst.n, inst.spike, trial.split(1));
    null_val[t] = inst.gap.value(G);
    spiked_val[t] = inst.gap.value(sp.matrix);
    null_ok[t] = null_val[t] <= inst.gap.null_max ? 1 : 0;
    spiked_ok[t] = spiked_val[t] >= inst.gap.spiked_min ? 1 : 0;
    if (kind.tag == InstanceTag::kyfan) {
      // P = sum u_i v_i^T without the 5/sqrt(n) scaling.
      DenseMatrix P(inst.m, inst.n);
      for (std::size_t j = 0; j < inst.spike.r; ++j)
        for (std::size_t a = 0; a < inst.m; ++a)
          for (std::size_t b = 0; b < inst.n; ++b)
            P(a, b) += sp.u(a, j) * sp.v(b, j);
      const double p1 = schatten_norm(P, 1.0);
      p_ok[t] = p1 >= 0.9 * static_cast<double>(kind.s_count) *
                          static_cast<double>(inst.n)
                    ? 1
                    : 0;
    }
  });
  std::size_t nsucc = 0, ssucc = 0, psucc = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    nsucc += null_ok[t];
    ssucc += spiked_ok[t];
    psucc += p_ok[t];
  }
  GapCheckResult res;
  res.trials = trials;
  res.null_rate = static_cast<double>(nsucc) / static_cast<double>(trials);
  res.spiked_rate = static_cast<double>(ssucc) / static_cast<double>(trials);
  res.null_ci = wilson_interval(nsucc, trials);
  res.spiked_ci = wilson_interval(ssucc, trials);
  if (kind.tag == InstanceTag::schatten_p) {
    auto median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      const std::size_t n = v.size();
      return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    res.median_ratio = median(spiked_val) / median(null_val);
  }
  if (kind.tag == InstanceTag::kyfan)
    res.p_trace_rate =
        static_cast<double>(psucc) / static_cast<double>(trials);
  return res;
}

}  // namespace sketchlab
