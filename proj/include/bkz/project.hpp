#pragma once

// Bregman projection onto a hyperplane H(alpha, beta) = {x : <alpha, x> = beta}.
//
// The projection of the current iterate reduces to a one-dimensional convex
// problem in the dual stepsize t:
//
//   minimize  psi(t) = phi*(x* - t alpha) + beta t,
//
// whose optimality condition is psi'(t) = beta - <alpha, mirror(x* - t alpha)> = 0.
// psi' is nondecreasing, so each geometry admits a direct root solve:
//
//   Quadratic    closed form  t = (<alpha, x*> - beta) / ||alpha||^2
//   L1Quadratic  psi' is piecewise linear; sort its breakpoints and scan
//   Entropy      safeguarded Newton with a doubling bracket expansion
//
// When the hyperplane misses the domain of phi (or no root exists), project()
// falls back to the relaxed step t = sigma F / ||grad F||_*^2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bkz/dgf.hpp"
#include "bkz/errors.hpp"

namespace bkz {

struct Hyperplane {
  Eigen::VectorXd normal;
  double offset = 0.0;
};

enum class StepKind { Exact, Relaxed, Skipped };

struct StepOutcome {
  double t;
  StepKind kind;
  PrimalDualState next;
};

// Stopping tolerance for the entropy root solve, relative to the offset scale.
inline constexpr double kEntropyRootTol = 1e-12;
inline constexpr int kEntropyMaxIters = 200;
// Bracket expansion beyond this multiple of the natural step scale means the
// root lies at infinity (the hyperplane only touches the domain closure).
inline constexpr double kEntropyBracketLimit = 1e8;

inline double exact_step_quadratic(const Eigen::Ref<const Eigen::VectorXd>& x_star,
                                   const Hyperplane& h) {
  require(h.normal.size() == x_star.size(), "exact_step_quadratic: dimension mismatch");
  const double a2 = h.normal.squaredNorm();
  require(a2 > 0.0, "exact_step_quadratic: hyperplane normal is zero");
  return (h.normal.dot(x_star) - h.offset) / a2;
}

// Root of g(t) = beta - sum_j alpha_j S_lambda(x*_j - t alpha_j), which is
// nondecreasing and piecewise linear with kinks at (x*_j -+ lambda) / alpha_j.
// Both tails have slope ||alpha||^2 > 0, so a nonzero normal always yields a
// root; nullopt is only returned defensively if the arithmetic degenerates.
// On an exactly flat zero interval the endpoint of smallest |t| is returned.
inline std::optional<double> exact_step_l1quad(const DistanceGenerator& gen,
                                               const Eigen::Ref<const Eigen::VectorXd>& x_star,
                                               const Hyperplane& h) {
  require(gen.kind() == DistanceGenerator::Kind::L1Quadratic,
          "exact_step_l1quad: generator is not L1Quadratic");
  require(h.normal.size() == gen.dim() && x_star.size() == gen.dim(),
          "exact_step_l1quad: dimension mismatch");
  const double lambda = gen.lambda();
  const auto& a = h.normal;

  std::vector<double> bps;
  bps.reserve(2 * static_cast<std::size_t>(a.size()));
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    if (a[j] != 0.0) {
      bps.push_back((x_star[j] - lambda) / a[j]);
      bps.push_back((x_star[j] + lambda) / a[j]);
    }
  }
  require(!bps.empty(), "exact_step_l1quad: hyperplane normal is zero");
  std::sort(bps.begin(), bps.end());

  const auto g = [&](double t) {
    double acc = h.offset;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      if (a[j] != 0.0) acc -= a[j] * detail::soft_threshold(x_star[j] - t * a[j], lambda);
    }
    return acc;
  };

  // First breakpoint with g >= 0; g is nondecreasing so binary search applies.
  std::size_t lo = 0, hi = bps.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (g(bps[mid]) < 0.0) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }

  const double tail_slope = a.squaredNorm();
  double t;
  if (lo == bps.size()) {
    // Negative at every breakpoint: root on the right tail.
    t = bps.back() - g(bps.back()) / tail_slope;
  } else if (const double g_lo = g(bps[lo]); g_lo > 0.0) {
    if (lo == 0) {
      // Positive already at the first breakpoint: root on the left tail.
      t = bps.front() - g(bps.front()) / tail_slope;
    } else {
      const double tl = bps[lo - 1];
      const double gl = g(tl);
      const double slope = (g_lo - gl) / (bps[lo] - tl);
      t = tl - gl / slope;
    }
  } else {
    // g(bps[lo]) == 0. The zero set of g is [bps[lo], bps[last zero]]; pick
    // the endpoint of smallest magnitude.
    std::size_t zlo = lo, zhi = bps.size();
    while (zlo < zhi) {
      const std::size_t mid = zlo + (zhi - zlo) / 2;
      if (g(bps[mid]) <= 0.0) {
        zlo = mid + 1;
      } else {
        zhi = mid;
      }
    }
    const double t_first = bps[lo];
    const double t_last = bps[zlo - 1];
    t = std::abs(t_first) <= std::abs(t_last) ? t_first : t_last;
  }
  if (!std::isfinite(t)) return std::nullopt;
  return t;
}

namespace detail {

// Consecutive (offset, length) block ranges of an entropy-type generator.
inline std::vector<std::pair<Eigen::Index, Eigen::Index>> entropy_block_ranges(
    const DistanceGenerator& gen) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> ranges;
  if (gen.kind() == DistanceGenerator::Kind::SimplexEntropy) {
    ranges.emplace_back(0, gen.dim());
    return ranges;
  }
  require(gen.kind() == DistanceGenerator::Kind::SeparableBlocks,
          "entropy blocks: generator is not entropy-type");
  const auto& blocks = gen.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    require(blocks[b].kind() == DistanceGenerator::Kind::SimplexEntropy,
            "entropy blocks: non-entropy block");
    ranges.emplace_back(gen.block_offset(b), blocks[b].dim());
  }
  return ranges;
}

}  // namespace detail

// Safeguarded Newton on psi'(t) = beta - sum_b <alpha_b, softmax(x*_b - t alpha_b)>
// for the simplex-entropy geometry (single simplex or a block product).
// psi'' = sum_b Var_{softmax}(alpha_b) >= 0 supplies the Newton slope; a
// bisection bracket guards every update. Returns nullopt when the doubling
// expansion exceeds the bracket limit, i.e. the hyperplane admits no interior
// root and the caller should relax.
inline std::optional<double> exact_step_entropy(const DistanceGenerator& gen,
                                                const Eigen::Ref<const Eigen::VectorXd>& x_star,
                                                const Hyperplane& h) {
  require(h.normal.size() == gen.dim() && x_star.size() == gen.dim(),
          "exact_step_entropy: dimension mismatch");
  const auto ranges = detail::entropy_block_ranges(gen);
  const auto& a = h.normal;
  const double max_abs_alpha = a.lpNorm<Eigen::Infinity>();
  require(max_abs_alpha > 0.0, "exact_step_entropy: hyperplane normal is zero");

  // Blocks the normal does not touch contribute a constant zero to psi'.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> active;
  for (const auto& r : ranges) {
    if (a.segment(r.first, r.second).lpNorm<Eigen::Infinity>() > 0.0) active.push_back(r);
  }

  Eigen::VectorXd p(gen.dim());
  const auto eval = [&](double t, double& psi1, double& psi2) {
    psi1 = h.offset;
    psi2 = 0.0;
    for (const auto& r : active) {
      const auto ab = a.segment(r.first, r.second);
      auto pb = p.segment(r.first, r.second);
      detail::softmax_into(x_star.segment(r.first, r.second) - t * ab, pb);
      const double mean = ab.dot(pb);
      psi1 -= mean;
      psi2 += pb.dot(ab.cwiseProduct(ab)) - mean * mean;
    }
  };

  const double tol = kEntropyRootTol * (1.0 + std::abs(h.offset));
  const double t_limit =
      kEntropyBracketLimit * (1.0 + x_star.lpNorm<Eigen::Infinity>()) / max_abs_alpha;

  double f0, d0;
  eval(0.0, f0, d0);
  if (std::abs(f0) <= tol) return 0.0;

  // psi' is nondecreasing: a positive value means the root lies to the left.
  const bool root_left = f0 > 0.0;
  double prev_t = 0.0;
  double t = (root_left ? -1.0 : 1.0) / max_abs_alpha;
  double lo, hi;
  while (true) {
    if (std::abs(t) > t_limit) return std::nullopt;
    double f, d;
    eval(t, f, d);
    if (std::abs(f) <= tol) return t;
    if ((f > 0.0) != root_left) {
      lo = std::min(prev_t, t);
      hi = std::max(prev_t, t);
      break;
    }
    prev_t = t;
    t *= 2.0;
  }

  double cur = 0.5 * (lo + hi);
  for (int iter = 0; iter < kEntropyMaxIters; ++iter) {
    double f, d;
    eval(cur, f, d);
    if (std::abs(f) <= tol) return cur;
    if (f < 0.0) {
      lo = cur;
    } else {
      hi = cur;
    }
    double next = 0.5 * (lo + hi);
    if (d > 0.0) {
      const double newton = cur - f / d;
      if (newton > lo && newton < hi) next = newton;
    }
    if (next == cur) return cur;  // bracket exhausted at double precision
    cur = next;
  }
  return cur;
}

// Does the hyperplane meet the relative interior of dom phi? Full-space
// geometries always pass. Over the simplex <alpha, x> ranges in the open
// interval (min alpha, max alpha) (a point when alpha is constant), and block
// products sum these ranges.
inline bool feasibility_check(const DistanceGenerator& gen, const Hyperplane& h) {
  require(h.normal.size() == gen.dim(), "feasibility_check: dimension mismatch");
  const auto range_of = [](const DistanceGenerator& g,
                           const Eigen::Ref<const Eigen::VectorXd>& a,
                           double& lo, double& hi) {
    switch (g.kind()) {
      case DistanceGenerator::Kind::SimplexEntropy:
        lo = a.minCoeff();
        hi = a.maxCoeff();
        return;
      default:
        // Full-space block: any nonzero normal entry reaches every offset.
        if (a.lpNorm<Eigen::Infinity>() > 0.0) {
          lo = -kInfinity;
          hi = kInfinity;
        } else {
          lo = hi = 0.0;
        }
        return;
    }
  };

  double lo = 0.0, hi = 0.0;
  switch (gen.kind()) {
    case DistanceGenerator::Kind::Quadratic:
    case DistanceGenerator::Kind::L1Quadratic:
      return true;
    case DistanceGenerator::Kind::SimplexEntropy:
      range_of(gen, h.normal, lo, hi);
      break;
    case DistanceGenerator::Kind::SeparableBlocks: {
      const auto& blocks = gen.blocks();
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        double blo, bhi;
        range_of(blocks[b], h.normal.segment(gen.block_offset(b), blocks[b].dim()), blo, bhi);
        lo += blo;
        hi += bhi;
      }
      break;
    }
  }
  if (lo == hi) return h.offset == lo;
  return lo < h.offset && h.offset < hi;
}

// Relaxed dual step t = sigma F / ||grad||_*^2.
inline double relaxed_step(const DistanceGenerator& gen, double f_value,
                           const Eigen::Ref<const Eigen::VectorXd>& grad, double sigma) {
  require(grad.size() == gen.dim(), "relaxed_step: dimension mismatch");
  require(sigma > 0.0, "relaxed_step: sigma must be positive");
  const double dn = gen.dual_norm(grad);
  require(dn > 0.0, "relaxed_step: gradient is zero");
  return sigma * f_value / (dn * dn);
}

// Dispatch to the geometry's exact dual-step solver.
inline std::optional<double> exact_step(const DistanceGenerator& gen,
                                        const Eigen::Ref<const Eigen::VectorXd>& x_star,
                                        const Hyperplane& h) {
  switch (gen.kind()) {
    case DistanceGenerator::Kind::Quadratic:
      return exact_step_quadratic(x_star, h);
    case DistanceGenerator::Kind::L1Quadratic:
      return exact_step_l1quad(gen, x_star, h);
    case DistanceGenerator::Kind::SimplexEntropy:
      return exact_step_entropy(gen, x_star, h);
    case DistanceGenerator::Kind::SeparableBlocks: {
      bool all_entropy = true;
      bool all_quadratic = true;
      for (const auto& b : gen.blocks()) {
        all_entropy = all_entropy && b.kind() == DistanceGenerator::Kind::SimplexEntropy;
        all_quadratic = all_quadratic && b.kind() == DistanceGenerator::Kind::Quadratic;
      }
      if (all_entropy) return exact_step_entropy(gen, x_star, h);
      if (all_quadratic) return exact_step_quadratic(x_star, h);
      throw ContractViolation("exact_step: unsupported block composition");
    }
  }
  throw ContractViolation("exact_step: unknown generator kind");
}

// Step policy shared by project() and the solver: the exact step whenever
// the hyperplane meets the domain and the root solve succeeds, otherwise the
// relaxed step. f_value is F_i at the current iterate and feeds only the
// fallback.
inline std::pair<double, StepKind> choose_step(
    const DistanceGenerator& gen, const Eigen::Ref<const Eigen::VectorXd>& x_star,
    const Hyperplane& h, double f_value, double sigma) {
  require(h.normal.size() == gen.dim(), "choose_step: dimension mismatch");
  require(h.normal.lpNorm<Eigen::Infinity>() > 0.0,
          "choose_step: hyperplane normal is zero");

  std::optional<double> t;
  if (feasibility_check(gen, h)) t = exact_step(gen, x_star, h);
  if (t.has_value()) return {*t, StepKind::Exact};
  return {relaxed_step(gen, f_value, h.normal, sigma), StepKind::Relaxed};
}

// Bregman projection with relaxed fallback.
inline StepOutcome project(const DistanceGenerator& gen, const PrimalDualState& state,
                           const Hyperplane& h, double f_value, double sigma) {
  const auto [tv, kind] = choose_step(gen, state.x_star(), h, f_value, sigma);
  Eigen::VectorXd xs = state.x_star() - tv * h.normal;
  return StepOutcome{tv, kind, PrimalDualState(gen, std::move(xs))};
}

}  // namespace bkz
