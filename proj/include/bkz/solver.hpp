#pragma once

// The row-action iteration: sample a component equation, linearize it at the
// current iterate, and move the dual variable onto (or toward) the induced
// hyperplane
//
//   H_k = { x : <grad F_i(x_k), x> = beta_k },
//   beta_k = <grad F_i(x_k), x_k> - F_i(x_k),
//
// via either the exact Bregman projection with relaxed fallback or the
// relaxed step alone. Four named methods arise from crossing the two index
// samplers of interest with the two step rules; a deterministic max-residual
// sampler exists behind a flag.
//
// Loop contract:
//   * the stopping check uses the residual computed at the end of the
//     previous iteration (no extra F evaluation),
//   * F_i(x_k) is read from that residual (residual = -F),
//   * iterations whose component value or gradient is exactly zero are
//     recorded as Skipped, consume the iteration count, and leave the state
//     bit-identical,
//   * after any skip, the loop scans for a row that could still make
//     progress (nonzero residual component with a nonzero gradient) and
//     stops with StalledZeroResidualRow when none exists,
//   * the full residual is recomputed from scratch every iteration, for all
//     problem kinds, keeping methods cost-comparable,
//   * LSD steps assemble the hyperplane and update the state in the reduced
//     coordinates of the <= 2 touched columns; the mirror map is reapplied
//     only on those blocks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bkz/dgf.hpp"
#include "bkz/errors.hpp"
#include "bkz/problems.hpp"
#include "bkz/project.hpp"
#include "bkz/rng.hpp"

namespace bkz {

enum class SamplerKind { Uniform, GreedyResidualWeighted, MaxResidual };
enum class StepRule { ExactWithFallback, RelaxedAlways };
enum class Method { NBK, rNBK, GRNBK, rGRNBK };
enum class SolveStatus { Converged, MaxIters, StalledZeroResidualRow };

// Row vocabulary for traces: the three step kinds plus the terminal marker
// row that snapshots the state after the last iteration.
enum class TraceKind { Exact, Relaxed, Skipped, Final };

inline const char* sampler_name(SamplerKind s) {
  switch (s) {
    case SamplerKind::Uniform: return "uniform";
    case SamplerKind::GreedyResidualWeighted: return "greedy";
    case SamplerKind::MaxResidual: return "max_residual";
  }
  return "?";
}

inline const char* method_name(Method m) {
  switch (m) {
    case Method::NBK: return "NBK";
    case Method::rNBK: return "rNBK";
    case Method::GRNBK: return "GRNBK";
    case Method::rGRNBK: return "rGRNBK";
  }
  return "?";
}

inline std::optional<Method> method_from_name(const std::string& name) {
  if (name == "NBK") return Method::NBK;
  if (name == "rNBK") return Method::rNBK;
  if (name == "GRNBK") return Method::GRNBK;
  if (name == "rGRNBK") return Method::rGRNBK;
  return std::nullopt;
}

inline SamplerKind method_sampler(Method m) {
  return (m == Method::NBK || m == Method::rNBK)
             ? SamplerKind::Uniform
             : SamplerKind::GreedyResidualWeighted;
}

inline StepRule method_step_rule(Method m) {
  return (m == Method::NBK || m == Method::GRNBK) ? StepRule::ExactWithFallback
                                                  : StepRule::RelaxedAlways;
}

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIters: return "MaxIters";
    case SolveStatus::StalledZeroResidualRow: return "StalledZeroResidualRow";
  }
  return "?";
}

inline const char* trace_kind_name(TraceKind k) {
  switch (k) {
    case TraceKind::Exact: return "Exact";
    case TraceKind::Relaxed: return "Relaxed";
    case TraceKind::Skipped: return "Skipped";
    case TraceKind::Final: return "Final";
  }
  return "?";
}

struct SolverConfig {
  SamplerKind sampler = SamplerKind::GreedyResidualWeighted;
  StepRule step_rule = StepRule::ExactWithFallback;
  double sigma = 1.0;
  long max_iters = 1000;
  double residual_tol = 1e-9;
  std::uint64_t seed = 0;
  long trace_every = 1;           // record iteration k when k % trace_every == 0
  bool record_descent_terms = false;  // per-step F^2/||grad||_*^2 (audit support)

  static SolverConfig for_method(Method m) {
    SolverConfig cfg;
    cfg.sampler = method_sampler(m);
    cfg.step_rule = method_step_rule(m);
    return cfg;
  }
};

struct IterationRow {
  long k = 0;
  long index = -1;  // chosen component; -1 on the terminal row
  double residual_norm = 0.0;
  double error_norm = std::numeric_limits<double>::quiet_NaN();
  double bregman_dist = std::numeric_limits<double>::quiet_NaN();
  TraceKind kind = TraceKind::Final;
  double stepsize = 0.0;
  double descent_term = std::numeric_limits<double>::quiet_NaN();
};

struct RunRecord {
  std::vector<IterationRow> rows;
  SolveStatus status = SolveStatus::MaxIters;
  long total_iterations = 0;
  double wall_seconds = 0.0;
};

// Fired once per iteration (after the state update) for verification hooks;
// unaffected by trace thinning.
struct StepEvent {
  long k;
  long index;
  TraceKind kind;
  double stepsize;
  double f_value;
  double beta;
  const Eigen::VectorXd& normal;
  const PrimalDualState& before;
  const PrimalDualState& after;
};

using StepObserver = std::function<void(const StepEvent&)>;

struct SolveResult {
  PrimalDualState final_state;
  RunRecord record;
};

// One index draw per call: Uniform and GreedyResidualWeighted consume exactly
// one variate; MaxResidual is deterministic and consumes none.
inline Eigen::Index sample_index(SamplerKind kind, const Eigen::VectorXd& residual,
                                 Rng& rng) {
  const Eigen::Index n = residual.size();
  require(n >= 1, "sample_index: empty residual");
  switch (kind) {
    case SamplerKind::Uniform:
      return static_cast<Eigen::Index>(
          rng.uniform_index(static_cast<std::size_t>(n)));
    case SamplerKind::GreedyResidualWeighted: {
      const double total = residual.squaredNorm();
      require(total > 0.0, "sample_index: zero residual under a greedy sampler");
      const double target = rng.uniform01() * total;
      double cum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += residual[i] * residual[i];
        if (cum > target) return i;
      }
      // Rounding pushed the cumulative sum fractionally below the total;
      // return the last component with nonzero weight.
      for (Eigen::Index i = n - 1; i >= 0; --i) {
        if (residual[i] != 0.0) return i;
      }
      return n - 1;
    }
    case SamplerKind::MaxResidual: {
      require(residual.cwiseAbs().maxCoeff() > 0.0,
              "sample_index: zero residual under a greedy sampler");
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < n; ++i) {
        if (std::abs(residual[i]) > std::abs(residual[best])) best = i;
      }
      return best;
    }
  }
  throw ContractViolation("sample_index: unknown sampler");
}

namespace detail {

inline bool geometry_matches(const Problem& p, const DistanceGenerator& gen) {
  if (gen.dim() != p.dim()) return false;
  switch (p.kind()) {
    case ProblemKind::QuadraticSystem:
      return gen.kind() == DistanceGenerator::Kind::Quadratic ||
             gen.kind() == DistanceGenerator::Kind::L1Quadratic;
    case ProblemKind::LinearSimplexSystem:
      return gen.kind() == DistanceGenerator::Kind::SimplexEntropy;
    case ProblemKind::LSDProblem: {
      if (gen.kind() != DistanceGenerator::Kind::SeparableBlocks) return false;
      if (static_cast<Eigen::Index>(gen.blocks().size()) != p.lsd_cols()) {
        return false;
      }
      for (const auto& b : gen.blocks()) {
        if (b.kind() != DistanceGenerator::Kind::SimplexEntropy ||
            b.dim() != p.lsd_rows()) {
          return false;
        }
      }
      return true;
    }
  }
  return false;
}

}  // namespace detail

inline SolveResult solve(const Problem& p, const DistanceGenerator& gen,
                         const Eigen::VectorXd& x0_star, const SolverConfig& cfg,
                         const StepObserver& observer = {}) {
  require(detail::geometry_matches(p, gen),
          "solve: distance generator does not match the problem's constraint set");
  require(x0_star.size() == p.dim(), "solve: initial dual point has wrong size");
  require(cfg.sigma > 0.0, "solve: sigma must be positive");
  require(cfg.max_iters >= 1, "solve: max_iters must be positive");
  require(cfg.residual_tol > 0.0, "solve: residual_tol must be positive");
  require(cfg.trace_every >= 1, "solve: trace_every must be positive");

  const auto t_begin = std::chrono::steady_clock::now();
  const Eigen::Index n = p.num_equations();
  const Eigen::Index d = p.dim();
  const bool reduced_lsd = p.kind() == ProblemKind::LSDProblem;
  const std::optional<Eigen::VectorXd>& root = p.known_solution();

  PrimalDualState state(gen, x0_star);
  Eigen::VectorXd r(n);
  p.residual_into(state.x(), r);
  Eigen::VectorXd g(d);
  Eigen::VectorXd scan_grad(d);
  Rng rng = Rng::for_stream(cfg.seed, StreamTag::Sampling);

  RunRecord record;
  record.rows.reserve(static_cast<std::size_t>(
      std::min(cfg.max_iters / cfg.trace_every + 2, long{1} << 20)));

  const auto push_row = [&](long k, long index, double rnorm, TraceKind kind,
                            double stepsize, double descent_term) {
    IterationRow row;
    row.k = k;
    row.index = index;
    row.residual_norm = rnorm;
    if (root.has_value()) {
      row.error_norm = (state.x() - *root).norm();
      row.bregman_dist = bregman_distance(gen, state, *root);
    }
    row.kind = kind;
    row.stepsize = stepsize;
    row.descent_term = descent_term;
    record.rows.push_back(row);
  };

  // True while some component could still move the iterate: a nonzero
  // residual entry whose gradient is not identically zero.
  const auto progress_possible = [&]() {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (r[j] == 0.0) continue;
      p.grad_into(j, state.x(), scan_grad);
      if (!scan_grad.isZero(0.0)) return true;
    }
    return false;
  };

  long k = 0;
  for (;; ++k) {
    const double rnorm = r.norm();
    if (rnorm <= cfg.residual_tol) {
      record.status = SolveStatus::Converged;
      break;
    }
    if (k >= cfg.max_iters) {
      record.status = SolveStatus::MaxIters;
      break;
    }

    const Eigen::Index i = sample_index(cfg.sampler, r, rng);
    const double f_i = -r[i];
    p.grad_into(i, state.x(), g);
    const bool zero_grad = g.isZero(0.0);

    if (f_i == 0.0 || zero_grad) {
      if (k % cfg.trace_every == 0) {
        push_row(k, i, rnorm, TraceKind::Skipped, 0.0,
                 std::numeric_limits<double>::quiet_NaN());
      }
      if (observer) {
        observer(StepEvent{k, i, TraceKind::Skipped, 0.0, f_i, 0.0, g, state,
                           state});
      }
      if (!progress_possible()) {
        record.status = SolveStatus::StalledZeroResidualRow;
        ++k;
        break;
      }
      continue;
    }

    const double beta = g.dot(state.x()) - f_i;
    const Hyperplane h{g, beta};

    double t = 0.0;
    StepKind sk = StepKind::Relaxed;
    if (cfg.step_rule == StepRule::RelaxedAlways) {
      t = relaxed_step(gen, f_i, g, cfg.sigma);
    } else {
      std::tie(t, sk) = choose_step(gen, state.x_star(), h, f_i, cfg.sigma);
    }
    const TraceKind kind =
        (cfg.step_rule == StepRule::ExactWithFallback && sk == StepKind::Exact)
            ? TraceKind::Exact
            : TraceKind::Relaxed;

    PrimalDualState next = [&]() {
      if (reduced_lsd) {
        // Only the two touched columns change; reapply the mirror map there.
        const auto [ci, cj] = p.equation_pair(i);
        const Eigen::Index rows = p.lsd_rows();
        Eigen::VectorXd xs = state.x_star();
        Eigen::VectorXd x = state.x();
        xs.segment(ci * rows, rows) -= t * g.segment(ci * rows, rows);
        detail::softmax_into(xs.segment(ci * rows, rows),
                             x.segment(ci * rows, rows));
        if (cj != ci) {
          xs.segment(cj * rows, rows) -= t * g.segment(cj * rows, rows);
          detail::softmax_into(xs.segment(cj * rows, rows),
                               x.segment(cj * rows, rows));
        }
        return PrimalDualState::trusted(std::move(x), std::move(xs));
      }
      return PrimalDualState(gen, state.x_star() - t * g);
    }();

    double descent_term = std::numeric_limits<double>::quiet_NaN();
    if (cfg.record_descent_terms) {
      const double dn = gen.dual_norm(g);
      descent_term = (f_i * f_i) / (dn * dn);
    }
    if (k % cfg.trace_every == 0) {
      push_row(k, i, rnorm, kind, t, descent_term);
    }
    if (observer) {
      observer(StepEvent{k, i, kind, t, f_i, beta, g, state, next});
    }

    state = std::move(next);
    p.residual_into(state.x(), r);
  }

  record.total_iterations = k;
  push_row(k, -1, r.norm(), TraceKind::Final, 0.0,
           std::numeric_limits<double>::quiet_NaN());
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin)
          .count();
  return SolveResult{std::move(state), std::move(record)};
}

}  // namespace bkz
