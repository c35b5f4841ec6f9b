#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bkz/generators.hpp"
#include "bkz/solver.hpp"

using bkz::DistanceGenerator;
using bkz::Method;
using bkz::Problem;
using bkz::Rng;
using bkz::SamplerKind;
using bkz::SolverConfig;
using bkz::SolveStatus;
using bkz::StepRule;
using bkz::TraceKind;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Consistent unconstrained linear system dressed as the quadratic kind
// (A = 0), with a planted root. Pairs with the full-space generators.
Problem gaussian_linear(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<MatrixXd> a(static_cast<std::size_t>(n), MatrixXd::Zero(d, d));
  std::vector<VectorXd> b;
  b.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) b.push_back(rng.normal_vector(d));
  const VectorXd root = rng.normal_vector(d);
  VectorXd c(n);
  for (Eigen::Index i = 0; i < n; ++i) c[i] = -b[static_cast<std::size_t>(i)].dot(root);
  return Problem::quadratic_system(std::move(a), std::move(b), std::move(c), root);
}

DistanceGenerator lsd_geometry(const Problem& p) {
  std::vector<DistanceGenerator> blocks;
  for (Eigen::Index j = 0; j < p.lsd_cols(); ++j) {
    blocks.push_back(DistanceGenerator::simplex_entropy(p.lsd_rows()));
  }
  return DistanceGenerator::separable_blocks(std::move(blocks));
}

}  // namespace

TEST_CASE("method matrix") {
  CHECK(bkz::method_sampler(Method::NBK) == SamplerKind::Uniform);
  CHECK(bkz::method_sampler(Method::rNBK) == SamplerKind::Uniform);
  CHECK(bkz::method_sampler(Method::GRNBK) == SamplerKind::GreedyResidualWeighted);
  CHECK(bkz::method_sampler(Method::rGRNBK) == SamplerKind::GreedyResidualWeighted);
  CHECK(bkz::method_step_rule(Method::NBK) == StepRule::ExactWithFallback);
  CHECK(bkz::method_step_rule(Method::GRNBK) == StepRule::ExactWithFallback);
  CHECK(bkz::method_step_rule(Method::rNBK) == StepRule::RelaxedAlways);
  CHECK(bkz::method_step_rule(Method::rGRNBK) == StepRule::RelaxedAlways);
  for (auto m : {Method::NBK, Method::rNBK, Method::GRNBK, Method::rGRNBK}) {
    CHECK(bkz::method_from_name(bkz::method_name(m)) == m);
  }
  CHECK_FALSE(bkz::method_from_name("bogus").has_value());
}

TEST_CASE("index sampling") {
  Rng rng(1001);

  SECTION("greedy law on a frozen residual") {
    const VectorXd r = vec({3, 4});
    long count0 = 0;
    const long draws = 100000;
    for (long t = 0; t < draws; ++t) {
      const auto i = bkz::sample_index(SamplerKind::GreedyResidualWeighted, r, rng);
      if (i == 0) ++count0;
    }
    const double f0 = static_cast<double>(count0) / static_cast<double>(draws);
    CHECK(std::abs(f0 - 0.36) <= 0.01);
    CHECK(std::abs((1.0 - f0) - 0.64) <= 0.01);
  }

  SECTION("zero-weight components are never drawn") {
    const VectorXd r = vec({0, 5});
    for (int t = 0; t < 1000; ++t) {
      CHECK(bkz::sample_index(SamplerKind::GreedyResidualWeighted, r, rng) == 1);
    }
  }

  SECTION("max-residual ties break to the smallest index") {
    CHECK(bkz::sample_index(SamplerKind::MaxResidual, vec({2, -2}), rng) == 0);
    CHECK(bkz::sample_index(SamplerKind::MaxResidual, vec({1, -5, 3}), rng) == 1);
    CHECK(bkz::sample_index(SamplerKind::MaxResidual, vec({1, -5, 5, -5}), rng) == 1);
  }

  SECTION("uniform covers all components") {
    const VectorXd r = vec({1, 1, 1, 1});
    std::vector<long> counts(4, 0);
    for (long t = 0; t < 100000; ++t) {
      ++counts[static_cast<std::size_t>(
          bkz::sample_index(SamplerKind::Uniform, r, rng))];
    }
    for (long c : counts) {
      CHECK(std::abs(c / 100000.0 - 0.25) <= 0.02);
    }
  }

  SECTION("greedy samplers refuse a zero residual") {
    const VectorXd r = VectorXd::Zero(3);
    CHECK_THROWS_AS(bkz::sample_index(SamplerKind::GreedyResidualWeighted, r, rng),
                    bkz::ContractViolation);
    CHECK_THROWS_AS(bkz::sample_index(SamplerKind::MaxResidual, r, rng),
                    bkz::ContractViolation);
  }
}

TEST_CASE("solver on a simplex-constrained linear system") {
  const auto p = bkz::gen_linear_simplex(30, 20, bkz::EntryDist::StdNormal, 2024);
  const auto gen = DistanceGenerator::simplex_entropy(20);
  const VectorXd x0_star = VectorXd::Zero(20);
  const double r0 = p.residual(gen.mirror(x0_star)).norm();

  SolverConfig cfg = SolverConfig::for_method(Method::GRNBK);
  cfg.residual_tol = 1e-9 * r0;
  cfg.max_iters = 20000;
  cfg.seed = 5;

  SECTION("converges and the trace is well formed") {
    const auto res = bkz::solve(p, gen, x0_star, cfg);
    REQUIRE(res.record.status == SolveStatus::Converged);
    REQUIRE_FALSE(res.record.rows.empty());
    const auto& rows = res.record.rows;
    CHECK(rows.front().k == 0);
    for (std::size_t j = 1; j < rows.size(); ++j) {
      CHECK(rows[j].k > rows[j - 1].k);
    }
    const auto& last = rows.back();
    CHECK(last.kind == TraceKind::Final);
    CHECK(last.index == -1);
    CHECK(last.stepsize == 0.0);
    CHECK(last.residual_norm <= cfg.residual_tol);
    CHECK(last.k == res.record.total_iterations);
    CHECK(res.record.total_iterations < cfg.max_iters);
    CHECK(res.record.wall_seconds >= 0.0);

    // Terminal state agrees with the residual recomputed from scratch.
    CHECK(p.residual(res.final_state.x()).norm() <= cfg.residual_tol);
  }

  SECTION("iterates stay on the simplex and the pair stays coherent") {
    long events = 0;
    const auto res = bkz::solve(p, gen, x0_star, cfg, [&](const bkz::StepEvent& e) {
      ++events;
      const auto& x = e.after.x();
      REQUIRE(x.minCoeff() >= 0.0);
      REQUIRE(std::abs(x.sum() - 1.0) <= 1e-12);
      REQUIRE((x - gen.mirror(e.after.x_star())).isZero(0.0));
    });
    CHECK(events == res.record.total_iterations);
  }

  SECTION("bregman distance to the root never increases") {
    const auto res = bkz::solve(p, gen, x0_star, cfg);
    const auto& rows = res.record.rows;
    for (std::size_t j = 1; j < rows.size(); ++j) {
      REQUIRE(rows[j].bregman_dist - rows[j - 1].bregman_dist <=
              1e-12 * (1.0 + std::abs(rows[j].bregman_dist)));
    }
  }

  SECTION("relaxed variant also descends monotonically") {
    SolverConfig rcfg = SolverConfig::for_method(Method::rGRNBK);
    rcfg.residual_tol = cfg.residual_tol;
    rcfg.max_iters = cfg.max_iters;
    rcfg.seed = 6;
    const auto res = bkz::solve(p, gen, x0_star, rcfg);
    const auto& rows = res.record.rows;
    for (std::size_t j = 1; j < rows.size(); ++j) {
      REQUIRE(rows[j].bregman_dist - rows[j - 1].bregman_dist <=
              1e-12 * (1.0 + std::abs(rows[j].bregman_dist)));
      if (rows[j].kind != TraceKind::Final) {
        CHECK(rows[j].kind == TraceKind::Relaxed);
      }
    }
  }

  SECTION("identical configuration reproduces the run bit for bit") {
    const auto a = bkz::solve(p, gen, x0_star, cfg);
    const auto b = bkz::solve(p, gen, x0_star, cfg);
    REQUIRE(a.record.rows.size() == b.record.rows.size());
    for (std::size_t j = 0; j < a.record.rows.size(); ++j) {
      CHECK(a.record.rows[j].index == b.record.rows[j].index);
      CHECK(a.record.rows[j].residual_norm == b.record.rows[j].residual_norm);
      CHECK(a.record.rows[j].stepsize == b.record.rows[j].stepsize);
    }
    CHECK(a.final_state.x_star() == b.final_state.x_star());
  }

  SECTION("trace thinning keeps every tenth row plus the terminal row") {
    SolverConfig tcfg = cfg;
    tcfg.trace_every = 10;
    const auto res = bkz::solve(p, gen, x0_star, tcfg);
    const auto& rows = res.record.rows;
    for (std::size_t j = 0; j + 1 < rows.size(); ++j) {
      CHECK(rows[j].k % 10 == 0);
    }
    CHECK(rows.back().kind == TraceKind::Final);
  }
}

TEST_CASE("exact steps land on the sampled hyperplane") {
  const auto p = gaussian_linear(20, 10, 77);
  const auto gen = DistanceGenerator::quadratic(10);
  SolverConfig cfg = SolverConfig::for_method(Method::GRNBK);
  cfg.residual_tol = 1e-9;
  cfg.max_iters = 5000;
  cfg.seed = 9;

  long exact_steps = 0;
  const auto res = bkz::solve(p, gen, VectorXd::Zero(10), cfg,
                              [&](const bkz::StepEvent& e) {
                                if (e.kind == TraceKind::Skipped) return;
                                REQUIRE(e.kind == TraceKind::Exact);
                                ++exact_steps;
                                const double gap =
                                    e.normal.dot(e.after.x()) - e.beta;
                                REQUIRE(std::abs(gap) <=
                                        1e-8 * (1.0 + std::abs(e.beta)));
                              });
  CHECK(res.record.status == SolveStatus::Converged);
  CHECK(exact_steps > 0);
}

TEST_CASE("skipped iterations leave the state untouched") {
  // Component 1 is dead: identically zero with a zero gradient. The others
  // form a solvable linear system.
  std::vector<MatrixXd> a(3, MatrixXd::Zero(2, 2));
  std::vector<VectorXd> b{vec({1, 0}), vec({0, 0}), vec({0, 1})};
  const auto p =
      Problem::quadratic_system(std::move(a), std::move(b), vec({-1, 0, -1}));
  const auto gen = DistanceGenerator::quadratic(2);

  // Find a seed whose first uniform draw lands on the dead component.
  std::uint64_t seed = 0;
  for (;; ++seed) {
    Rng probe = Rng::for_stream(seed, bkz::StreamTag::Sampling);
    if (probe.uniform_index(3) == 1) break;
    REQUIRE(seed < 10000);
  }

  SolverConfig cfg;
  cfg.sampler = SamplerKind::Uniform;
  cfg.step_rule = StepRule::ExactWithFallback;
  cfg.residual_tol = 1e-12;
  cfg.max_iters = 1000;
  cfg.seed = seed;

  const auto res = bkz::solve(p, gen, VectorXd::Zero(2), cfg);
  const auto& rows = res.record.rows;
  REQUIRE(rows.size() >= 3);
  CHECK(rows[0].kind == TraceKind::Skipped);
  CHECK(rows[0].index == 1);
  CHECK(rows[0].stepsize == 0.0);
  // The state did not move, so the recomputed residual norm is bit-identical.
  CHECK(rows[1].residual_norm == rows[0].residual_norm);
  CHECK(res.record.status == SolveStatus::Converged);
}

TEST_CASE("a system with no usable row stalls out") {
  std::vector<MatrixXd> a(2, MatrixXd::Zero(3, 3));
  std::vector<VectorXd> b(2, VectorXd::Zero(3));
  const auto p = Problem::quadratic_system(std::move(a), std::move(b), vec({1, 2}));
  const auto gen = DistanceGenerator::quadratic(3);
  SolverConfig cfg;
  cfg.sampler = SamplerKind::Uniform;
  cfg.residual_tol = 1e-9;
  cfg.max_iters = 50;
  const auto res = bkz::solve(p, gen, VectorXd::Zero(3), cfg);
  CHECK(res.record.status == SolveStatus::StalledZeroResidualRow);
  CHECK(res.record.total_iterations == 1);
  CHECK(res.record.rows.size() == 2);  // the skip and the terminal row
  CHECK(res.record.rows.back().kind == TraceKind::Final);
}

TEST_CASE("iteration budget exhaustion reports max-iters") {
  const auto p = bkz::gen_linear_simplex(10, 8, bkz::EntryDist::StdNormal, 3);
  const auto gen = DistanceGenerator::simplex_entropy(8);
  SolverConfig cfg = SolverConfig::for_method(Method::NBK);
  cfg.residual_tol = 1e-300;
  cfg.max_iters = 25;
  cfg.seed = 4;
  const auto res = bkz::solve(p, gen, VectorXd::Zero(8), cfg);
  CHECK(res.record.status == SolveStatus::MaxIters);
  CHECK(res.record.total_iterations == 25);
  CHECK(res.record.rows.back().k == 25);
}

TEST_CASE("lsd runs in reduced coordinates without drift") {
  const auto p = bkz::gen_lsd(12, 10, 1000);
  const auto gen = lsd_geometry(p);
  SolverConfig cfg = SolverConfig::for_method(Method::GRNBK);
  cfg.residual_tol = 1e-5;
  cfg.max_iters = 50000;
  cfg.seed = 1000;

  // A generic dual start: the centered point is a fixed point of the mirror
  // iteration for gram systems (every equation gradient is constant on each
  // touched block there) and cannot make progress.
  Rng init = Rng::for_stream(1000, bkz::StreamTag::InitialPoint);
  const auto res = bkz::solve(p, gen, init.normal_vector(p.dim()), cfg,
                              [&](const bkz::StepEvent& e) {
                                // The block-local update must agree exactly
                                // with a full mirror pass.
                                REQUIRE((e.after.x() -
                                         gen.mirror(e.after.x_star()))
                                            .isZero(0.0));
                              });
  CHECK(res.record.status == SolveStatus::Converged);

  // Every column block is a simplex point at the end.
  for (Eigen::Index j = 0; j < 10; ++j) {
    const auto col = res.final_state.x().segment(j * 12, 12);
    CHECK(col.minCoeff() >= 0.0);
    CHECK(std::abs(col.sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("the centered start is a fixed point of gram iterations") {
  const auto p = bkz::gen_lsd(4, 3, 505);
  const auto gen = lsd_geometry(p);
  SolverConfig cfg = SolverConfig::for_method(Method::GRNBK);
  cfg.residual_tol = 1e-6;
  cfg.max_iters = 500;
  cfg.seed = 11;
  const auto res = bkz::solve(p, gen, VectorXd::Zero(12), cfg);
  CHECK(res.record.status == SolveStatus::MaxIters);
  // The primal iterate never leaves the uniform product point, so the
  // residual norm is bit-identical across the whole trace.
  for (const auto& row : res.record.rows) {
    CHECK(row.residual_norm == res.record.rows.front().residual_norm);
  }
  CHECK((res.final_state.x().array() == 0.25).all());
}

TEST_CASE("descent terms are recorded on demand") {
  const auto p = bkz::gen_linear_simplex(12, 9, bkz::EntryDist::StdNormal, 6);
  const auto gen = DistanceGenerator::simplex_entropy(9);
  SolverConfig cfg = SolverConfig::for_method(Method::rGRNBK);
  cfg.residual_tol = 1e-8;
  cfg.max_iters = 5000;
  cfg.seed = 7;
  cfg.record_descent_terms = true;
  const auto res = bkz::solve(p, gen, VectorXd::Zero(9), cfg);
  for (const auto& row : res.record.rows) {
    if (row.kind == TraceKind::Relaxed || row.kind == TraceKind::Exact) {
      REQUIRE(std::isfinite(row.descent_term));
      REQUIRE(row.descent_term >= 0.0);
    }
  }
}

TEST_CASE("configuration violations are rejected before iterating") {
  const auto p = bkz::gen_linear_simplex(5, 4, bkz::EntryDist::StdNormal, 8);
  const auto entropy = DistanceGenerator::simplex_entropy(4);
  const auto wrong = DistanceGenerator::quadratic(4);
  SolverConfig cfg;

  CHECK_THROWS_AS(bkz::solve(p, wrong, VectorXd::Zero(4), cfg),
                  bkz::ContractViolation);
  CHECK_THROWS_AS(bkz::solve(p, entropy, VectorXd::Zero(5), cfg),
                  bkz::ContractViolation);

  SolverConfig bad = cfg;
  bad.sigma = 0.0;
  CHECK_THROWS_AS(bkz::solve(p, entropy, VectorXd::Zero(4), bad),
                  bkz::ContractViolation);
  bad = cfg;
  bad.residual_tol = 0.0;
  CHECK_THROWS_AS(bkz::solve(p, entropy, VectorXd::Zero(4), bad),
                  bkz::ContractViolation);
  bad = cfg;
  bad.trace_every = 0;
  CHECK_THROWS_AS(bkz::solve(p, entropy, VectorXd::Zero(4), bad),
                  bkz::ContractViolation);

  // Geometry with the right domain but the wrong block shape.
  const auto lsd = bkz::gen_lsd(3, 3, 9);
  std::vector<DistanceGenerator> blocks;
  blocks.push_back(DistanceGenerator::simplex_entropy(4));
  blocks.push_back(DistanceGenerator::simplex_entropy(5));
  const auto mis = DistanceGenerator::separable_blocks(std::move(blocks));
  CHECK_THROWS_AS(bkz::solve(lsd, mis, VectorXd::Zero(9), cfg),
                  bkz::ContractViolation);
}

TEST_CASE("sparse quadratic recovery runs under the soft-threshold geometry") {
  const auto p = bkz::gen_quadratic(24, 8, 2, 404);
  const auto gen = DistanceGenerator::l1_quadratic(8, 1.0);
  SolverConfig cfg = SolverConfig::for_method(Method::GRNBK);
  cfg.residual_tol = 1e-12;
  cfg.max_iters = 1000;
  cfg.seed = 12;
  Rng init = Rng::for_stream(12, bkz::StreamTag::InitialPoint);
  const auto res = bkz::solve(p, gen, init.normal_vector(8), cfg);
  CHECK((res.record.status == SolveStatus::Converged ||
         res.record.status == SolveStatus::MaxIters));
  CHECK(res.record.rows.back().kind == TraceKind::Final);
  for (const auto& row : res.record.rows) {
    REQUIRE(std::isfinite(row.residual_norm));
  }
}
