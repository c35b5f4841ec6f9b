#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bkz/dgf.hpp"
#include "bkz/project.hpp"
#include "bkz/rng.hpp"
#include "support/oracles.hpp"

using bkz::DistanceGenerator;
using bkz::Hyperplane;
using bkz::PrimalDualState;
using bkz::Rng;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("golden section agrees with closed-form quadratic steps") {
  const auto gen = DistanceGenerator::quadratic(3);
  Rng rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const VectorXd xs = 2.0 * rng.normal_vector(3);
    const VectorXd alpha = rng.normal_vector(3);
    if (alpha.norm() < 0.3) continue;
    const Hyperplane h{alpha, rng.uniform(-2.0, 2.0)};
    const double t_exact = bkz::exact_step_quadratic(xs, h);
    const double t_gs = bkz::oracles::golden_section_dual(gen, xs, h, -50.0, 50.0);
    REQUIRE(std::abs(t_gs - t_exact) <= 1e-6);
  }
}

TEST_CASE("golden section agrees with the soft-threshold solver") {
  const auto gen = DistanceGenerator::l1_quadratic(4, 0.9);
  Rng rng(52);
  for (int trial = 0; trial < 100; ++trial) {
    const VectorXd xs = 2.0 * rng.normal_vector(4);
    const VectorXd alpha = rng.normal_vector(4);
    if (alpha.norm() < 0.3) continue;
    const Hyperplane h{alpha, rng.uniform(-2.0, 2.0)};
    const auto t_exact = bkz::exact_step_l1quad(gen, xs, h);
    REQUIRE(t_exact.has_value());
    const double t_gs = bkz::oracles::golden_section_dual(gen, xs, h, -80.0, 80.0);
    REQUIRE(std::abs(t_gs - *t_exact) <= 1e-6);
  }
}

TEST_CASE("golden section agrees with the entropy newton solver") {
  const auto gen = DistanceGenerator::simplex_entropy(5);
  Rng rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    const VectorXd xs = rng.normal_vector(5);
    VectorXd alpha(5);
    for (int j = 0; j < 5; ++j) {
      const double mag = rng.uniform(0.5, 2.0);
      alpha[j] = (rng.uniform01() < 0.5 ? -mag : mag);
    }
    const double q = rng.uniform(0.2, 0.8);
    const Hyperplane h{alpha, alpha.minCoeff() + q * (alpha.maxCoeff() - alpha.minCoeff())};
    const auto t_exact = bkz::exact_step_entropy(gen, xs, h);
    REQUIRE(t_exact.has_value());
    const double t_gs = bkz::oracles::golden_section_dual(gen, xs, h, -60.0, 60.0);
    REQUIRE(std::abs(t_gs - *t_exact) <= 1e-6);
  }
}

TEST_CASE("golden section agrees on entropy block products") {
  std::vector<DistanceGenerator> blocks;
  blocks.push_back(DistanceGenerator::simplex_entropy(2));
  blocks.push_back(DistanceGenerator::simplex_entropy(2));
  const auto gen = DistanceGenerator::separable_blocks(std::move(blocks));
  const Hyperplane h{vec({1, 0, 1, 0}), 1.6};
  const auto t_exact = bkz::exact_step_entropy(gen, VectorXd::Zero(4), h);
  REQUIRE(t_exact.has_value());
  CHECK(*t_exact == Catch::Approx(-std::log(4.0)).margin(1e-10));
  const double t_gs =
      bkz::oracles::golden_section_dual(gen, VectorXd::Zero(4), h, -40.0, 40.0);
  CHECK(std::abs(t_gs - *t_exact) <= 1e-6);
}

TEST_CASE("golden section rejects brackets that miss the minimizer") {
  const auto gen = DistanceGenerator::quadratic(1);
  CHECK_THROWS_AS(
      bkz::oracles::golden_section_dual(gen, vec({0}), {vec({1}), 10.0}, 0.0, 1.0),
      bkz::ContractViolation);
}

TEST_CASE("grid oracle confirms projections are distance minimizers") {
  SECTION("euclidean plane, two dimensions") {
    const auto gen = DistanceGenerator::quadratic(2);
    Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
      const VectorXd xs = 2.0 * rng.normal_vector(2);
      VectorXd alpha = rng.normal_vector(2);
      if (alpha.norm() < 0.3) continue;
      const Hyperplane h{alpha, rng.uniform(-2.0, 2.0)};
      const PrimalDualState state(gen, xs);
      const double f_value = alpha.dot(state.x()) - h.offset;
      const auto out = bkz::project(gen, state, h, f_value, 1.0);
      const double d_prod = bkz::bregman_distance(gen, state, out.next.x());
      const auto grid = bkz::oracles::grid_projection(gen, xs, h, 4001);
      REQUIRE(d_prod <= grid.best_distance + 1e-8);
      REQUIRE(std::abs(d_prod - grid.best_distance) <= 1e-3);
    }
  }

  SECTION("soft-threshold geometry, three dimensions") {
    const auto gen = DistanceGenerator::l1_quadratic(3, 0.8);
    Rng rng(62);
    for (int trial = 0; trial < 6; ++trial) {
      const VectorXd xs = 1.5 * rng.normal_vector(3);
      VectorXd alpha = rng.normal_vector(3);
      if (alpha.norm() < 0.3) continue;
      const Hyperplane h{alpha, rng.uniform(-1.5, 1.5)};
      const PrimalDualState state(gen, xs);
      const double f_value = alpha.dot(state.x()) - h.offset;
      const auto out = bkz::project(gen, state, h, f_value, 1.0);
      const double d_prod = bkz::bregman_distance(gen, state, out.next.x());
      const auto grid = bkz::oracles::grid_projection(gen, xs, h, 801);
      REQUIRE(d_prod <= grid.best_distance + 1e-8);
    }
  }

  SECTION("entropy simplex, three dimensions") {
    const auto gen = DistanceGenerator::simplex_entropy(3);
    Rng rng(63);
    for (int trial = 0; trial < 20; ++trial) {
      const VectorXd xs = rng.normal_vector(3);
      VectorXd alpha(3);
      for (int j = 0; j < 3; ++j) {
        const double mag = rng.uniform(0.5, 2.0);
        alpha[j] = (rng.uniform01() < 0.5 ? -mag : mag);
      }
      const double q = rng.uniform(0.3, 0.7);
      const Hyperplane h{alpha, alpha.minCoeff() + q * (alpha.maxCoeff() - alpha.minCoeff())};
      const PrimalDualState state(gen, xs);
      const double f_value = alpha.dot(state.x()) - h.offset;
      const auto out = bkz::project(gen, state, h, f_value, 1.0);
      REQUIRE(out.kind == bkz::StepKind::Exact);
      const double d_prod = bkz::bregman_distance(gen, state, out.next.x());
      const auto grid = bkz::oracles::grid_projection(gen, xs, h, 20001);
      REQUIRE(d_prod <= grid.best_distance + 1e-8);
      REQUIRE(std::abs(d_prod - grid.best_distance) <= 1e-5);
    }
  }
}

TEST_CASE("grid oracle reports empty intersections") {
  const auto gen = DistanceGenerator::simplex_entropy(2);
  CHECK_THROWS_AS(bkz::oracles::grid_projection(gen, vec({0, 0}), {vec({1, 0}), 2.0}, 101),
                  bkz::oracles::EmptySetError);
}
