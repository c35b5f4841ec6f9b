#pragma once

// Seeded instance generators for the three problem families. Every generator
// derives its variates from Rng::for_stream(seed, StreamTag::Problem) in a
// fixed, documented draw order, so a (parameters, seed) pair identifies one
// bit-exact instance for the lifetime of the project:
//
//   quadratic:      support positions of the sparse root (partial
//                   Fisher-Yates over 0..d-1, s draws), then the s nonzero
//                   root values, then per equation i: the d*d entries of
//                   A^(i) row by row followed by the d entries of b^(i).
//                   Constants c^(i) are computed, not drawn, to make the
//                   root exact.
//   linear simplex: the n*d entries of A row by row, then the root on the
//                   simplex (d exponential variates, normalized).
//   lsd:            the columns of the root factor X, left to right, each a
//                   simplex-uniform draw of r exponentials.

#include <cstdint>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bkz/problems.hpp"
#include "bkz/rng.hpp"

namespace bkz {

enum class EntryDist { StdNormal, Unif01, Unif09_1 };

inline const char* entry_dist_name(EntryDist d) {
  switch (d) {
    case EntryDist::StdNormal: return "std_normal";
    case EntryDist::Unif01: return "unif01";
    case EntryDist::Unif09_1: return "unif09_1";
  }
  return "?";
}

// Multinomial quadratic system with a planted s-sparse root: F_i(x) =
// 1/2 <x, A^(i) x> + <b^(i), x> + c^(i) with standard normal data and
// c^(i) = -(1/2 <root, A^(i) root> + <b^(i), root>), evaluated through the
// same code path as F itself so the root's residual is exactly zero.
inline Problem gen_quadratic(Eigen::Index n, Eigen::Index d, Eigen::Index s,
                             std::uint64_t seed) {
  require(n >= 1 && d >= 1, "gen_quadratic: n versus d must be positive");
  require(s >= 1 && s <= d, "gen_quadratic: sparsity must satisfy 1 <= s <= d");
  Rng rng = Rng::for_stream(seed, StreamTag::Problem);

  std::vector<Eigen::Index> positions(static_cast<std::size_t>(d));
  std::iota(positions.begin(), positions.end(), Eigen::Index{0});
  for (Eigen::Index k = 0; k < s; ++k) {
    const auto j = k + static_cast<Eigen::Index>(rng.uniform_index(
                           static_cast<std::size_t>(d - k)));
    std::swap(positions[static_cast<std::size_t>(k)],
              positions[static_cast<std::size_t>(j)]);
  }
  Eigen::VectorXd root = Eigen::VectorXd::Zero(d);
  for (Eigen::Index k = 0; k < s; ++k) {
    root[positions[static_cast<std::size_t>(k)]] = rng.normal();
  }

  std::vector<Eigen::MatrixXd> a_list;
  std::vector<Eigen::VectorXd> b_list;
  a_list.reserve(static_cast<std::size_t>(n));
  b_list.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::MatrixXd a(d, d);
    for (Eigen::Index row = 0; row < d; ++row) {
      for (Eigen::Index col = 0; col < d; ++col) {
        a(row, col) = rng.normal();
      }
    }
    a_list.push_back(std::move(a));
    b_list.push_back(rng.normal_vector(d));
  }

  Problem uncalibrated = Problem::quadratic_system(a_list, b_list,
                                                   Eigen::VectorXd::Zero(n));
  Eigen::VectorXd c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c[i] = -uncalibrated.quad_core(i, root);
  }
  return Problem::quadratic_system(std::move(a_list), std::move(b_list),
                                   std::move(c), std::move(root));
}

// Linear system A x = b restricted to the probability simplex, consistent by
// construction: b = A root with root drawn uniformly on the simplex.
inline Problem gen_linear_simplex(Eigen::Index n, Eigen::Index d,
                                  EntryDist dist, std::uint64_t seed) {
  require(n >= 1 && d >= 1, "gen_linear_simplex: n and d must be positive");
  Rng rng = Rng::for_stream(seed, StreamTag::Problem);

  Eigen::MatrixXd a(n, d);
  for (Eigen::Index row = 0; row < n; ++row) {
    for (Eigen::Index col = 0; col < d; ++col) {
      switch (dist) {
        case EntryDist::StdNormal: a(row, col) = rng.normal(); break;
        case EntryDist::Unif01: a(row, col) = rng.uniform01(); break;
        case EntryDist::Unif09_1: a(row, col) = 0.9 + 0.1 * rng.uniform01(); break;
      }
    }
  }
  const Eigen::VectorXd root = rng.simplex_uniform(d);
  // Per-row dot products, matching the evaluation path exactly.
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b[i] = a.row(i).dot(root);
  }
  return Problem::linear_simplex(std::move(a), std::move(b), root);
}

// Left stochastic decomposition target A = X^T X with the columns of X drawn
// uniformly on the simplex. Entries of A are computed with the same column
// dot products the component evaluation uses, so X is an exact root.
inline Problem gen_lsd(Eigen::Index r, Eigen::Index m, std::uint64_t seed) {
  require(r >= 1 && m >= 1, "gen_lsd: r and m must be positive");
  Rng rng = Rng::for_stream(seed, StreamTag::Problem);

  Eigen::MatrixXd x(r, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    x.col(j) = rng.simplex_uniform(r);
  }
  Eigen::MatrixXd target(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      const double v = x.col(i).dot(x.col(j));
      target(i, j) = v;
      target(j, i) = v;
    }
  }
  Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(x.data(), r * m);
  return Problem::lsd(r, std::move(target), std::move(flat));
}

}  // namespace bkz
