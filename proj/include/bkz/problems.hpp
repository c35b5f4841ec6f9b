#pragma once

// Nonlinear systems F: R^d -> R^n presented one component at a time. Three
// concrete families are supported: multinomial quadratic equations, linear
// systems restricted to the probability simplex, and the left stochastic
// decomposition (LSD) problem X^T X = A with X column-stochastic. Instances
// are immutable after construction and safe for concurrent evaluation.
//
// Conventions, used consistently by the solver and the generators:
//   * component indices are 0-based,
//   * residual(x) returns -F(x) componentwise,
//   * LSD unknowns are X in R^{r x m} flattened column-major (column j of X
//     occupies coordinates [j*r, (j+1)*r)), with one equation per pair
//     (i, j), i <= j, in lexicographic order; n = m(m+1)/2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bkz/errors.hpp"
#include "bkz/rng.hpp"

namespace bkz {

enum class ProblemKind { QuadraticSystem, LinearSimplexSystem, LSDProblem };

inline const char* problem_kind_name(ProblemKind k) {
  switch (k) {
    case ProblemKind::QuadraticSystem: return "quadratic_system";
    case ProblemKind::LinearSimplexSystem: return "linear_simplex";
    case ProblemKind::LSDProblem: return "lsd";
  }
  return "?";
}

// Euclidean projection onto the probability simplex (sort-based algorithm).
inline Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index d = v.size();
  require(d >= 1, "project_to_simplex: empty vector");
  std::vector<double> u(v.data(), v.data() + d);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    cumsum += u[static_cast<std::size_t>(j)];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - candidate > 0.0) {
      theta = candidate;
    }
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

class Problem {
 public:
  static Problem quadratic_system(std::vector<Eigen::MatrixXd> a_list,
                                  std::vector<Eigen::VectorXd> b_list,
                                  Eigen::VectorXd c_list,
                                  std::optional<Eigen::VectorXd> known = {}) {
    const auto n = static_cast<Eigen::Index>(a_list.size());
    require(n >= 1, "quadratic_system: need at least one equation");
    require(static_cast<Eigen::Index>(b_list.size()) == n &&
                c_list.size() == n,
            "quadratic_system: list lengths must agree");
    const Eigen::Index d = a_list.front().rows();
    for (const auto& a : a_list) {
      require(a.rows() == d && a.cols() == d,
              "quadratic_system: matrices must be d x d");
    }
    for (const auto& b : b_list) {
      require(b.size() == d, "quadratic_system: vectors must have length d");
    }
    Problem p(ProblemKind::QuadraticSystem, n, d);
    p.quad_a_ = std::move(a_list);
    p.quad_a_sym_.reserve(p.quad_a_.size());
    for (const auto& a : p.quad_a_) {
      p.quad_a_sym_.push_back(0.5 * (a + a.transpose()));
    }
    p.quad_b_ = std::move(b_list);
    p.quad_c_ = std::move(c_list);
    p.adopt_known_solution(std::move(known), p.quad_c_.cwiseAbs().maxCoeff());
    return p;
  }

  static Problem linear_simplex(Eigen::MatrixXd a, Eigen::VectorXd b,
                                std::optional<Eigen::VectorXd> known = {}) {
    require(a.rows() >= 1 && a.cols() >= 1, "linear_simplex: empty matrix");
    require(b.size() == a.rows(), "linear_simplex: rhs length must equal rows");
    Problem p(ProblemKind::LinearSimplexSystem, a.rows(), a.cols());
    p.lin_a_ = std::move(a);
    p.lin_b_ = std::move(b);
    p.adopt_known_solution(std::move(known), p.lin_a_.norm());
    return p;
  }

  static Problem lsd(Eigen::Index r, Eigen::MatrixXd target,
                     std::optional<Eigen::VectorXd> known = {}) {
    require(r >= 1, "lsd: r must be positive");
    const Eigen::Index m = target.rows();
    require(m >= 1 && target.cols() == m, "lsd: target must be square");
    require((target - target.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
            "lsd: target must be symmetric");
    Problem p(ProblemKind::LSDProblem, m * (m + 1) / 2, r * m);
    p.lsd_r_ = r;
    p.lsd_m_ = m;
    p.lsd_target_ = std::move(target);
    p.lsd_pairs_.reserve(static_cast<std::size_t>(p.n_));
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i; j < m; ++j) {
        p.lsd_pairs_.emplace_back(i, j);
      }
    }
    p.adopt_known_solution(std::move(known), p.lsd_target_.norm());
    return p;
  }

  ProblemKind kind() const { return kind_; }
  Eigen::Index num_equations() const { return n_; }
  Eigen::Index dim() const { return d_; }
  const std::optional<Eigen::VectorXd>& known_solution() const { return known_; }

  double eval(Eigen::Index i, const Eigen::VectorXd& x) const {
    check_eval_args(i, x);
    switch (kind_) {
      case ProblemKind::QuadraticSystem:
        return quad_core(i, x) + quad_c_[i];
      case ProblemKind::LinearSimplexSystem:
        return lin_a_.row(i).dot(x) - lin_b_[i];
      case ProblemKind::LSDProblem: {
        const auto [ci, cj] = lsd_pairs_[static_cast<std::size_t>(i)];
        return column(x, ci).dot(column(x, cj)) - lsd_target_(ci, cj);
      }
    }
    return 0.0;
  }

  void grad_into(Eigen::Index i, const Eigen::VectorXd& x,
                 Eigen::VectorXd& out) const {
    check_eval_args(i, x);
    switch (kind_) {
      case ProblemKind::QuadraticSystem:
        out.noalias() = quad_a_sym_[static_cast<std::size_t>(i)] * x;
        out += quad_b_[static_cast<std::size_t>(i)];
        return;
      case ProblemKind::LinearSimplexSystem:
        out = lin_a_.row(i).transpose();
        return;
      case ProblemKind::LSDProblem: {
        const auto [ci, cj] = lsd_pairs_[static_cast<std::size_t>(i)];
        out.setZero(d_);
        if (ci == cj) {
          out.segment(ci * lsd_r_, lsd_r_) = 2.0 * column(x, ci);
        } else {
          out.segment(ci * lsd_r_, lsd_r_) = column(x, cj);
          out.segment(cj * lsd_r_, lsd_r_) = column(x, ci);
        }
        return;
      }
    }
  }

  Eigen::VectorXd grad(Eigen::Index i, const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(d_);
    grad_into(i, x, out);
    return out;
  }

  // residual(x) = -F(x); shares the eval path so that constructed solutions
  // have an exactly zero residual.
  void residual_into(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    require(x.size() == d_, "residual: dimension mismatch");
    r.resize(n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      r[i] = -eval(i, x);
    }
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& x) const {
    Eigen::VectorXd r(n_);
    residual_into(x, r);
    return r;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd jac(n_, d_);
    Eigen::VectorXd g(d_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      grad_into(i, x, g);
      jac.row(i) = g.transpose();
    }
    return jac;
  }

  // Quadratic payload access.
  const Eigen::MatrixXd& quad_matrix(Eigen::Index i) const {
    require_kind(ProblemKind::QuadraticSystem);
    return quad_a_[static_cast<std::size_t>(i)];
  }
  const Eigen::MatrixXd& quad_matrix_sym(Eigen::Index i) const {
    require_kind(ProblemKind::QuadraticSystem);
    return quad_a_sym_[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd& quad_linear(Eigen::Index i) const {
    require_kind(ProblemKind::QuadraticSystem);
    return quad_b_[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd& quad_constants() const {
    require_kind(ProblemKind::QuadraticSystem);
    return quad_c_;
  }

  // Linear payload access.
  const Eigen::MatrixXd& lin_matrix() const {
    require_kind(ProblemKind::LinearSimplexSystem);
    return lin_a_;
  }
  const Eigen::VectorXd& lin_rhs() const {
    require_kind(ProblemKind::LinearSimplexSystem);
    return lin_b_;
  }

  // LSD payload access.
  Eigen::Index lsd_rows() const {
    require_kind(ProblemKind::LSDProblem);
    return lsd_r_;
  }
  Eigen::Index lsd_cols() const {
    require_kind(ProblemKind::LSDProblem);
    return lsd_m_;
  }
  const Eigen::MatrixXd& lsd_target() const {
    require_kind(ProblemKind::LSDProblem);
    return lsd_target_;
  }
  std::pair<Eigen::Index, Eigen::Index> equation_pair(Eigen::Index k) const {
    require_kind(ProblemKind::LSDProblem);
    require(k >= 0 && k < n_, "equation_pair: index out of range");
    return lsd_pairs_[static_cast<std::size_t>(k)];
  }

  // Shared by the generator so that constants can be calibrated to make a
  // chosen root exact: c_i = -quad_core(i, root) implies eval(i, root) == 0
  // in floating point, not merely approximately.
  double quad_core(Eigen::Index i, const Eigen::VectorXd& x) const {
    require_kind(ProblemKind::QuadraticSystem);
    const auto& a = quad_a_[static_cast<std::size_t>(i)];
    const auto& b = quad_b_[static_cast<std::size_t>(i)];
    return 0.5 * x.dot(a * x) + b.dot(x);
  }

 private:
  Problem(ProblemKind kind, Eigen::Index n, Eigen::Index d)
      : kind_(kind), n_(n), d_(d) {}

  Eigen::Ref<const Eigen::VectorXd> column(const Eigen::VectorXd& x,
                                           Eigen::Index j) const {
    return x.segment(j * lsd_r_, lsd_r_);
  }

  void check_eval_args(Eigen::Index i, const Eigen::VectorXd& x) const {
    require(i >= 0 && i < n_, "component index out of range");
    require(x.size() == d_, "point has wrong dimension");
  }

  void require_kind(ProblemKind expected) const {
    require(kind_ == expected, "payload accessor used on the wrong kind");
  }

  void adopt_known_solution(std::optional<Eigen::VectorXd> known,
                            double data_scale) {
    if (!known.has_value()) return;
    require(known->size() == d_, "known_solution has wrong dimension");
    known_ = std::move(known);
    const double rnorm = residual(*known_).norm();
    require(rnorm <= 1e-10 * (1.0 + data_scale),
            "known_solution does not solve the system");
  }

  ProblemKind kind_;
  Eigen::Index n_;
  Eigen::Index d_;
  std::optional<Eigen::VectorXd> known_;

  std::vector<Eigen::MatrixXd> quad_a_;
  std::vector<Eigen::MatrixXd> quad_a_sym_;
  std::vector<Eigen::VectorXd> quad_b_;
  Eigen::VectorXd quad_c_;

  Eigen::MatrixXd lin_a_;
  Eigen::VectorXd lin_b_;

  Eigen::Index lsd_r_ = 0;
  Eigen::Index lsd_m_ = 0;
  Eigen::MatrixXd lsd_target_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> lsd_pairs_;
};

namespace detail {

// Linearization remainder F_i(y) - F_i(x) - <grad F_i(x), y-x> in closed
// form per kind. Direct floating-point evaluation of the defining expression
// cancels catastrophically (the remainder is orders of magnitude below the
// individual terms); the algebraic forms below are exact identities.
inline double linearization_remainder(const Problem& p, Eigen::Index i,
                                      const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& y) {
  const Eigen::VectorXd delta = y - x;
  switch (p.kind()) {
    case ProblemKind::QuadraticSystem:
      return 0.5 * delta.dot(p.quad_matrix_sym(i) * delta);
    case ProblemKind::LinearSimplexSystem:
      return 0.0;
    case ProblemKind::LSDProblem: {
      const auto [ci, cj] = p.equation_pair(i);
      const Eigen::Index r = p.lsd_rows();
      const auto di = delta.segment(ci * r, r);
      const auto dj = delta.segment(cj * r, r);
      return di.dot(dj);
    }
  }
  return 0.0;
}

// Pulls a ball sample back into the problem's feasible set: the whole vector
// onto the simplex for simplex-constrained linear systems, each column onto
// the simplex for LSD, unchanged for unconstrained kinds.
inline Eigen::VectorXd feasible_sample(const Problem& p, Eigen::VectorXd v) {
  switch (p.kind()) {
    case ProblemKind::QuadraticSystem:
      return v;
    case ProblemKind::LinearSimplexSystem:
      return project_to_simplex(v);
    case ProblemKind::LSDProblem: {
      const Eigen::Index r = p.lsd_rows();
      for (Eigen::Index j = 0; j < p.lsd_cols(); ++j) {
        v.segment(j * r, r) = project_to_simplex(v.segment(j * r, r));
      }
      return v;
    }
  }
  return v;
}

}  // namespace detail

// Estimates the tangential-cone constant eta: the maximum over sampled point
// pairs and components of |linearization remainder| / |F_i(x) - F_i(y)|,
// skipping pairs whose denominator falls below 1e-14.
inline double tcc_estimate(const Problem& p, const Eigen::VectorXd& center,
                           double radius, int samples, std::uint64_t seed) {
  require(radius > 0.0, "tcc_estimate: radius must be positive");
  require(samples >= 1, "tcc_estimate: need at least one sample pair");
  require(center.size() == p.dim(), "tcc_estimate: center dimension mismatch");
  Rng rng = Rng::for_stream(seed, StreamTag::Estimation);
  double eta_hat = 0.0;
  long used = 0;
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd x =
        detail::feasible_sample(p, rng.ball_uniform(center, radius));
    const Eigen::VectorXd y =
        detail::feasible_sample(p, rng.ball_uniform(center, radius));
    for (Eigen::Index i = 0; i < p.num_equations(); ++i) {
      const double denom = std::abs(p.eval(i, x) - p.eval(i, y));
      if (denom < 1e-14) continue;
      ++used;
      const double numer = std::abs(detail::linearization_remainder(p, i, x, y));
      eta_hat = std::max(eta_hat, numer / denom);
    }
  }
  if (used == 0) {
    throw IndeterminateError(
        "tcc_estimate: every sampled pair fell below the denominator floor");
  }
  return eta_hat;
}

}  // namespace bkz
