#pragma once

// Theory-facing diagnostics: the per-iteration contraction factor promised
// by the convergence analysis, a sampled estimate of the conditioning
// constant it depends on, and monotone-descent audits of recorded traces.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "bkz/errors.hpp"
#include "bkz/problems.hpp"
#include "bkz/rng.hpp"
#include "bkz/solver.hpp"

namespace bkz {

enum class RateVariant { Relaxed, Exact };

inline const char* rate_variant_name(RateVariant v) {
  return v == RateVariant::Relaxed ? "relaxed" : "exact";
}

struct RateInputs {
  double sigma = 1.0;       // strong-convexity modulus of the DGF
  double smoothness = 1.0;  // M, smoothness modulus of the DGF
  double eta = 0.0;         // tangential-cone constant
  long n = 1;               // number of component equations
  double kappa = 1.0;       // conditioning constant
  RateVariant variant = RateVariant::Exact;
};

// Expected contraction factor rho per iteration:
//   Relaxed: rho = 1 - 2 sigma (1/2 - eta)          / (n (1+eta)^2 M kappa^2)
//   Exact:   rho = 1 - 2 sigma (1/2 - eta M / sigma) / (n (1+eta)^2 M kappa^2)
// Admissibility: eta < 1/2 for Relaxed, eta < sigma/(2M) for Exact. A bound
// outside (0, 1) carries no information and is rejected.
inline double rate_bound(const RateInputs& in) {
  require(in.sigma > 0.0 && in.smoothness > 0.0 && in.kappa > 0.0 && in.n >= 1,
          "rate_bound: inputs must be positive");
  require(in.eta >= 0.0, "rate_bound: eta must be nonnegative");

  double numerator = 0.0;
  if (in.variant == RateVariant::Relaxed) {
    if (!(in.eta < 0.5)) {
      throw PreconditionError("rate_bound: relaxed variant requires eta < 1/2");
    }
    numerator = 2.0 * in.sigma * (0.5 - in.eta);
  } else {
    if (!(in.eta < in.sigma / (2.0 * in.smoothness))) {
      throw PreconditionError(
          "rate_bound: exact variant requires eta < sigma / (2 M)");
    }
    numerator = 2.0 * in.sigma * (0.5 - in.eta * in.smoothness / in.sigma);
  }
  const double denominator = static_cast<double>(in.n) * (1.0 + in.eta) *
                             (1.0 + in.eta) * in.smoothness * in.kappa *
                             in.kappa;
  const double rho = 1.0 - numerator / denominator;
  if (!(rho > 0.0 && rho < 1.0)) {
    throw DegenerateRateError("rate_bound: bound " + std::to_string(rho) +
                              " lies outside (0, 1)");
  }
  return rho;
}

// Conditioning estimate: the maximum over sampled ball points of
// ||J(x)||_F / sigma_min(J(x)). Requires full column rank at every sample
// (smallest singular value above 1e-12 of the largest).
inline double kappa_estimate(const Problem& p, const Eigen::VectorXd& center,
                             double radius, int samples, std::uint64_t seed) {
  require(radius > 0.0, "kappa_estimate: radius must be positive");
  require(samples >= 1, "kappa_estimate: need at least one sample");
  require(center.size() == p.dim(), "kappa_estimate: center dimension mismatch");
  if (p.num_equations() < p.dim()) {
    throw RankDeficientError(
        "kappa_estimate: fewer equations than unknowns, the Jacobian cannot "
        "have full column rank");
  }
  Rng rng = Rng::for_stream(seed, StreamTag::Estimation);
  double kappa = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd x = rng.ball_uniform(center, radius);
    const Eigen::MatrixXd jac = p.jacobian(x);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
    const auto& sv = svd.singularValues();
    const double s_max = sv[0];
    const double s_min = sv[sv.size() - 1];
    if (!(s_min > 1e-12 * s_max)) {
      throw RankDeficientError("kappa_estimate: rank-deficient Jacobian at sample " +
                               std::to_string(s));
    }
    kappa = std::max(kappa, jac.norm() / s_min);
  }
  return kappa;
}

namespace detail {

// A trace is auditable when it was recorded at full resolution (iteration
// rows at k = 0, 1, 2, ... followed by the terminal row) and carries the
// distance-to-solution column.
inline void check_auditable(const RunRecord& rec) {
  if (rec.rows.empty()) {
    throw AuditUnavailableError("descent audit: empty trace");
  }
  for (std::size_t j = 0; j < rec.rows.size(); ++j) {
    const auto& row = rec.rows[j];
    if (row.k != static_cast<long>(j)) {
      throw AuditUnavailableError(
          "descent audit: trace is thinned; record with trace_every = 1");
    }
    if (std::isnan(row.bregman_dist)) {
      throw AuditUnavailableError(
          "descent audit: distance to solution was not recorded");
    }
  }
}

}  // namespace detail

// Weak-form audit: every recorded distance-to-solution must be nonincreasing
// within slack 1e-10 (1 + current value). Returns the iteration numbers that
// violate this; an empty list certifies monotone descent.
inline std::vector<long> descent_audit(const RunRecord& rec) {
  detail::check_auditable(rec);
  std::vector<long> violations;
  for (std::size_t j = 1; j < rec.rows.size(); ++j) {
    const double prev = rec.rows[j - 1].bregman_dist;
    const double cur = rec.rows[j].bregman_dist;
    if (cur - prev > 1e-10 * (1.0 + std::abs(cur))) {
      violations.push_back(rec.rows[j].k);
    }
  }
  return violations;
}

// Strong-form audit against the per-step guarantee
//   D_{k+1} <= D_k - tau * F_i(x_k)^2 / ||grad F_i(x_k)||_*^2.
// Informational only (tau depends on an estimated constant); requires the
// solver to have recorded descent terms. Skipped steps are exempt (they
// make no progress by construction).
inline std::vector<long> descent_audit_strong(const RunRecord& rec, double tau) {
  detail::check_auditable(rec);
  require(tau >= 0.0, "descent_audit_strong: tau must be nonnegative");
  std::vector<long> violations;
  for (std::size_t j = 1; j < rec.rows.size(); ++j) {
    const auto& prev_row = rec.rows[j - 1];
    if (prev_row.kind == TraceKind::Skipped) continue;
    if (std::isnan(prev_row.descent_term)) {
      throw AuditUnavailableError(
          "descent audit: run with record_descent_terms enabled");
    }
    const double bound = prev_row.bregman_dist - tau * prev_row.descent_term;
    const double cur = rec.rows[j].bregman_dist;
    if (cur - bound > 1e-10 * (1.0 + std::abs(cur))) {
      violations.push_back(rec.rows[j].k);
    }
  }
  return violations;
}

}  // namespace bkz
