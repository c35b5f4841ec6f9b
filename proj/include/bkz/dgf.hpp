#pragma once

// Distance-generating functions and the primal-dual iterate pair.
//
// A distance generator phi fixes the geometry of a Bregman-Kaczmarz run: the
// iteration lives in the dual variable x*, and the primal iterate is
// recovered through the mirror map x = grad phi*(x*). Supported geometries:
//
//   Quadratic        phi(x) = 1/2 ||x||_2^2                (mirror: identity)
//   L1Quadratic      phi(x) = lambda ||x||_1 + 1/2 ||x||_2^2  (mirror: soft threshold)
//   SimplexEntropy   phi(x) = sum_i x_i log x_i on the unit simplex (mirror: softmax)
//   SeparableBlocks  phi(x) = sum_b phi_b(x_b) over a partition into blocks
//
// Values are extended reals: points outside dom phi evaluate to +infinity,
// which doubles as the sentinel for Bregman distances to infeasible targets.

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bkz/errors.hpp"

namespace bkz {

enum class Norm { L1, L2 };

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Tolerance band for membership in the simplex: unit-sum drift up to 1e-9
// and entries down to -1e-12 still count as feasible.
inline constexpr double kSimplexSumTol = 1e-9;
inline constexpr double kSimplexEntryTol = -1e-12;

// Componentwise tolerance for validating an externally supplied (x, x*) pair.
inline constexpr double kMirrorPairTol = 1e-12;

namespace detail {

inline double soft_threshold(double v, double lambda) {
  if (v > lambda) return v - lambda;
  if (v < -lambda) return v + lambda;
  return 0.0;
}

// log(sum exp(z_i)) with a max shift, stable for any magnitude of z.
inline double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& z) {
  const double zmax = z.maxCoeff();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) acc += std::exp(z[i] - zmax);
  return zmax + std::log(acc);
}

inline void softmax_into(const Eigen::Ref<const Eigen::VectorXd>& z,
                         Eigen::Ref<Eigen::VectorXd> out) {
  const double zmax = z.maxCoeff();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double e = std::exp(z[i] - zmax);
    out[i] = e;
    acc += e;
  }
  out /= acc;
}

// sum_i x_i log x_i with the 0 log 0 = 0 convention. Entries within the
// negative tolerance band contribute zero.
inline double negative_entropy(const Eigen::Ref<const Eigen::VectorXd>& x) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) acc += x[i] * std::log(x[i]);
  }
  return acc;
}

inline bool in_simplex_band(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.minCoeff() < kSimplexEntryTol) return false;
  return std::abs(x.sum() - 1.0) <= kSimplexSumTol;
}

}  // namespace detail

class DistanceGenerator {
 public:
  enum class Kind { Quadratic, L1Quadratic, SimplexEntropy, SeparableBlocks };

  static DistanceGenerator quadratic(Eigen::Index dim) {
    require(dim > 0, "DistanceGenerator: dimension must be positive");
    return DistanceGenerator(Kind::Quadratic, dim, 0.0, {});
  }

  static DistanceGenerator l1_quadratic(Eigen::Index dim, double lambda) {
    require(dim > 0, "DistanceGenerator: dimension must be positive");
    require(lambda > 0.0, "DistanceGenerator: lambda must be positive");
    return DistanceGenerator(Kind::L1Quadratic, dim, lambda, {});
  }

  static DistanceGenerator simplex_entropy(Eigen::Index dim) {
    require(dim > 0, "DistanceGenerator: dimension must be positive");
    return DistanceGenerator(Kind::SimplexEntropy, dim, 0.0, {});
  }

  // Block-wise composition over a partition into consecutive blocks. Blocks
  // must be leaf generators (no nesting) and share the same primal norm.
  static DistanceGenerator separable_blocks(std::vector<DistanceGenerator> blocks) {
    require(!blocks.empty(), "DistanceGenerator: blocks must be nonempty");
    Eigen::Index dim = 0;
    for (const auto& b : blocks) {
      require(b.kind() != Kind::SeparableBlocks,
              "DistanceGenerator: nested block generators are not supported");
      require(b.primal_norm() == blocks.front().primal_norm(),
              "DistanceGenerator: blocks must share a primal norm");
      dim += b.dim();
    }
    DistanceGenerator g(Kind::SeparableBlocks, dim, 0.0, std::move(blocks));
    g.offsets_.reserve(g.blocks_.size() + 1);
    Eigen::Index off = 0;
    for (const auto& b : g.blocks_) {
      g.offsets_.push_back(off);
      off += b.dim();
    }
    g.offsets_.push_back(off);
    return g;
  }

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }

  double lambda() const {
    require(kind_ == Kind::L1Quadratic, "lambda: not an L1Quadratic generator");
    return lambda_;
  }

  const std::vector<DistanceGenerator>& blocks() const {
    require(kind_ == Kind::SeparableBlocks, "blocks: not a block generator");
    return blocks_;
  }

  Eigen::Index block_offset(std::size_t b) const {
    require(kind_ == Kind::SeparableBlocks, "block_offset: not a block generator");
    require(b < offsets_.size(), "block_offset: block index out of range");
    return offsets_[b];
  }

  // Strong-convexity modulus with respect to primal_norm(). All supported
  // geometries are 1-strongly convex.
  double sigma() const { return 1.0; }

  // Smoothness constant of phi where one exists (only the quadratic
  // geometry is smooth).
  std::optional<double> smoothness() const {
    switch (kind_) {
      case Kind::Quadratic:
        return 1.0;
      case Kind::SeparableBlocks: {
        double m = 0.0;
        for (const auto& b : blocks_) {
          const auto bm = b.smoothness();
          if (!bm) return std::nullopt;
          m = std::max(m, *bm);
        }
        return m;
      }
      default:
        return std::nullopt;
    }
  }

  Norm primal_norm() const {
    switch (kind_) {
      case Kind::Quadratic:
      case Kind::L1Quadratic:
        return Norm::L2;
      case Kind::SimplexEntropy:
        return Norm::L1;
      case Kind::SeparableBlocks:
        return blocks_.front().primal_norm();
    }
    return Norm::L2;
  }

  // phi(x), +infinity outside the domain.
  double value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x.size(), "value");
    switch (kind_) {
      case Kind::Quadratic:
        return 0.5 * x.squaredNorm();
      case Kind::L1Quadratic:
        return lambda_ * x.lpNorm<1>() + 0.5 * x.squaredNorm();
      case Kind::SimplexEntropy:
        if (!detail::in_simplex_band(x)) return kInfinity;
        return detail::negative_entropy(x);
      case Kind::SeparableBlocks: {
        double acc = 0.0;
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
          const double v = blocks_[b].value(x.segment(offsets_[b], blocks_[b].dim()));
          if (v == kInfinity) return kInfinity;
          acc += v;
        }
        return acc;
      }
    }
    return 0.0;
  }

  // phi*(x*), finite everywhere for all supported geometries.
  double conjugate(const Eigen::Ref<const Eigen::VectorXd>& x_star) const {
    check_dim(x_star.size(), "conjugate");
    switch (kind_) {
      case Kind::Quadratic:
        return 0.5 * x_star.squaredNorm();
      case Kind::L1Quadratic: {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < x_star.size(); ++i) {
          const double s = detail::soft_threshold(x_star[i], lambda_);
          acc += 0.5 * s * s;
        }
        return acc;
      }
      case Kind::SimplexEntropy:
        return detail::log_sum_exp(x_star);
      case Kind::SeparableBlocks: {
        double acc = 0.0;
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
          acc += blocks_[b].conjugate(x_star.segment(offsets_[b], blocks_[b].dim()));
        }
        return acc;
      }
    }
    return 0.0;
  }

  // Mirror map x = grad phi*(x*).
  void mirror_into(const Eigen::Ref<const Eigen::VectorXd>& x_star,
                   Eigen::Ref<Eigen::VectorXd> x) const {
    check_dim(x_star.size(), "mirror");
    require(x.size() == dim_, "mirror: output dimension mismatch");
    switch (kind_) {
      case Kind::Quadratic:
        x = x_star;
        return;
      case Kind::L1Quadratic:
        for (Eigen::Index i = 0; i < x_star.size(); ++i) {
          x[i] = detail::soft_threshold(x_star[i], lambda_);
        }
        return;
      case Kind::SimplexEntropy:
        detail::softmax_into(x_star, x);
        return;
      case Kind::SeparableBlocks:
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
          blocks_[b].mirror_into(x_star.segment(offsets_[b], blocks_[b].dim()),
                                 x.segment(offsets_[b], blocks_[b].dim()));
        }
        return;
    }
  }

  Eigen::VectorXd mirror(const Eigen::Ref<const Eigen::VectorXd>& x_star) const {
    Eigen::VectorXd x(dim_);
    mirror_into(x_star, x);
    return x;
  }

  // Norm dual to primal_norm(): Euclidean for L2 geometries, max-abs for L1
  // geometries (block-wise evaluation reduces to the global max).
  double dual_norm(const Eigen::Ref<const Eigen::VectorXd>& v) const {
    check_dim(v.size(), "dual_norm");
    return primal_norm() == Norm::L2 ? v.norm() : v.lpNorm<Eigen::Infinity>();
  }

 private:
  DistanceGenerator(Kind kind, Eigen::Index dim, double lambda,
                    std::vector<DistanceGenerator> blocks)
      : kind_(kind), dim_(dim), lambda_(lambda), blocks_(std::move(blocks)) {}

  void check_dim(Eigen::Index got, const char* op) const {
    if (got != dim_) {
      throw ContractViolation(std::string(op) + ": dimension mismatch");
    }
  }

  Kind kind_;
  Eigen::Index dim_;
  double lambda_;
  std::vector<DistanceGenerator> blocks_;
  std::vector<Eigen::Index> offsets_;
};

// A coherent (x, x*) pair with x = mirror(x*). The dual vector is the source
// of truth; the primal side is derived, never the other way around.
class PrimalDualState {
 public:
  PrimalDualState(const DistanceGenerator& gen, Eigen::VectorXd x_star)
      : x_star_(std::move(x_star)), x_(gen.mirror(x_star_)) {}

  // Accepts an externally supplied pair after checking coherence.
  static PrimalDualState from_pair(const DistanceGenerator& gen, Eigen::VectorXd x,
                                   Eigen::VectorXd x_star) {
    require(x.size() == gen.dim() && x_star.size() == gen.dim(),
            "PrimalDualState: dimension mismatch");
    const Eigen::VectorXd mirrored = gen.mirror(x_star);
    require((x - mirrored).lpNorm<Eigen::Infinity>() <= kMirrorPairTol,
            "PrimalDualState: x is not the mirror image of x_star");
    return PrimalDualState(std::move(x), std::move(x_star));
  }

  // Caller guarantees x = mirror(x_star); used on hot paths that maintain
  // the invariant by construction.
  static PrimalDualState trusted(Eigen::VectorXd x, Eigen::VectorXd x_star) {
    return PrimalDualState(std::move(x), std::move(x_star));
  }

  const Eigen::VectorXd& x() const { return x_; }
  const Eigen::VectorXd& x_star() const { return x_star_; }

 private:
  PrimalDualState(Eigen::VectorXd x, Eigen::VectorXd x_star)
      : x_star_(std::move(x_star)), x_(std::move(x)) {}

  Eigen::VectorXd x_star_;
  Eigen::VectorXd x_;
};

// Bregman distance D(x, y) evaluated through the conjugate:
//   D = phi*(x*) - <x*, y> + phi(y).
// This form needs no subgradient selection, so it is robust for nonsmooth
// phi. Returns +infinity when y lies outside dom phi.
inline double bregman_distance(const DistanceGenerator& gen,
                               const Eigen::Ref<const Eigen::VectorXd>& x_star,
                               const Eigen::Ref<const Eigen::VectorXd>& y) {
  require(y.size() == gen.dim(), "bregman_distance: dimension mismatch");
  const double phi_y = gen.value(y);
  if (phi_y == kInfinity) return kInfinity;
  return gen.conjugate(x_star) - x_star.dot(y) + phi_y;
}

inline double bregman_distance(const DistanceGenerator& gen,
                               const PrimalDualState& from,
                               const Eigen::Ref<const Eigen::VectorXd>& to) {
  return bregman_distance(gen, from.x_star(), to);
}

}  // namespace bkz
