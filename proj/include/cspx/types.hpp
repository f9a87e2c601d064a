#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace cspx {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

// Coupling constraint of the feasible set: the hyper-plane slice
// { x in [0,1]^n : sum x = k } or the capped box { x in [0,1]^n : sum x <= k }.
enum class Variant { EqualitySlice, InequalityCap };

enum class Status { Converged, MaxItersReached, InfeasibleInput, NoRoot, LineSearchStalled };

// Degenerate caps (k = 0 or k = n on the slice) pin every coordinate to the
// same bound; the multiplier saturates at +/-inf and no iteration is run.
// AllZero corresponds to gamma = +inf, AllOne to gamma = -inf.
enum class Saturation { None, AllZero, AllOne };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Converged: return "Converged";
    case Status::MaxItersReached: return "MaxItersReached";
    case Status::InfeasibleInput: return "InfeasibleInput";
    case Status::NoRoot: return "NoRoot";
    case Status::LineSearchStalled: return "LineSearchStalled";
  }
  return "Unknown";
}

inline const char* to_string(Variant v) {
  return v == Variant::EqualitySlice ? "equality" : "inequality";
}

template <typename Scalar>
struct ProjectionProblem {
  Vector<Scalar> y;
  Scalar k{0};
  Variant variant{Variant::EqualitySlice};

  // Feasibility of the inputs themselves; the solvers report
  // Status::InfeasibleInput instead of throwing when this fails.
  bool is_feasible() const {
    if (y.size() < 1 || !y.allFinite() || !std::isfinite(k)) return false;
    if (variant == Variant::EqualitySlice)
      return k >= Scalar(0) && k <= Scalar(y.size());
    return k >= Scalar(0);
  }
};

template <typename Scalar>
struct NewtonConfig {
  // Stop when |omega'(gamma)| <= residual_tol. Empty means the scale-aware
  // default 1e-10 * max(1, |k|); the residual equals the equality
  // feasibility gap, so the threshold is meaningful to callers.
  std::optional<Scalar> residual_tol{};
  // Stop when |gamma_t - gamma_{t-1}| <= step_tol * (1 + |gamma_t|).
  Scalar step_tol{Scalar(1e-14)};
  int max_iters{100};
  // Initial multiplier; default is the midpoint of the safeguard bracket.
  std::optional<Scalar> gamma0{};

  void validate() const {
    if (residual_tol && !(*residual_tol > Scalar(0)))
      throw std::invalid_argument("NewtonConfig: residual_tol must be positive");
    if (!(step_tol > Scalar(0)))
      throw std::invalid_argument("NewtonConfig: step_tol must be positive");
    if (max_iters < 1)
      throw std::invalid_argument("NewtonConfig: max_iters must be >= 1");
  }

  Scalar resolved_residual_tol(Scalar k) const {
    if (residual_tol) return *residual_tol;
    return Scalar(1e-10) * std::max(Scalar(1), std::abs(k));
  }
};

// First and second derivative of the scalar dual at a trial multiplier:
// first  = k - sum_i min(1, [y_i - gamma]_+)   (the signed slice residual)
// second = #{ i : 0 < y_i - gamma < 1 }        (the active-interval count)
template <typename Scalar>
struct DerivativePair {
  Scalar first{0};
  Index second{0};
};

// Sign-changing interval for the dual residual: omega'(lo) <= 0 <= omega'(hi).
template <typename Scalar>
struct Bracket {
  Scalar lo{0};
  Scalar hi{0};
};

template <typename Scalar>
struct ProjectionResult {
  Vector<Scalar> x;
  Scalar gamma{0};
  int iterations{0};
  Scalar feasibility_gap{0};
  Status status{Status::Converged};
  Saturation saturation{Saturation::None};
};

// One record per derivative evaluation inside the safeguarded iteration;
// used to verify bracket soundness from the outside.
template <typename Scalar>
struct SolverTrace {
  Scalar gamma{0};
  Scalar lo{0};
  Scalar hi{0};
  Scalar omega_prime{0};
  Index active_count{0};
};

}  // namespace cspx
