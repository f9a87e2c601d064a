#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cspx/summation.hpp"
#include "cspx/types.hpp"

namespace cspx {

// Closed-form box minimizer at a fixed multiplier: min(1, [y - gamma]_+),
// taken element-wise. Total on finite y; gamma = +/-inf clamps to 0 / 1.
template <typename Derived>
Vector<typename Derived::Scalar> candidate_x(const Eigen::MatrixBase<Derived>& y,
                                             typename Derived::Scalar gamma) {
  using Scalar = typename Derived::Scalar;
  return (y.derived().array() - gamma).max(Scalar(0)).min(Scalar(1)).matrix();
}

// Fused single pass over y producing the residual k - sum(min(1,[y-gamma]_+))
// and the count of strictly interior coordinates. Four compensated lanes keep
// the dependency chain short; each lane is an exact-rounded Kahan sum of
// nonnegative terms, so the combined value stays within 4 ulp of exact.
template <typename Derived>
DerivativePair<typename Derived::Scalar> eval_omega_derivatives(
    const Eigen::MatrixBase<Derived>& y, typename Derived::Scalar k,
    typename Derived::Scalar gamma) {
  using Scalar = typename Derived::Scalar;
  const auto& v = y.derived();
  const Index n = v.size();

  KahanSum<Scalar> lane[4];
  Index interior = 0;
  Index i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int l = 0; l < 4; ++l) {
      const Scalar d = v.coeff(i + l) - gamma;
      const Scalar c = d < Scalar(0) ? Scalar(0) : (d > Scalar(1) ? Scalar(1) : d);
      lane[l].add(c);
      interior += static_cast<Index>(d > Scalar(0) && d < Scalar(1));
    }
  }
  for (; i < n; ++i) {
    const Scalar d = v.coeff(i) - gamma;
    const Scalar c = d < Scalar(0) ? Scalar(0) : (d > Scalar(1) ? Scalar(1) : d);
    lane[0].add(c);
    interior += static_cast<Index>(d > Scalar(0) && d < Scalar(1));
  }
  KahanSum<Scalar> total;
  for (int l = 0; l < 4; ++l) total.add(lane[l].value());
  return {k - total.value(), interior};
}

// |sum(x) - k| on the slice, max(sum(x) - k, 0) under the cap.
template <typename Derived>
typename Derived::Scalar feasibility_gap(const Eigen::MatrixBase<Derived>& x,
                                         typename Derived::Scalar k, Variant variant) {
  using Scalar = typename Derived::Scalar;
  const Scalar s = kahan_sum(x);
  if (variant == Variant::EqualitySlice) return std::abs(s - k);
  return std::max(s - k, Scalar(0));
}

// Safeguard interval [min(y)-1, max(y)]: the residual is k-n <= 0 at the left
// end and k >= 0 at the right end, so a root lies inside for 0 < k < n.
template <typename Derived>
Bracket<typename Derived::Scalar> initial_bracket(const Eigen::MatrixBase<Derived>& y,
                                                  typename Derived::Scalar k) {
  using Scalar = typename Derived::Scalar;
  const Index n = y.size();
  if (!(k > Scalar(0)) || !(k < Scalar(n)))
    throw std::invalid_argument("initial_bracket: infeasible bracket, k must lie in (0, n)");
  const Scalar lo = y.derived().minCoeff() - Scalar(1);
  const Scalar hi = y.derived().maxCoeff();
  return {lo, hi};
}

namespace detail {

template <typename Scalar>
ProjectionResult<Scalar> infeasible_result() {
  ProjectionResult<Scalar> r;
  r.status = Status::InfeasibleInput;
  return r;
}

template <typename Scalar>
ProjectionResult<Scalar> saturated_result(Index n, Saturation side, Scalar k,
                                          Variant variant) {
  ProjectionResult<Scalar> r;
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  if (side == Saturation::AllZero) {
    r.x = Vector<Scalar>::Zero(n);
    r.gamma = inf;
  } else {
    r.x = Vector<Scalar>::Ones(n);
    r.gamma = -inf;
  }
  r.saturation = side;
  r.feasibility_gap = feasibility_gap(r.x, k, variant);
  return r;
}

// Newton iteration on the dual residual, safeguarded by a shrinking
// sign-change bracket. Falls back to bisection whenever the curvature
// vanishes or the Newton point leaves the open bracket interior.
template <typename Scalar>
ProjectionResult<Scalar> newton_on_bracket(const Vector<Scalar>& y, Scalar k,
                                           Bracket<Scalar> br, Variant variant,
                                           const NewtonConfig<Scalar>& config,
                                           std::vector<SolverTrace<Scalar>>* trace) {
  const Scalar rtol = config.resolved_residual_tol(k);
  Scalar gamma = config.gamma0 ? *config.gamma0 : br.lo + (br.hi - br.lo) / Scalar(2);

  DerivativePair<Scalar> d = eval_omega_derivatives(y, k, gamma);
  if (trace) trace->push_back({gamma, br.lo, br.hi, d.first, d.second});

  int iters = 0;
  Status status = Status::MaxItersReached;
  while (true) {
    if (std::abs(d.first) <= rtol) {
      status = Status::Converged;
      break;
    }
    if (iters >= config.max_iters) break;

    // The residual is nondecreasing in gamma, so its sign tells which side
    // of the root we are on.
    if (d.first < Scalar(0))
      br.lo = std::max(br.lo, gamma);
    else
      br.hi = std::min(br.hi, gamma);

    Scalar next;
    if (d.second > 0) {
      next = gamma - d.first / Scalar(d.second);
      if (!(next > br.lo && next < br.hi)) next = br.lo + (br.hi - br.lo) / Scalar(2);
    } else {
      next = br.lo + (br.hi - br.lo) / Scalar(2);
    }

    const bool tiny_step = std::abs(next - gamma) <= config.step_tol * (Scalar(1) + std::abs(next));
    gamma = next;
    ++iters;
    d = eval_omega_derivatives(y, k, gamma);
    if (trace) trace->push_back({gamma, br.lo, br.hi, d.first, d.second});
    if (tiny_step) {
      status = Status::Converged;
      break;
    }
  }

  ProjectionResult<Scalar> r;
  r.x = candidate_x(y, gamma);
  r.gamma = gamma;
  r.iterations = iters;
  r.status = status;
  r.feasibility_gap = feasibility_gap(r.x, k, variant);
  return r;
}

}  // namespace detail

// Projection onto the k-capped simplex (or its equality slice). The equality
// variant runs the safeguarded Newton iteration on the bracket from
// initial_bracket; the inequality variant first checks whether the cap is
// inactive (then gamma = 0 exactly) and otherwise finds the positive root on
// [max(0, min(y)-1), max(y)]. Infeasible inputs come back as a status, never
// an exception. An optional trace records every derivative evaluation.
template <typename Scalar>
ProjectionResult<Scalar> project_capped_simplex(const ProjectionProblem<Scalar>& problem,
                                                const NewtonConfig<Scalar>& config = {},
                                                std::vector<SolverTrace<Scalar>>* trace = nullptr) {
  config.validate();
  if (!problem.is_feasible()) return detail::infeasible_result<Scalar>();

  const Vector<Scalar>& y = problem.y;
  const Scalar k = problem.k;
  const Index n = y.size();

  if (problem.variant == Variant::EqualitySlice) {
    if (k == Scalar(0))
      return detail::saturated_result<Scalar>(n, Saturation::AllZero, k, problem.variant);
    if (k == Scalar(n))
      return detail::saturated_result<Scalar>(n, Saturation::AllOne, k, problem.variant);
    return detail::newton_on_bracket(y, k, initial_bracket(y, k), problem.variant, config,
                                     trace);
  }

  // Inequality cap: inactive iff sum(min(1,[y]_+)) <= k, i.e. omega'(0) >= 0.
  const DerivativePair<Scalar> at_zero = eval_omega_derivatives(y, k, Scalar(0));
  if (at_zero.first >= Scalar(0)) {
    ProjectionResult<Scalar> r;
    r.gamma = Scalar(0);
    r.x = candidate_x(y, r.gamma);
    r.feasibility_gap = feasibility_gap(r.x, k, problem.variant);
    return r;
  }
  Bracket<Scalar> br{std::max(Scalar(0), y.minCoeff() - Scalar(1)), y.maxCoeff()};
  return detail::newton_on_bracket(y, k, br, problem.variant, config, trace);
}

}  // namespace cspx
