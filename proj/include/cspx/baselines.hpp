#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "cspx/projection.hpp"
#include "cspx/summation.hpp"
#include "cspx/types.hpp"

namespace cspx {

// Sorted breakpoint multiset {y_i - 1} u {y_i} with prefix sums of the sorted
// input. Between consecutive breakpoints the dual residual is affine in
// gamma, and the prefix sums give each segment's |S|, |S1| and sum_{i in S} y_i
// in O(1) after the O(n log n) sort.
template <typename Scalar>
struct BreakpointProfile {
  Vector<Scalar> breakpoints;    // length 2n, ascending
  Vector<Scalar> sorted_values;  // y ascending
  Vector<Scalar> prefix_sums;    // length n+1, compensated running sums

  static BreakpointProfile build(const Vector<Scalar>& y) {
    const Index n = y.size();
    BreakpointProfile p;
    p.sorted_values = y;
    std::sort(p.sorted_values.data(), p.sorted_values.data() + n);

    p.prefix_sums.resize(n + 1);
    KahanSum<Scalar> acc;
    p.prefix_sums[0] = Scalar(0);
    for (Index i = 0; i < n; ++i) {
      acc.add(p.sorted_values[i]);
      p.prefix_sums[i + 1] = acc.value();
    }

    p.breakpoints.resize(2 * n);
    Vector<Scalar> shifted = p.sorted_values.array() - Scalar(1);
    std::merge(shifted.data(), shifted.data() + n, p.sorted_values.data(),
               p.sorted_values.data() + n, p.breakpoints.data());
    return p;
  }

  // Index of the first sorted value strictly above g (everything at or below
  // g has clamp value 0).
  Index count_at_or_below(Scalar g) const {
    return std::upper_bound(sorted_values.data(), sorted_values.data() + sorted_values.size(),
                            g) -
           sorted_values.data();
  }
  // Index of the first sorted value at or above g + 1 (from there on the
  // clamp value is 1).
  Index first_at_cap(Scalar g) const {
    return std::lower_bound(sorted_values.data(), sorted_values.data() + sorted_values.size(),
                            g + Scalar(1)) -
           sorted_values.data();
  }

  // Residual via the prefix aggregates: k - |S1| - sum_S y + |S| * g.
  Scalar omega_prime(Scalar g, Scalar k) const {
    const Index n = sorted_values.size();
    const Index a = count_at_or_below(g);
    const Index b = first_at_cap(g);
    const Scalar sum_s = prefix_sums[b] - prefix_sums[a];
    return k - Scalar(n - b) - sum_s + Scalar(b - a) * g;
  }

  // Same residual with the interior sum re-accumulated directly from the
  // sorted values; used where prefix cancellation error would matter.
  Scalar omega_prime_exact(Scalar g, Scalar k) const {
    const Index n = sorted_values.size();
    const Index a = count_at_or_below(g);
    const Index b = first_at_cap(g);
    KahanSum<Scalar> s;
    for (Index t = a; t < b; ++t) s.add(sorted_values[t]);
    return k - Scalar(n - b) - s.value() + Scalar(b - a) * g;
  }
};

namespace detail {

// Exact root of the piecewise-linear residual, given a profile for y and a
// cap with a sign change (omega'(bp_first) < 0 <= omega'(bp_last)). Locates
// the segment by binary search on the prefix evaluation, then re-verifies the
// endpoints with direct summation before solving the affine segment.
template <typename Scalar>
Scalar exact_sort_root(const BreakpointProfile<Scalar>& profile, Scalar k, Status& status) {
  const Index m = profile.breakpoints.size();
  const auto& bps = profile.breakpoints;
  status = Status::Converged;

  if (profile.omega_prime_exact(bps[0], k) >= Scalar(0)) return bps[0];
  if (profile.omega_prime_exact(bps[m - 1], k) < Scalar(0)) {
    status = Status::NoRoot;
    return bps[m - 1];
  }

  // Smallest index with nonnegative prefix residual.
  Index lo = 0, hi = m - 1;
  while (lo < hi) {
    const Index mid = lo + (hi - lo) / 2;
    if (profile.omega_prime(bps[mid], k) < Scalar(0))
      lo = mid + 1;
    else
      hi = mid;
  }

  // Correct any prefix rounding slip with exact endpoint values, expanding
  // outward until the sign change is certain, then narrowing to one segment.
  Index left = lo > 0 ? lo - 1 : 0;
  Index right = lo;
  Index step = 1;
  while (profile.omega_prime_exact(bps[right], k) < Scalar(0) && right < m - 1) {
    left = right;
    right = std::min(right + step, m - 1);
    step *= 2;
  }
  step = 1;
  while (profile.omega_prime_exact(bps[left], k) >= Scalar(0) && left > 0) {
    right = left;
    left = left >= step ? left - step : 0;
    step *= 2;
  }
  while (right - left > 1) {
    const Index mid = left + (right - left) / 2;
    if (profile.omega_prime_exact(bps[mid], k) < Scalar(0))
      left = mid;
    else
      right = mid;
  }

  const Scalar seg_lo = bps[left];
  const Scalar seg_hi = bps[right];
  const Scalar g_rep = seg_lo + (seg_hi - seg_lo) / Scalar(2);
  if (!(g_rep > seg_lo && g_rep < seg_hi)) return seg_lo;  // width below 1 ulp

  const Index n = profile.sorted_values.size();
  const Index a = profile.count_at_or_below(g_rep);
  const Index b = profile.first_at_cap(g_rep);
  const Index interior = b - a;
  if (interior == 0) return seg_lo;  // flat segment, residual identically zero

  KahanSum<Scalar> s;
  for (Index t = a; t < b; ++t) s.add(profile.sorted_values[t]);
  const Scalar root = (Scalar(n - b) + s.value() - k) / Scalar(interior);
  return std::clamp(root, seg_lo, seg_hi);
}

}  // namespace detail

// Exact sorting-based solver for the same projection: O(n log n) sort plus
// prefix aggregates, independent of the Newton iteration. Used as the
// correctness oracle and as a benchmark comparator.
template <typename Scalar>
ProjectionResult<Scalar> project_exact_sort(const ProjectionProblem<Scalar>& problem) {
  if (!problem.is_feasible()) return detail::infeasible_result<Scalar>();

  const Vector<Scalar>& y = problem.y;
  const Scalar k = problem.k;
  const Index n = y.size();

  if (problem.variant == Variant::EqualitySlice) {
    if (k == Scalar(0))
      return detail::saturated_result<Scalar>(n, Saturation::AllZero, k, problem.variant);
    if (k == Scalar(n))
      return detail::saturated_result<Scalar>(n, Saturation::AllOne, k, problem.variant);
  }

  const auto profile = BreakpointProfile<Scalar>::build(y);

  if (problem.variant == Variant::InequalityCap &&
      profile.omega_prime_exact(Scalar(0), k) >= Scalar(0)) {
    ProjectionResult<Scalar> r;
    r.gamma = Scalar(0);
    r.x = candidate_x(y, r.gamma);
    r.feasibility_gap = feasibility_gap(r.x, k, problem.variant);
    return r;
  }

  ProjectionResult<Scalar> r;
  Scalar gamma = detail::exact_sort_root(profile, k, r.status);
  if (problem.variant == Variant::InequalityCap) gamma = std::max(gamma, Scalar(0));
  r.gamma = gamma;
  r.x = candidate_x(y, gamma);
  r.feasibility_gap = feasibility_gap(r.x, k, problem.variant);
  return r;
}

// Plain bisection on the safeguard bracket, halving until the bracket width
// drops below tol (or the midpoint is no longer representable). Robust
// reference solver; exploits only the monotonicity of the residual.
template <typename Scalar>
ProjectionResult<Scalar> project_bisection(const ProjectionProblem<Scalar>& problem,
                                           Scalar tol) {
  if (!(tol > Scalar(0))) throw std::invalid_argument("project_bisection: tol must be positive");
  if (!problem.is_feasible()) return detail::infeasible_result<Scalar>();

  const Vector<Scalar>& y = problem.y;
  const Scalar k = problem.k;
  const Index n = y.size();

  Bracket<Scalar> br;
  if (problem.variant == Variant::EqualitySlice) {
    if (k == Scalar(0))
      return detail::saturated_result<Scalar>(n, Saturation::AllZero, k, problem.variant);
    if (k == Scalar(n))
      return detail::saturated_result<Scalar>(n, Saturation::AllOne, k, problem.variant);
    br = initial_bracket(y, k);
  } else {
    const DerivativePair<Scalar> at_zero = eval_omega_derivatives(y, k, Scalar(0));
    if (at_zero.first >= Scalar(0)) {
      ProjectionResult<Scalar> r;
      r.gamma = Scalar(0);
      r.x = candidate_x(y, r.gamma);
      r.feasibility_gap = feasibility_gap(r.x, k, problem.variant);
      return r;
    }
    br = {std::max(Scalar(0), y.minCoeff() - Scalar(1)), y.maxCoeff()};
  }

  ProjectionResult<Scalar> r;
  int iters = 0;
  Scalar gamma = br.lo + (br.hi - br.lo) / Scalar(2);
  while (br.hi - br.lo > tol) {
    const Scalar mid = br.lo + (br.hi - br.lo) / Scalar(2);
    if (!(mid > br.lo && mid < br.hi)) break;  // bracket at ulp resolution
    const DerivativePair<Scalar> d = eval_omega_derivatives(y, k, mid);
    ++iters;
    if (d.first < Scalar(0)) {
      br.lo = mid;
    } else if (d.first > Scalar(0)) {
      br.hi = mid;
    } else {
      br.lo = br.hi = mid;
      break;
    }
  }
  gamma = br.lo + (br.hi - br.lo) / Scalar(2);
  r.gamma = gamma;
  r.x = candidate_x(y, gamma);
  r.iterations = iters;
  r.feasibility_gap = feasibility_gap(r.x, k, problem.variant);
  return r;
}

}  // namespace cspx
