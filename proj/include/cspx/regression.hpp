#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cspx/baselines.hpp"
#include "cspx/projection.hpp"
#include "cspx/types.hpp"

namespace cspx {

struct FactorizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Which solver performs the inner projection onto the capped simplex.
enum class InnerProjector { Newton, ExactSort };

template <typename Scalar>
struct RegressionProblem {
  Matrix<Scalar> X;  // m samples x n features
  Vector<Scalar> y;  // m responses
  Scalar rho{1};     // ridge weight
  Scalar k{1};       // sparsity budget (cap of the relaxed indicator set)

  Index samples() const { return X.rows(); }
  Index features() const { return X.cols(); }

  void validate() const {
    if (X.rows() < 1 || X.cols() < 1)
      throw std::invalid_argument("RegressionProblem: X must be nonempty");
    if (y.size() != X.rows())
      throw std::invalid_argument("RegressionProblem: X row count and y length differ");
    if (!X.allFinite() || !y.allFinite())
      throw std::invalid_argument("RegressionProblem: entries must be finite");
    if (!(rho > Scalar(0))) throw std::invalid_argument("RegressionProblem: rho must be positive");
    if (!(k > Scalar(0)) || k > Scalar(X.cols()))
      throw std::invalid_argument("RegressionProblem: k must lie in (0, n]");
  }
};

template <typename Scalar>
struct PqnConfig {
  int max_outer{50};
  int history{10};         // nonmonotone line-search memory
  int max_backtracks{30};
  Scalar suff_decrease{Scalar(1e-4)};
  Scalar alpha_min{Scalar(1e-12)};
  Scalar alpha_max{Scalar(1e12)};
  Scalar pg_tol{Scalar(1e-12)};  // stationarity threshold on the unit projected step
  InnerProjector projector{InnerProjector::Newton};
  // Invoked on every accepted iterate (including the initial point).
  std::function<void(int iter, Scalar objective, const Vector<Scalar>& u)> observer{};

  void validate() const {
    if (max_outer < 1) throw std::invalid_argument("PqnConfig: max_outer must be >= 1");
    if (history < 1) throw std::invalid_argument("PqnConfig: history must be >= 1");
    if (max_backtracks < 1) throw std::invalid_argument("PqnConfig: max_backtracks must be >= 1");
    if (!(alpha_min > Scalar(0)) || !(alpha_max > alpha_min))
      throw std::invalid_argument("PqnConfig: need 0 < alpha_min < alpha_max");
  }
};

template <typename Scalar>
struct FitResult {
  Vector<Scalar> u;                     // best relaxed iterate, inside the capped simplex
  Vector<Scalar> w;                     // rounded sparse weights (ridge refit on the support)
  std::vector<Scalar> objective_trace;  // G at each accepted iterate, starting from u0
  int iterations{0};
  std::vector<Index> support;           // ascending indices of the selected features
  Status status{Status::Converged};
};

namespace detail {

template <typename Scalar>
struct GEvaluation {
  Scalar value{0};
  Vector<Scalar> gradient;
};

// G(u) = y^T M^{-1} y with M = (1/rho) X diag(u) X^T + I, via a Cholesky
// factorization of the m x m system; m is small next to n throughout.
// The gradient shares the factorization: g_j = -(1/rho) (x_j^T M^{-1} y)^2.
template <typename Scalar>
GEvaluation<Scalar> eval_G(const RegressionProblem<Scalar>& problem, const Vector<Scalar>& u,
                           bool want_gradient) {
  const Index m = problem.samples();
  if (u.size() != problem.features())
    throw std::invalid_argument("eval_G: u length must equal the feature count");

  Matrix<Scalar> M = Matrix<Scalar>::Identity(m, m);
  const Matrix<Scalar> A = problem.X * u.array().max(Scalar(0)).sqrt().matrix().asDiagonal();
  M.template selfadjointView<Eigen::Lower>().rankUpdate(A, Scalar(1) / problem.rho);
  if (!M.allFinite())
    throw FactorizationError("eval_G: system matrix has non-finite entries");

  Eigen::LLT<Matrix<Scalar>> llt(M);
  if (llt.info() != Eigen::Success)
    throw FactorizationError("eval_G: system matrix is not positive definite");
  const Vector<Scalar> v = llt.solve(problem.y);

  GEvaluation<Scalar> out;
  out.value = problem.y.dot(v);
  if (want_gradient)
    out.gradient = -(problem.X.transpose() * v).array().square().matrix() / problem.rho;
  return out;
}

}  // namespace detail

template <typename Scalar>
Scalar eval_objective_G(const RegressionProblem<Scalar>& problem, const Vector<Scalar>& u) {
  return detail::eval_G(problem, u, false).value;
}

template <typename Scalar>
Vector<Scalar> eval_gradient_G(const RegressionProblem<Scalar>& problem,
                               const Vector<Scalar>& u) {
  return detail::eval_G(problem, u, true).gradient;
}

// Objective and gradient from a single factorization.
template <typename Scalar>
std::pair<Scalar, Vector<Scalar>> eval_objective_and_gradient_G(
    const RegressionProblem<Scalar>& problem, const Vector<Scalar>& u) {
  auto e = detail::eval_G(problem, u, true);
  return {e.value, std::move(e.gradient)};
}

// Indices of the k largest entries of u, ties broken toward the lower index;
// returned in ascending order.
template <typename Scalar>
std::vector<Index> select_support(const Vector<Scalar>& u, Index k) {
  const Index n = u.size();
  k = std::clamp<Index>(k, 0, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Index a, Index b) {
    if (u[a] != u[b]) return u[a] > u[b];
    return a < b;
  });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

// Rounds a relaxed iterate to a k-sparse weight vector: keep the floor(k)
// largest entries of u, refit ridge on that support through the normal
// equations (X_S^T X_S + rho I) w_S = X_S^T y, zero elsewhere.
template <typename Scalar>
Vector<Scalar> round_support(const RegressionProblem<Scalar>& problem, const Vector<Scalar>& u) {
  const Index n = problem.features();
  const Index k_int = std::min<Index>(n, static_cast<Index>(std::floor(problem.k)));
  Vector<Scalar> w = Vector<Scalar>::Zero(n);
  if (k_int == 0) return w;

  const std::vector<Index> support = select_support(u, k_int);
  const Index s = static_cast<Index>(support.size());
  Matrix<Scalar> Xs(problem.samples(), s);
  for (Index j = 0; j < s; ++j) Xs.col(j) = problem.X.col(support[static_cast<std::size_t>(j)]);

  Matrix<Scalar> G = Matrix<Scalar>::Identity(s, s) * problem.rho;
  G.template selfadjointView<Eigen::Lower>().rankUpdate(Xs.transpose());
  Eigen::LLT<Matrix<Scalar>> llt(G);
  if (llt.info() != Eigen::Success)
    throw FactorizationError("round_support: refit system is not positive definite");
  const Vector<Scalar> ws = llt.solve(Xs.transpose() * problem.y);
  for (Index j = 0; j < s; ++j) w[support[static_cast<std::size_t>(j)]] = ws[j];
  return w;
}

// Support-recovery accuracy: the fraction of true nonzero positions that the
// estimate marks nonzero.
template <typename Scalar>
Scalar accuracy(const Vector<Scalar>& w, const Vector<Scalar>& w_true) {
  if (w.size() != w_true.size())
    throw std::invalid_argument("accuracy: length mismatch");
  Index hits = 0, truth = 0;
  for (Index i = 0; i < w.size(); ++i) {
    if (w_true[i] != Scalar(0)) {
      ++truth;
      if (w[i] != Scalar(0)) ++hits;
    }
  }
  if (truth == 0) throw std::invalid_argument("accuracy: w_true has no nonzero entries");
  return Scalar(hits) / Scalar(truth);
}

namespace detail {

template <typename Scalar>
Vector<Scalar> project_onto_cap(const Vector<Scalar>& v, Scalar k, InnerProjector projector) {
  ProjectionProblem<Scalar> p;
  p.y = v;
  p.k = k;
  p.variant = Variant::InequalityCap;
  if (projector == InnerProjector::ExactSort) return project_exact_sort(p).x;
  return project_capped_simplex(p).x;
}

}  // namespace detail

// Spectral projected gradient with Barzilai-Borwein step lengths and a
// nonmonotone (memory `history`) line search; every trial point is projected
// onto the capped simplex, so all iterates stay feasible. Runs max_outer
// accepted steps (the experiment protocol fixes 50) unless the projected
// unit step becomes stationary first, and returns the best-objective iterate
// together with its rounded sparse refit.
template <typename Scalar>
FitResult<Scalar> pqn_solve(const RegressionProblem<Scalar>& problem,
                            const PqnConfig<Scalar>& config = {}) {
  problem.validate();
  config.validate();

  const Index n = problem.features();
  const Scalar k = problem.k;
  const auto project = [&](const Vector<Scalar>& v) {
    return detail::project_onto_cap(v, k, config.projector);
  };

  Vector<Scalar> u = Vector<Scalar>::Constant(n, k / Scalar(n));
  auto [f, g] = eval_objective_and_gradient_G(problem, u);

  FitResult<Scalar> result;
  result.objective_trace.push_back(f);
  if (config.observer) config.observer(0, f, u);

  Scalar f_best = f;
  Vector<Scalar> u_best = u;
  std::vector<Scalar> recent{f};

  const Vector<Scalar> unit_step = project(u - g) - u;
  Scalar alpha = Scalar(1) / std::max(unit_step.template lpNorm<Eigen::Infinity>(),
                                      config.alpha_min);
  alpha = std::clamp(alpha, config.alpha_min, config.alpha_max);

  Status status = Status::Converged;
  int iters = 0;
  for (int t = 0; t < config.max_outer; ++t) {
    if ((project(u - g) - u).template lpNorm<Eigen::Infinity>() <= config.pg_tol) break;

    const Scalar f_ref = *std::max_element(recent.begin(), recent.end());
    Scalar lambda = Scalar(1);
    Vector<Scalar> u_trial;
    Scalar f_trial = f;
    Scalar delta = Scalar(0);
    bool accepted = false;
    for (int b = 0; b < config.max_backtracks; ++b) {
      u_trial = project(u - (lambda * alpha) * g);
      delta = g.dot(u_trial - u);  // <= 0 for a projected gradient trial
      f_trial = eval_objective_G(problem, u_trial);
      if (f_trial <= f_ref + config.suff_decrease * delta) {
        accepted = true;
        break;
      }
      lambda /= Scalar(2);
    }
    if (!accepted) {
      status = Status::LineSearchStalled;
      break;
    }

    const Vector<Scalar> s = u_trial - u;
    auto [f_new, g_new] = eval_objective_and_gradient_G(problem, u_trial);
    const Vector<Scalar> yv = g_new - g;
    const Scalar sy = s.dot(yv);
    alpha = sy > Scalar(0) ? std::clamp(s.squaredNorm() / sy, config.alpha_min, config.alpha_max)
                           : config.alpha_max;

    u = std::move(u_trial);
    f = f_new;
    g = std::move(g_new);
    ++iters;

    result.objective_trace.push_back(f);
    if (config.observer) config.observer(iters, f, u);
    recent.push_back(f);
    if (static_cast<int>(recent.size()) > config.history) recent.erase(recent.begin());
    if (f < f_best) {
      f_best = f;
      u_best = u;
    }
    if (s.template lpNorm<Eigen::Infinity>() == Scalar(0)) break;
  }

  result.u = std::move(u_best);
  result.w = round_support(problem, result.u);
  result.support = select_support(result.u, std::min<Index>(n, static_cast<Index>(std::floor(k))));
  result.iterations = iters;
  result.status = status;
  return result;
}

}  // namespace cspx
