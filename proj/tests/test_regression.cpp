#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "cspx/regression.hpp"
#include "cspx/simgen.hpp"
#include "test_util.hpp"

using cspx::Index;
using cspx::InnerProjector;
using cspx::Matrix;
using cspx::PqnConfig;
using cspx::RegressionProblem;
using cspx::Status;
using cspx::Vector;

namespace {

Vector<double> vec(std::initializer_list<double> v) {
  Vector<double> out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

RegressionProblem<double> random_problem(cspx::Xoshiro256pp& gen, Index m, Index n) {
  RegressionProblem<double> p;
  p.X.resize(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) p.X(i, j) = gen.normal();
  p.y.resize(m);
  for (Index i = 0; i < m; ++i) p.y[i] = gen.normal();
  p.rho = 0.5 + gen.uniform01();
  p.k = 1.0 + gen.uniform(0.0, static_cast<double>(n) - 1.0);
  return p;
}

// Protocol-style small instance: +-1 planted weights, exact-SNR noise.
RegressionProblem<double> planted_problem(std::uint64_t seed, Index m, Index n, Index k,
                                          Vector<double>* w_true_out = nullptr) {
  auto gen = cspx::make_stream(seed, 0x7e58);
  RegressionProblem<double> p;
  p.X.resize(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) p.X(i, j) = gen.normal();
  Vector<double> wt = Vector<double>::Zero(n);
  for (Index j = 0; j < k; ++j) wt[j] = (gen.next() & 1u) ? 1.0 : -1.0;
  Vector<double> sig = p.X * wt;
  Vector<double> eps(m);
  for (Index i = 0; i < m; ++i) eps[i] = gen.normal();
  eps *= sig.norm() / (std::sqrt(6.0) * eps.norm());
  p.y = sig + eps;
  p.rho = 1.0 / std::sqrt(static_cast<double>(m));
  p.k = static_cast<double>(k);
  if (w_true_out) *w_true_out = wt;
  return p;
}

double objective_F(const RegressionProblem<double>& p, const Vector<double>& w) {
  return (p.y - p.X * w).squaredNorm() + 0.5 * p.rho * w.squaredNorm();
}

}  // namespace

TEST_CASE("objective at u = 0 equals the squared response norm") {
  auto gen = cspx_test::rng(41);
  const auto p = random_problem(gen, 6, 9);
  const Vector<double> zero = Vector<double>::Zero(9);
  CHECK(cspx::eval_objective_G(p, zero) == doctest::Approx(p.y.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("scalar objective and gradient match hand arithmetic") {
  RegressionProblem<double> p;
  p.X = Matrix<double>::Constant(1, 1, 1.0);
  p.y = vec({2.0});
  p.rho = 1.0;
  p.k = 1.0;
  const Vector<double> u = vec({1.0});
  CHECK(cspx::eval_objective_G(p, u) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(cspx::eval_gradient_G(p, u)[0] == doctest::Approx(-1.0).epsilon(1e-14));

  RegressionProblem<double> q;
  q.X = Matrix<double>::Constant(1, 2, 1.0);
  q.y = vec({1.0});
  q.rho = 1.0;
  q.k = 2.0;
  CHECK(cspx::eval_objective_G(q, vec({1.0, 1.0})) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("the gradient is nonpositive everywhere") {
  auto gen = cspx_test::rng(42);
  for (int rep = 0; rep < 50; ++rep) {
    const auto p = random_problem(gen, 1 + static_cast<Index>(gen.uniform_below(5)),
                                  1 + static_cast<Index>(gen.uniform_below(8)));
    Vector<double> u(p.features());
    for (Index j = 0; j < u.size(); ++j) u[j] = gen.uniform01();
    CHECK(cspx::eval_gradient_G(p, u).maxCoeff() <= 0.0);
  }
}

TEST_CASE("the gradient matches central finite differences") {
  auto gen = cspx_test::rng(43);
  for (int rep = 0; rep < 10; ++rep) {
    const Index m = 1 + static_cast<Index>(gen.uniform_below(5));
    const Index n = 1 + static_cast<Index>(gen.uniform_below(8));
    const auto p = random_problem(gen, m, n);
    Vector<double> u(n);
    for (Index j = 0; j < n; ++j) u[j] = 0.05 + 0.9 * gen.uniform01();
    const Vector<double> g = cspx::eval_gradient_G(p, u);
    const double scale = g.cwiseAbs().maxCoeff();
    const double h = 1e-6;
    for (Index j = 0; j < n; ++j) {
      Vector<double> up = u, dn = u;
      up[j] += h;
      dn[j] -= h;
      const double fd = (cspx::eval_objective_G(p, up) - cspx::eval_objective_G(p, dn)) / (2 * h);
      CHECK(std::abs(fd - g[j]) <= 1e-5 * std::max({std::abs(g[j]), 1e-2 * scale, 1e-10}));
    }
  }
}

TEST_CASE("joint evaluation shares the factorization result") {
  auto gen = cspx_test::rng(44);
  const auto p = random_problem(gen, 5, 7);
  Vector<double> u(7);
  for (Index j = 0; j < 7; ++j) u[j] = gen.uniform01();
  const auto [f, g] = cspx::eval_objective_and_gradient_G(p, u);
  CHECK(f == cspx::eval_objective_G(p, u));
  CHECK(g == cspx::eval_gradient_G(p, u));
}

TEST_CASE("a non-evaluable iterate raises FactorizationError") {
  RegressionProblem<double> p;
  p.X = Matrix<double>::Constant(1, 1, 1.0);
  p.y = vec({1.0});
  p.rho = 1.0;
  p.k = 1.0;
  CHECK_THROWS_AS(cspx::eval_objective_G(p, vec({std::numeric_limits<double>::quiet_NaN()})),
                  cspx::FactorizationError);
}

TEST_CASE("problem invariants are validated") {
  RegressionProblem<double> p;
  p.X = Matrix<double>::Identity(3, 3);
  p.y = vec({1.0, 2.0});  // wrong length
  p.rho = 1.0;
  p.k = 1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.y = vec({1.0, 2.0, 3.0});
  p.rho = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.rho = 1.0;
  p.k = 4.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("support selection keeps the largest entries, lowest index first") {
  CHECK(cspx::select_support(vec({0.9, 0.1, 0.8}), 2) == std::vector<Index>{0, 2});
  CHECK(cspx::select_support(vec({0.5, 0.5, 0.5}), 1) == std::vector<Index>{0});
  CHECK(cspx::select_support(vec({0.1, 0.2}), 5) == std::vector<Index>{0, 1});
}

TEST_CASE("rounding refits ridge on the selected support") {
  RegressionProblem<double> p;
  p.X = Matrix<double>::Identity(3, 3);
  p.y = vec({3.0, 0.0, 4.0});
  p.rho = 1.0;
  p.k = 2.0;
  const Vector<double> w = cspx::round_support(p, vec({0.5, 0.0, 0.5}));
  CHECK((w - vec({1.5, 0.0, 2.0})).cwiseAbs().maxCoeff() <= 1e-12);

  p.k = 0.5;  // floor(k) = 0 keeps nothing
  CHECK(cspx::round_support(p, vec({0.5, 0.0, 0.5})) == vec({0.0, 0.0, 0.0}));

  p.k = 3.0;  // full support keeps all coordinates; w1 refits to y1 / 2 = 0
  const Vector<double> wf = cspx::round_support(p, vec({0.2, 0.9, 0.4}));
  CHECK((wf - vec({1.5, 0.0, 2.0})).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("accuracy counts recovered nonzero positions") {
  CHECK(cspx::accuracy(vec({1.0, 0.0, -2.0}), vec({1.0, 0.0, -2.0})) == 1.0);
  CHECK(cspx::accuracy(vec({1.0, 0.0, 1.0}), vec({1.0, 1.0, 0.0})) == 0.5);
  CHECK(cspx::accuracy(vec({0.0, 0.0}), vec({1.0, 0.0})) == 0.0);
  CHECK_THROWS_AS(cspx::accuracy(vec({1.0}), vec({0.0})), std::invalid_argument);
}

TEST_CASE("every accepted iterate is feasible") {
  const auto p = planted_problem(5, 40, 120, 8);
  PqnConfig<double> config;
  int calls = 0;
  config.observer = [&](int, double, const Vector<double>& u) {
    ++calls;
    CHECK(u.minCoeff() >= 0.0);
    CHECK(u.maxCoeff() <= 1.0);
    CHECK(u.sum() <= p.k + 1e-8);
  };
  const auto fit = cspx::pqn_solve(p, config);
  CHECK(calls == fit.iterations + 1);
  CHECK(fit.status == Status::Converged);
}

TEST_CASE("the objective trace obeys the nonmonotone descent contract") {
  const auto p = planted_problem(6, 30, 100, 6);
  const auto fit = cspx::pqn_solve(p, {});
  const auto& tr = fit.objective_trace;
  REQUIRE(tr.size() >= 2);
  for (std::size_t t = 1; t < tr.size(); ++t) {
    double ref = -std::numeric_limits<double>::infinity();
    for (std::size_t j = t >= 10 ? t - 10 : 0; j < t; ++j) ref = std::max(ref, tr[j]);
    CHECK(tr[t] <= ref + 1e-9 * std::max(1.0, std::abs(ref)));
  }
  // the reported iterate is the best one seen
  const double best = *std::min_element(tr.begin(), tr.end());
  CHECK(cspx::eval_objective_G(p, fit.u) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("an already optimal start terminates immediately") {
  // orthogonal design with an inactive cap: u = 1 is the unique minimizer,
  // and u0 = (k/n) 1 = 1 starts there
  RegressionProblem<double> p;
  p.X = Matrix<double>::Identity(4, 4);
  p.y = vec({3.0, 0.9, -2.0, 0.4});
  p.rho = 1.0;
  p.k = 4.0;
  const auto fit = cspx::pqn_solve(p, {});
  CHECK(fit.iterations == 0);
  CHECK(fit.status == Status::Converged);
  CHECK(fit.support == std::vector<Index>{0, 1, 2, 3});
  CHECK((fit.u - Vector<double>::Ones(4)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("a separable instance concentrates on the strongest coordinates") {
  // X = I: G(u) = sum y_i^2 / (1 + u_i); budget 2 goes to the two largest
  RegressionProblem<double> p;
  p.X = Matrix<double>::Identity(4, 4);
  p.y = vec({3.0, 0.9, -2.0, 0.4});
  p.rho = 1.0;
  p.k = 2.0;
  const auto fit = cspx::pqn_solve(p, {});
  CHECK(fit.support == std::vector<Index>{0, 2});
  const double expected = 9.0 / 2 + 0.81 + 4.0 / 2 + 0.16;
  CHECK(*std::min_element(fit.objective_trace.begin(), fit.objective_trace.end()) ==
        doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("an unreachable sufficient-decrease target stalls the line search") {
  const auto p = planted_problem(7, 20, 50, 4);
  PqnConfig<double> config;
  config.suff_decrease = 1.0;  // convexity makes this unsatisfiable
  const auto fit = cspx::pqn_solve(p, config);
  CHECK(fit.status == Status::LineSearchStalled);
  CHECK(fit.iterations == 0);
  CHECK(fit.u.size() == 50);  // best iterate still returned
}

TEST_CASE("the objective is convex along random segments") {
  auto gen = cspx_test::rng(45);
  for (int rep = 0; rep < 40; ++rep) {
    const auto p = random_problem(gen, 2 + static_cast<Index>(gen.uniform_below(4)),
                                  2 + static_cast<Index>(gen.uniform_below(7)));
    const Index n = p.features();
    Vector<double> a(n), b(n);
    for (Index j = 0; j < n; ++j) {
      a[j] = gen.uniform01();
      b[j] = gen.uniform01();
    }
    const double theta = gen.uniform(0.05, 0.95);
    const Vector<double> mid = theta * a + (1.0 - theta) * b;
    CHECK(cspx::eval_objective_G(p, mid) <=
          theta * cspx::eval_objective_G(p, a) + (1.0 - theta) * cspx::eval_objective_G(p, b) +
              1e-9);
  }
}

TEST_CASE("swapping the inner projection leaves the fit unchanged") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    cspx::SimulationConfig sc;
    sc.m = 50;
    sc.n = 200;
    sc.p = 0.2;
    sc.k_true = 8;
    sc.snr = 6.0;
    sc.seed = seed;
    const auto data = cspx::generate_dataset(sc);
    RegressionProblem<double> p;
    p.X = data.X;
    p.y = data.y;
    p.rho = 1.0 / std::sqrt(50.0);
    p.k = 8.0;
    PqnConfig<double> cn, cs;
    cs.projector = InnerProjector::ExactSort;
    const auto fit_n = cspx::pqn_solve(p, cn);
    const auto fit_s = cspx::pqn_solve(p, cs);
    const double gn = *std::min_element(fit_n.objective_trace.begin(), fit_n.objective_trace.end());
    const double gs = *std::min_element(fit_s.objective_trace.begin(), fit_s.objective_trace.end());
    CHECK(std::abs(gn - gs) <= 1e-6 * std::max(std::abs(gn), 1e-12));
  }
}

TEST_CASE("small instances come within 5 percent of the exhaustive support search") {
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto gen = cspx::make_stream(seed, 0x7e58);
    const Index m = 8 + static_cast<Index>(gen.uniform_below(3));
    const Index n = 8 + static_cast<Index>(gen.uniform_below(3));
    const Index k = 2 + static_cast<Index>(gen.uniform_below(2));
    RegressionProblem<double> p;
    p.X.resize(m, n);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < n; ++j) p.X(i, j) = gen.normal();
    Vector<double> wt = Vector<double>::Zero(n);
    for (Index j = 0; j < k; ++j) wt[j] = (gen.next() & 1u) ? 1.0 : -1.0;
    const Vector<double> sig = p.X * wt;
    Vector<double> eps(m);
    for (Index i = 0; i < m; ++i) eps[i] = gen.normal();
    eps *= sig.norm() / (std::sqrt(6.0) * eps.norm());
    p.y = sig + eps;
    p.rho = 1.0 / std::sqrt(static_cast<double>(m));
    p.k = static_cast<double>(k);

    const auto refit_value = [&](const std::vector<Index>& support) {
      Vector<double> u = Vector<double>::Zero(n);
      for (Index j : support) u[j] = 1.0;
      return objective_F(p, cspx::round_support(p, u));
    };

    double best = std::numeric_limits<double>::infinity();
    std::vector<Index> comb(static_cast<std::size_t>(k));
    std::function<void(Index, Index)> enumerate = [&](Index start, Index depth) {
      if (depth == k) {
        best = std::min(best, refit_value(comb));
        return;
      }
      for (Index j = start; j < n; ++j) {
        comb[static_cast<std::size_t>(depth)] = j;
        enumerate(j + 1, depth + 1);
      }
    };
    enumerate(0, 0);

    const auto fit = cspx::pqn_solve(p, {});
    if (refit_value(fit.support) <= best * 1.05 + 1e-12) ++ok;
  }
  CHECK(ok >= 8);
}
