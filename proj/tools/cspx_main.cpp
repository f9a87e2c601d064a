// cspx: project vectors onto the k-capped simplex, benchmark the solvers,
// and run the relaxed sparse-regression pipeline on binary or text inputs.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cspx/baselines.hpp"
#include "cspx/io.hpp"
#include "cspx/projection.hpp"
#include "cspx/regression.hpp"
#include "cspx/simgen.hpp"

namespace {

using cspx::Index;
using cspx::Status;
using cspx::Variant;

int exit_code_for(Status s) {
  switch (s) {
    case Status::Converged: return 0;
    case Status::InfeasibleInput: return 2;
    case Status::NoRoot: return 2;
    case Status::MaxItersReached: return 3;
    case Status::LineSearchStalled: return 3;
  }
  return 3;
}

Variant parse_variant(const std::string& s) {
  if (s == "equality") return Variant::EqualitySlice;
  if (s == "inequality") return Variant::InequalityCap;
  throw CLI::ValidationError("--variant must be 'equality' or 'inequality'");
}

struct SolveOutcome {
  cspx::ProjectionResult<double> result;
  double seconds{0};
};

// Runs one solver on one problem; the timer wraps the solve only.
SolveOutcome run_method(const std::string& method, const cspx::ProjectionProblem<double>& problem,
                        const cspx::NewtonConfig<double>& config, double bisect_tol) {
  SolveOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  if (method == "newton") {
    out.result = cspx::project_capped_simplex(problem, config);
  } else if (method == "sort") {
    out.result = cspx::project_exact_sort(problem);
  } else if (method == "bisect") {
    out.result = cspx::project_bisection(problem, bisect_tol);
  } else {
    throw CLI::ValidationError("--method must be one of newton|sort|bisect");
  }
  const auto t1 = std::chrono::steady_clock::now();
  out.seconds = std::chrono::duration<double>(t1 - t0).count();
  return out;
}

int worker_count() {
  if (const char* env = std::getenv("CSPX_THREADS")) {
    const int t = std::atoi(env);
    if (t >= 1) return t;
  }
  return 1;
}

struct Stats {
  double mean{0};
  double stddev{0};
};

Stats mean_std(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  double sum = 0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double acc = 0;
    for (double x : v) acc += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(v.size() - 1));
  }
  return s;
}

// ---- project ---------------------------------------------------------------

struct ProjectArgs {
  std::string input;
  std::string out;
  double k{0};
  std::string variant{"equality"};
  std::string method{"newton"};
  std::optional<double> tol;
  std::optional<double> gamma0;
  int max_iters{100};
};

int cmd_project(const ProjectArgs& a) {
  cspx::ProjectionProblem<double> problem;
  problem.y = cspx::io::read_vector_auto(a.input);
  problem.k = a.k;
  problem.variant = parse_variant(a.variant);

  cspx::NewtonConfig<double> config;
  config.max_iters = a.max_iters;
  if (a.tol) config.residual_tol = *a.tol;
  if (a.gamma0) config.gamma0 = *a.gamma0;
  const double bisect_tol = a.tol ? *a.tol : 1e-12;

  const SolveOutcome run = run_method(a.method, problem, config, bisect_tol);

  if (run.result.x.size() > 0) cspx::io::write_vector(a.out, run.result.x);

  cspx::io::RunReport report;
  report.method = a.method;
  report.n = problem.y.size();
  report.k = a.k;
  report.variant = problem.variant;
  report.iterations = run.result.iterations;
  report.feasibility_gap = run.result.feasibility_gap;
  report.wall_time_seconds = run.seconds;
  report.seed = 0;
  report.status = run.result.status;
  std::cout << cspx::io::to_json_line(report) << "\n";
  return exit_code_for(run.result.status);
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  Index n{0};
  double k{0};
  double alpha{0.5};
  int trials{100};
  std::vector<std::string> methods{};
  std::string variant{"equality"};
  std::optional<double> tol;
  int max_iters{100};
  std::uint64_t seed{0};
  std::string out;
};

struct TrialRecord {
  int iterations{0};
  double gap{0};
  double seconds{0};
  Status status{Status::Converged};
};

int cmd_bench(const BenchArgs& a) {
  const std::vector<std::string> methods = a.methods.empty()
                                               ? std::vector<std::string>{"newton"}
                                               : a.methods;
  const Variant variant = parse_variant(a.variant);

  cspx::NewtonConfig<double> config;
  config.max_iters = a.max_iters;
  if (a.tol) config.residual_tol = *a.tol;
  const double bisect_tol = a.tol ? *a.tol : 1e-12;

  // trials x methods result table, filled by a small worker pool; per-trial
  // seeds are seed + trial so the content is independent of scheduling.
  std::vector<std::vector<TrialRecord>> records(static_cast<std::size_t>(a.trials));
  std::atomic<int> next{0};
  auto work = [&]() {
    for (int t = next.fetch_add(1); t < a.trials; t = next.fetch_add(1)) {
      cspx::ProjectionProblem<double> problem;
      problem.y = cspx::sample_projection_input(a.n, a.alpha, a.seed + static_cast<std::uint64_t>(t));
      problem.k = a.k;
      problem.variant = variant;
      auto& row = records[static_cast<std::size_t>(t)];
      row.reserve(methods.size());
      for (const auto& method : methods) {
        const SolveOutcome run = run_method(method, problem, config, bisect_tol);
        row.push_back({run.result.iterations, run.result.feasibility_gap, run.seconds,
                       run.result.status});
      }
    }
  };
  const int threads = std::min<int>(worker_count(), std::max(1, a.trials));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  std::ofstream csv(a.out, std::ios::app);
  if (!csv) throw cspx::io::ParseError("cannot open for writing: " + a.out);

  int exit_code = 0;
  for (int t = 0; t < a.trials; ++t) {
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const TrialRecord& r = records[static_cast<std::size_t>(t)][mi];
      cspx::io::RunReport report;
      report.method = methods[mi];
      report.n = a.n;
      report.k = a.k;
      report.variant = variant;
      report.iterations = r.iterations;
      report.feasibility_gap = r.gap;
      report.wall_time_seconds = r.seconds;
      report.seed = a.seed + static_cast<std::uint64_t>(t);
      report.status = r.status;
      auto line = cspx::io::to_json(report);
      line["alpha"] = a.alpha;
      line["trial"] = t;
      csv << line.dump() << "\n";
      exit_code = std::max(exit_code, exit_code_for(r.status));
    }
  }

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    std::vector<double> times, iters;
    times.reserve(static_cast<std::size_t>(a.trials));
    iters.reserve(static_cast<std::size_t>(a.trials));
    for (int t = 0; t < a.trials; ++t) {
      times.push_back(records[static_cast<std::size_t>(t)][mi].seconds);
      iters.push_back(static_cast<double>(records[static_cast<std::size_t>(t)][mi].iterations));
    }
    const Stats ts = mean_std(times);
    const Stats is = mean_std(iters);
    std::ostringstream row;
    row << methods[mi] << ',' << a.n << ',' << a.k << ',' << a.alpha << ',' << a.trials << ','
        << ts.mean << ',' << ts.stddev << ',' << is.mean << ',' << is.stddev;
    csv << row.str() << "\n";
    std::cout << row.str() << "\n";
  }
  return exit_code;
}

// ---- regress ---------------------------------------------------------------

struct SimulateArgs {
  Index m{100};
  Index n{1000};
  double p{0.2};
  Index k_true{20};
  double snr{6.0};
  std::uint64_t seed{0};
  std::string out_x{"X.cspx"};
  std::string out_y{"y.cspx"};
  std::string out_w_true{"w_true.cspx"};
};

int cmd_regress_simulate(const SimulateArgs& a) {
  cspx::SimulationConfig config{a.m, a.n, a.p, a.k_true, a.snr, a.seed};
  const auto t0 = std::chrono::steady_clock::now();
  const cspx::Dataset<double> data = cspx::generate_dataset(config);
  const auto t1 = std::chrono::steady_clock::now();
  cspx::io::write_matrix(a.out_x, data.X);
  cspx::io::write_vector(a.out_y, data.y);
  cspx::io::write_vector(a.out_w_true, data.w_true);

  cspx::io::RunReport report;
  report.method = "simulate";
  report.n = a.n;
  report.k = static_cast<double>(a.k_true);
  report.variant = Variant::InequalityCap;
  report.wall_time_seconds = std::chrono::duration<double>(t1 - t0).count();
  report.seed = a.seed;
  std::cout << cspx::io::to_json_line(report) << "\n";
  return 0;
}

struct FitArgs {
  std::string x_path;
  std::string y_path;
  std::string w_true_path;
  double k{0};
  std::optional<double> rho;
  int max_iters{50};
  std::string projector{"newton"};
  std::string out_u{"u.cspx"};
  std::string out_w{"w.cspx"};
  std::string out_trace;
};

int cmd_regress_fit(const FitArgs& a) {
  cspx::RegressionProblem<double> problem;
  problem.X = cspx::io::read_matrix(a.x_path);
  problem.y = cspx::io::read_vector_auto(a.y_path);
  if (problem.y.size() != problem.X.rows()) {
    std::cerr << "cspx: X has " << problem.X.rows() << " rows but y has " << problem.y.size()
              << " entries\n";
    return 2;
  }
  problem.k = a.k;
  problem.rho = a.rho ? *a.rho : 1.0 / std::sqrt(static_cast<double>(problem.X.rows()));

  cspx::PqnConfig<double> config;
  config.max_outer = a.max_iters;
  if (a.projector == "sort")
    config.projector = cspx::InnerProjector::ExactSort;
  else if (a.projector != "newton")
    throw CLI::ValidationError("--projector must be 'newton' or 'sort'");

  const auto t0 = std::chrono::steady_clock::now();
  const cspx::FitResult<double> fit = cspx::pqn_solve(problem, config);
  const auto t1 = std::chrono::steady_clock::now();

  cspx::io::write_vector(a.out_u, fit.u);
  cspx::io::write_vector(a.out_w, fit.w);
  if (!a.out_trace.empty()) {
    Eigen::Map<const cspx::Vector<double>> trace(fit.objective_trace.data(),
                                                 static_cast<Index>(fit.objective_trace.size()));
    cspx::io::write_vector(a.out_trace, trace);
  }

  cspx::io::RunReport report;
  report.method = "pqn";
  report.n = problem.X.cols();
  report.k = a.k;
  report.variant = Variant::InequalityCap;
  report.iterations = fit.iterations;
  report.feasibility_gap = cspx::feasibility_gap(fit.u, a.k, Variant::InequalityCap);
  report.wall_time_seconds = std::chrono::duration<double>(t1 - t0).count();
  report.seed = 0;
  report.status = fit.status;
  auto line = cspx::io::to_json(report);
  line["objective"] = fit.objective_trace.empty() ? 0.0 : fit.objective_trace.back();
  line["support"] = fit.support;
  if (!a.w_true_path.empty()) {
    const cspx::Vector<double> w_true = cspx::io::read_vector_auto(a.w_true_path);
    line["acc"] = cspx::accuracy(fit.w, w_true);
  }
  std::cout << line.dump() << "\n";
  return exit_code_for(fit.status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-capped simplex projection toolkit"};
  app.require_subcommand(1);

  ProjectArgs pa;
  auto* project = app.add_subcommand("project", "project a vector onto the capped simplex");
  project->add_option("input", pa.input, "input vector (binary CSPX or decimal text)")->required();
  project->add_option("--k", pa.k, "cap / slice level")->required();
  project->add_option("--variant", pa.variant, "equality|inequality (default equality)");
  project->add_option("--method", pa.method, "newton|sort|bisect (default newton)");
  project->add_option("--tol", pa.tol, "residual tolerance (newton) or bracket width (bisect)");
  project->add_option("--gamma0", pa.gamma0, "initial multiplier override (newton)");
  project->add_option("--max-iters", pa.max_iters, "iteration cap (default 100)");
  project->add_option("--out", pa.out, "output vector file")->required();

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "benchmark solvers on sampled inputs");
  bench->add_option("--n", ba.n, "problem dimension")->required();
  bench->add_option("--k", ba.k, "cap / slice level")->required();
  bench->add_option("--alpha", ba.alpha, "inputs drawn uniformly from [-alpha, alpha]");
  bench->add_option("--trials", ba.trials, "number of repetitions (default 100)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--method", ba.methods, "newton|sort|bisect, repeatable (default newton)");
  bench->add_option("--variant", ba.variant, "equality|inequality (default equality)");
  bench->add_option("--tol", ba.tol, "residual tolerance (newton) or bracket width (bisect)");
  bench->add_option("--max-iters", ba.max_iters, "iteration cap (default 100)");
  bench->add_option("--seed", ba.seed, "base seed; trial t uses seed + t");
  bench->add_option("--out", ba.out, "report/CSV sink (appended)")->required();

  auto* regress = app.add_subcommand("regress", "relaxed sparse regression");
  regress->require_subcommand(1);

  SimulateArgs sa;
  auto* simulate = regress->add_subcommand("simulate", "generate a synthetic dataset");
  simulate->add_option("--m", sa.m, "sample count");
  simulate->add_option("--n", sa.n, "feature count");
  simulate->add_option("--p", sa.p, "design lag-1 correlation in [0,1)");
  simulate->add_option("--k-true", sa.k_true, "planted nonzero count");
  simulate->add_option("--snr", sa.snr, "signal-to-noise ratio");
  simulate->add_option("--seed", sa.seed, "seed");
  simulate->add_option("--out-x", sa.out_x, "design matrix output (default X.cspx)");
  simulate->add_option("--out-y", sa.out_y, "response output (default y.cspx)");
  simulate->add_option("--out-w-true", sa.out_w_true, "true weights output (default w_true.cspx)");

  FitArgs fa;
  auto* fit = regress->add_subcommand("fit", "fit the relaxed sparse regression");
  fit->add_option("--x", fa.x_path, "design matrix file (version-2 CSPX)")->required();
  fit->add_option("--y", fa.y_path, "response vector file")->required();
  fit->add_option("--k", fa.k, "sparsity budget")->required();
  fit->add_option("--rho", fa.rho, "ridge weight (default 1/sqrt(m))");
  fit->add_option("--max-iters", fa.max_iters, "outer iterations (default 50)");
  fit->add_option("--projector", fa.projector, "inner projection: newton|sort (default newton)");
  fit->add_option("--w-true", fa.w_true_path, "true weights; enables the accuracy field");
  fit->add_option("--out-u", fa.out_u, "relaxed iterate output (default u.cspx)");
  fit->add_option("--out-w", fa.out_w, "sparse weights output (default w.cspx)");
  fit->add_option("--out-trace", fa.out_trace, "objective trace output (optional)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*project) return cmd_project(pa);
    if (*bench) return cmd_bench(ba);
    if (*simulate) return cmd_regress_simulate(sa);
    if (*fit) return cmd_regress_fit(fa);
  } catch (const cspx::io::ParseError& e) {
    std::cerr << "cspx: " << e.what() << "\n";
    return 1;
  } catch (const cspx::FactorizationError& e) {
    std::cerr << "cspx: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "cspx: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "cspx: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
