#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cspx/rng.hpp"
#include "cspx/summation.hpp"

namespace {

// Reference sum in extended precision.
long double exact_sum(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += static_cast<long double>(x);
  return s;
}

}  // namespace

TEST_CASE("compensated sum tracks the exact sum of nonnegative terms") {
  cspx::Xoshiro256pp gen(42);
  std::vector<double> v(1'000'000);
  for (auto& x : v) x = gen.uniform01();

  cspx::KahanSum<double> acc;
  for (double x : v) acc.add(x);
  const long double ref = exact_sum(v);
  const double ulp = std::ldexp(1.0, std::ilogb(static_cast<double>(ref)) - 52);
  CHECK(std::abs(static_cast<long double>(acc.value()) - ref) <= 4.0L * ulp);
}

TEST_CASE("compensated sum handles widely spread magnitudes") {
  std::vector<double> v;
  cspx::Xoshiro256pp gen(7);
  for (int i = 0; i < 200'000; ++i) {
    v.push_back(gen.uniform01() * 1e12);
    v.push_back(gen.uniform01() * 1e-12);
  }
  cspx::KahanSum<double> acc;
  for (double x : v) acc.add(x);
  const long double ref = exact_sum(v);
  const double ulp = std::ldexp(1.0, std::ilogb(static_cast<double>(ref)) - 52);
  CHECK(std::abs(static_cast<long double>(acc.value()) - ref) <= 4.0L * ulp);
}

TEST_CASE("kahan_sum matches the accumulator on Eigen expressions") {
  Eigen::VectorXd v(5);
  v << 0.1, 0.2, 0.3, 0.4, 0.5;
  CHECK(cspx::kahan_sum(v) == doctest::Approx(1.5).epsilon(1e-15));
}
