#pragma once

// Shared helpers for the test suites: seeded instance generators built on the
// library's pinned PRNG so every test is reproducible.

#include <cstdint>

#include "cspx/rng.hpp"
#include "cspx/types.hpp"

namespace cspx_test {

inline constexpr std::uint64_t kTestPurpose = 0x7E57A0A0ULL;

inline cspx::Xoshiro256pp rng(std::uint64_t seed) {
  return cspx::make_stream(seed, kTestPurpose);
}

inline cspx::Vector<double> random_vector(cspx::Xoshiro256pp& gen, cspx::Index n, double alpha) {
  cspx::Vector<double> y(n);
  for (cspx::Index i = 0; i < n; ++i) y[i] = gen.uniform(-alpha, alpha);
  return y;
}

// A feasible point of the equality slice { z in [0,1]^n : sum z = k }, built
// without any projection machinery: draw a box point and rescale it (or its
// complement) onto the slice.
inline cspx::Vector<double> random_slice_point(cspx::Xoshiro256pp& gen, cspx::Index n,
                                               double k) {
  cspx::Vector<double> w(n);
  for (cspx::Index i = 0; i < n; ++i) w[i] = gen.uniform01();
  const double s = w.sum();
  if (s >= k) return w * (k / s);
  const double nn = static_cast<double>(n);
  return (1.0 - (nn - k) / (nn - s)) + ((nn - k) / (nn - s)) * w.array();
}

}  // namespace cspx_test
