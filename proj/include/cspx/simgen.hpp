#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cspx/rng.hpp"
#include "cspx/types.hpp"

namespace cspx {

struct SimulationConfig {
  Index m{100};            // samples
  Index n{1000};           // features
  double p{0.2};           // lag-1 correlation of the design rows
  Index k_true{20};        // planted nonzero count
  double snr{6.0};         // ||X w_true||^2 / ||eps||^2
  std::uint64_t seed{0};

  void validate() const {
    if (m < 1 || n < 1) throw std::invalid_argument("SimulationConfig: m, n must be >= 1");
    if (k_true < 1 || k_true > n)
      throw std::invalid_argument("SimulationConfig: k_true must lie in [1, n]");
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("SimulationConfig: p must be in [0,1)");
    if (!(snr > 0.0)) throw std::invalid_argument("SimulationConfig: snr must be positive");
  }
};

template <typename Scalar = double>
struct Dataset {
  Matrix<Scalar> X;
  Vector<Scalar> y;
  Vector<Scalar> w_true;
};

// n i.i.d. uniforms on [-alpha, alpha]; bit-reproducible per (n, alpha, seed).
inline Vector<double> sample_projection_input(Index n, double alpha, std::uint64_t seed) {
  Xoshiro256pp gen = make_stream(seed, stream::kProjectionInput);
  Vector<double> y(n);
  for (Index i = 0; i < n; ++i) y[i] = alpha * (2.0 * gen.uniform01() - 1.0);
  return y;
}

// Gaussian design with Toeplitz covariance p^|i-j| per row, realized by the
// stationary AR(1) recurrence x_{j+1} = p x_j + sqrt(1-p^2) xi in O(n) per
// row. Each row draws from its own derived stream.
inline Matrix<double> sample_ar1_design(Index m, Index n, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("sample_ar1_design: p must be in [0,1)");
  Matrix<double> X(m, n);
  const double innov = std::sqrt(1.0 - p * p);
  for (Index r = 0; r < m; ++r) {
    Xoshiro256pp gen = make_stream(seed, stream::kDesignRow, static_cast<std::uint64_t>(r));
    double x = gen.normal();
    X(r, 0) = x;
    for (Index j = 1; j < n; ++j) {
      x = p * x + innov * gen.normal();
      X(r, j) = x;
    }
  }
  return X;
}

// Weight vector in {-1, 0, +1}^n with exactly k_true nonzeros: positions by
// partial Fisher-Yates without replacement, signs by fair coin.
inline Vector<double> sample_true_weights(Index n, Index k_true, std::uint64_t seed) {
  if (k_true < 1 || k_true > n)
    throw std::invalid_argument("sample_true_weights: k_true must lie in [1, n]");
  Xoshiro256pp gen = make_stream(seed, stream::kTrueWeights);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index(0));
  Vector<double> w = Vector<double>::Zero(n);
  for (Index i = 0; i < k_true; ++i) {
    const Index j = i + static_cast<Index>(gen.uniform_below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    w[idx[static_cast<std::size_t>(i)]] = (gen.next() & 1u) ? 1.0 : -1.0;
  }
  return w;
}

// Adds Gaussian noise rescaled so that sqrt(snr) = ||signal|| / ||eps|| holds
// exactly (up to rounding of the scale factor).
inline Vector<double> add_snr_noise(const Vector<double>& signal, double snr,
                                    std::uint64_t seed) {
  const double signal_norm = signal.norm();
  if (!(signal_norm > 0.0)) throw std::invalid_argument("add_snr_noise: signal must be nonzero");
  if (!(snr > 0.0)) throw std::invalid_argument("add_snr_noise: snr must be positive");
  Xoshiro256pp gen = make_stream(seed, stream::kNoise);
  Vector<double> eps(signal.size());
  for (Index i = 0; i < signal.size(); ++i) eps[i] = gen.normal();
  const double scale = signal_norm / (std::sqrt(snr) * eps.norm());
  return signal + scale * eps;
}

// Full regression instance per the simulation protocol: AR(1) design, planted
// +/-1 weights, response with exact-SNR noise. Deterministic per config.
inline Dataset<double> generate_dataset(const SimulationConfig& config) {
  config.validate();
  Dataset<double> d;
  d.X = sample_ar1_design(config.m, config.n, config.p, config.seed);
  d.w_true = sample_true_weights(config.n, config.k_true, config.seed);
  d.y = add_snr_noise(d.X * d.w_true, config.snr, config.seed);
  return d;
}

}  // namespace cspx
