#pragma once

#include <Eigen/Core>

namespace cspx {

// Compensated (Kahan) accumulator. For sums of nonnegative terms the result
// is within a few ulp of the exact sum regardless of the term count, which
// is what the residual and feasibility-gap evaluations rely on at n >= 1e8.
// Do not compile this translation unit with -ffast-math.
template <typename Scalar>
class KahanSum {
 public:
  void add(Scalar v) {
    const Scalar y = v - comp_;
    const Scalar t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  Scalar value() const { return sum_; }

 private:
  Scalar sum_{0};
  Scalar comp_{0};
};

template <typename Derived>
typename Derived::Scalar kahan_sum(const Eigen::DenseBase<Derived>& v) {
  KahanSum<typename Derived::Scalar> acc;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc.add(v.derived().coeff(i));
  return acc.value();
}

}  // namespace cspx
