#pragma once

#include <cmath>

namespace catprobe {

// Neumaier-compensated running sum. Used wherever merge order is fixed but
// intermediate rounding must stay below the 1e-12 reproducibility budget.
class CompensatedSum {
 public:
  CompensatedSum() = default;

  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  // Merging folds the other sum's total and residual in sequence; callers
  // merge partial sums in a fixed (block-index) order.
  void merge(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace catprobe
