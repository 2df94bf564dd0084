#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace concatmc {

// Neumaier (improved Kahan) compensated summation.  Used everywhere sums of
// many small terms feed a reproducibility or tolerance requirement: lifetime
// accumulation across concatenation stages and Monte Carlo reductions.
class NeumaierSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// In-order compensated sum of a span; the reduction order is fixed by the
// array order, independent of how the values were produced.
inline double neumaier_total(std::span<const double> xs) {
    NeumaierSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace concatmc
