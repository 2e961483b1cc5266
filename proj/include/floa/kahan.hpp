#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace floa {

// Kahan compensated accumulator. Used for every reduction that feeds the
// deterministic simulation path: with a fixed summation order the results
// are bitwise reproducible and insensitive to term-count growth.
class KahanSum {
public:
    void add(double x) {
        const double y = x - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }

    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double kahan_total(std::span<const double> xs) {
    KahanSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

// Element-wise compensated accumulation of whole vectors (fixed call order).
class KahanVectorSum {
public:
    explicit KahanVectorSum(std::size_t dim) : sum_(dim, 0.0), comp_(dim, 0.0) {}

    void add_scaled(std::span<const double> v, double scale) {
        for (std::size_t d = 0; d < sum_.size(); ++d) {
            const double y = scale * v[d] - comp_[d];
            const double t = sum_[d] + y;
            comp_[d] = (t - sum_[d]) - y;
            sum_[d] = t;
        }
    }

    void add(std::span<const double> v) { add_scaled(v, 1.0); }

    const std::vector<double>& value() const { return sum_; }
    std::vector<double> take() { return std::move(sum_); }

private:
    std::vector<double> sum_;
    std::vector<double> comp_;
};

} // namespace floa
