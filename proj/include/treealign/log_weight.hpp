#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <span>

namespace treealign {

inline constexpr double log_zero = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow; -inf is the additive identity.
inline double log_add(double a, double b) noexcept {
    if (a < b) std::swap(a, b);
    if (b == log_zero) return a;
    return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> xs) noexcept {
    double m = log_zero;
    for (double x : xs) m = std::max(m, x);
    if (m == log_zero) return log_zero;
    if (std::isinf(m)) return m;
    double sum = 0.0;
    for (double x : xs) sum += std::exp(x - m);
    return m + std::log(sum);
}

/// k * log(v) with the convention 0 * log(0) = 0.
inline double xlogy(double k, double v) noexcept {
    if (k == 0.0) return 0.0;
    return k * std::log(v);
}

/// Log of a nonnegative real. Zero is stored as -inf; NaN is never valid.
class LogWeight {
public:
    constexpr LogWeight() noexcept : value_(log_zero) {}
    explicit LogWeight(double log_value) noexcept : value_(log_value) { assert(!std::isnan(log_value)); }

    static LogWeight zero() noexcept { return LogWeight(); }
    static LogWeight one() noexcept { return LogWeight(0.0); }
    static LogWeight from_linear(double x) noexcept {
        assert(x >= 0.0);
        return LogWeight(x == 0.0 ? log_zero : std::log(x));
    }

    double log() const noexcept { return value_; }
    double linear() const noexcept { return std::exp(value_); }
    bool is_zero() const noexcept { return value_ == log_zero; }

    friend LogWeight operator+(LogWeight a, LogWeight b) noexcept { return LogWeight(log_add(a.value_, b.value_)); }
    friend LogWeight operator*(LogWeight a, LogWeight b) noexcept {
        if (a.is_zero() || b.is_zero()) return zero();
        return LogWeight(a.value_ + b.value_);
    }
    LogWeight& operator+=(LogWeight o) noexcept { return *this = *this + o; }
    LogWeight& operator*=(LogWeight o) noexcept { return *this = *this * o; }

    friend auto operator<=>(LogWeight a, LogWeight b) noexcept { return a.value_ <=> b.value_; }
    friend bool operator==(LogWeight a, LogWeight b) noexcept { return a.value_ == b.value_; }

private:
    double value_;
};

}  // namespace treealign
