#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"

namespace treealign {

struct PhasePoint {
    double lambda = 1.0;
    double s = 0.5;

    double lambda_s() const noexcept { return lambda * s; }
    double kappa() const noexcept { return lambda * s * s; }
    double s_bar() const noexcept { return 1.0 - s; }

    void validate() const {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be positive");
        if (!(s >= 0.0 && s <= 1.0)) throw DomainError("s must lie in [0,1]");
    }
};

/// Smallest root of x = exp(mu (x - 1)) in [0, 1]; exactly 1 for mu <= 1.
inline double extinction_probability(double mu) {
    if (!(mu > 0.0)) throw DomainError("extinction_probability: mu must be positive");
    if (mu <= 1.0) return 1.0;
    // h(x) = x - e^{mu(x-1)} is concave, so Newton from 0 climbs monotonically to the small root.
    double x = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double e = std::exp(mu * (x - 1.0));
        const double h = x - e;
        const double dh = 1.0 - mu * e;
        const double next = x - h / dh;
        if (!(next > x)) break;
        x = next;
    }
    return x;
}

inline double poisson_pmf(double mu, std::size_t k) {
    if (mu == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(static_cast<double>(k) * std::log(mu) - mu - std::lgamma(static_cast<double>(k) + 1.0));
}

/// Shannon entropy (nats) of Poisson(mu), summed until terms past the mode are negligible.
inline double poisson_entropy(double mu) {
    if (mu <= 0.0) return 0.0;
    double sum = 0.0;
    for (std::size_t k = 0;; ++k) {
        const double p = poisson_pmf(mu, k);
        const double term = p > 0.0 ? -p * std::log(p) : 0.0;
        sum += term;
        if (static_cast<double>(k) > mu && term < 1e-15 * sum) break;
        if (k > 100000) break;
    }
    return sum;
}

/// Ent(Poisson(lambda s)) / (1 - lambda s); +inf when lambda s >= 1.
inline double kl_entropy_bound(const PhasePoint& p) {
    const double ls = p.lambda_s();
    if (ls >= 1.0) return std::numeric_limits<double>::infinity();
    return poisson_entropy(ls) / (1.0 - ls);
}

/// lambda s * kl_d + lambda s (log(s/lambda) + 1) + 2 lambda (1-s) log(1-s).
inline double kl_recursion_floor(const PhasePoint& p, double kl_d) {
    const double ls = p.lambda_s();
    double v = ls * kl_d;
    if (p.s > 0.0) v += ls * (std::log(p.s / p.lambda) + 1.0);
    if (p.s < 1.0 && p.s > 0.0) v += 2.0 * p.lambda * (1.0 - p.s) * std::log1p(-p.s);
    return v;
}

/// g(s) = s (log(lambda/s) - 1) - 2 (1-s) log(1-s), with g(0) = 0 and the
/// (1-s) log(1-s) -> 0 limit at s = 1.
inline double s_star_g(double lambda, double s) {
    double v = 0.0;
    if (s > 0.0) v += s * (std::log(lambda / s) - 1.0);
    if (s < 1.0) v -= 2.0 * (1.0 - s) * std::log1p(-s);
    return v;
}

struct SStarResult {
    double value = 1.0;
    int sign_changes = 0;  // on the scan grid
    bool multiple_crossings() const noexcept { return sign_changes > 1; }
};

inline SStarResult s_star_scan(double lambda) {
    if (!(lambda > 1.0 && lambda <= std::exp(1.0)))
        throw DomainError("s_star: lambda must lie in (1, e], got " + std::to_string(lambda));
    constexpr double lo = 1e-6;
    constexpr int grid = 1000;
    auto at = [&](int i) { return lo + (1.0 - lo) * static_cast<double>(i) / grid; };

    SStarResult out;
    for (int i = 0; i < grid; ++i)
        if ((s_star_g(lambda, at(i)) >= 0.0) != (s_star_g(lambda, at(i + 1)) >= 0.0)) ++out.sign_changes;
    if (s_star_g(lambda, 1.0) >= 0.0) {
        out.value = 1.0;
        return out;
    }
    // walk down from s = 1 to the first grid point where g >= 0
    int i = grid;
    while (i > 0 && s_star_g(lambda, at(i)) < 0.0) --i;
    if (i == 0 && s_star_g(lambda, at(0)) < 0.0) {
        out.value = lo;
        return out;
    }
    double a = at(i), b = at(i + 1);  // g(a) >= 0 > g(b)
    while (b - a > 1e-13) {
        const double m = 0.5 * (a + b);
        (s_star_g(lambda, m) >= 0.0 ? a : b) = m;
    }
    out.value = a;
    return out;
}

/// sup { s : g(s) >= 0 }, the correlation above which KL_d diverges for lambda in (1, e].
inline double s_star(double lambda) { return s_star_scan(lambda).value; }

enum class VStatus { converged, diverged, pole };

inline const char* to_string(VStatus v) {
    switch (v) {
        case VStatus::converged: return "converged";
        case VStatus::diverged: return "diverged";
        case VStatus::pole: return "pole";
    }
    return "?";
}

struct VIterationResult {
    VStatus status = VStatus::diverged;
    int step = 0;            // iterations performed (or the step at which the pole was hit)
    double value = 1.0;      // last finite iterate
    double residual = std::numeric_limits<double>::infinity();  // |f(V) - V| at the last iterate
    std::vector<double> trace;
};

/// f(x) = exp(kappa (1-s)(x-1) / (1-sx)) / (1-sx), kappa = lambda s^2.
inline double v_map(const PhasePoint& p, double x) {
    const double den = 1.0 - p.s * x;
    return std::exp(p.kappa() * (1.0 - p.s) * (x - 1.0) / den) / den;
}

/// Iterates V_{d+1} = f(V_d) from V_0 = 1.
inline VIterationResult v_iteration(const PhasePoint& p, int d_max, double tol) {
    p.validate();
    VIterationResult out;
    double v = 1.0;
    out.trace.push_back(v);
    for (int step = 1; step <= d_max; ++step) {
        if (p.s * v >= 1.0) {
            out.status = VStatus::pole;
            out.step = step;
            out.value = v;
            return out;
        }
        const double next = v_map(p, v);
        if (!std::isfinite(next)) {
            out.status = VStatus::diverged;
            out.step = step;
            out.value = v;
            return out;
        }
        out.trace.push_back(next);
        out.step = step;
        out.value = next;
        if (std::abs(next - v) <= tol) {
            out.status = VStatus::converged;
            out.residual = p.s * next < 1.0 ? std::abs(v_map(p, next) - next) : out.residual;
            return out;
        }
        v = next;
    }
    out.status = VStatus::diverged;
    return out;
}

struct AutoCondition {
    bool holds = false;
    double lambda_s = 0.0;
    double lhs = 0.0;  // 1 - s
    double rhs = 0.0;  // sqrt(log(lambda s) / (lambda^3 s)) / (3 + eta)
};

inline AutoCondition auto_condition_detail(const PhasePoint& p, double r0, double eta) {
    if (!(r0 > 1.0) || !(eta > 0.0)) throw DomainError("auto_condition: need r0 > 1 and eta > 0");
    AutoCondition out;
    out.lambda_s = p.lambda_s();
    out.lhs = 1.0 - p.s;
    if (out.lambda_s > 1.0)
        out.rhs = std::sqrt(std::log(out.lambda_s) / (p.lambda * p.lambda * p.lambda * p.s)) / (3.0 + eta);
    out.holds = out.lambda_s > r0 && out.lhs <= out.rhs;
    return out;
}

inline bool auto_condition(const PhasePoint& p, double r0 = 20.0, double eta = 0.1) {
    return auto_condition_detail(p, r0, eta).holds;
}

/// (1 - p_ext(lambda s))^3 (1 - pi(0) - pi(1) - pi(2)) for pi = Poisson(lambda s).
inline double alpha_bound(const PhasePoint& p) {
    const double mu = p.lambda_s();
    if (mu <= 1.0) return 0.0;
    const double survive = 1.0 - extinction_probability(mu);
    const double tail = 1.0 - poisson_pmf(mu, 0) - poisson_pmf(mu, 1) - poisson_pmf(mu, 2);
    return survive * survive * survive * tail;
}

}  // namespace treealign
