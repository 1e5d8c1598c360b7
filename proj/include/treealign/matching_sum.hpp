#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "errors.hpp"
#include "log_weight.hpp"
#include "psi.hpp"

namespace treealign {

inline constexpr std::size_t default_degree_cap = 20;

/// Reusable scratch space; one per thread.
struct MatchingWorkspace {
    std::vector<double> dp;
};

/// log sum_k psi(k,c,c') sum over pairs of injections [k]->[c], [k]->[c'] of
/// prod_i W[sigma(i)][sigma'(i)], with W given row-major (c x c') in log space.
/// Evaluated as sum_k k! psi(k) M_k where M_k sums over size-k partial
/// matchings, using a DP over subsets of the smaller side.
inline double matching_sum(std::span<const double> w, std::size_t c, std::size_t c_prime, const PsiTable& psi,
                           MatchingWorkspace& ws, std::size_t cap = default_degree_cap) {
    const std::size_t small = std::min(c, c_prime);
    if (small > cap || small > 30) throw DegreeCapExceeded(c, c_prime, cap);
    if (small == 0) return psi.tilde(0, c, c_prime);
    const double s = psi.params().s;
    if (s == 0.0) return psi.tilde(0, c, c_prime);
    // Only the full matching survives when 1-s = 0.
    if (s == 1.0 && c != c_prime) return log_zero;

    const bool rows_small = c <= c_prime;
    const std::size_t large = rows_small ? c_prime : c;
    auto weight = [&](std::size_t i_small, std::size_t j_large) {
        return rows_small ? w[i_small * c_prime + j_large] : w[j_large * c_prime + i_small];
    };

    const std::size_t states = std::size_t{1} << small;
    auto& dp = ws.dp;
    dp.assign(states, log_zero);
    dp[0] = 0.0;
    for (std::size_t j = 0; j < large; ++j) {
        // Descending masks: targets mask|bit are larger and already visited for this j.
        for (std::size_t mask = states; mask-- > 0;) {
            const double base = dp[mask];
            if (base == log_zero) continue;
            for (std::size_t i = 0; i < small; ++i) {
                const std::size_t bit = std::size_t{1} << i;
                if (mask & bit) continue;
                const double x = weight(i, j);
                if (x == log_zero) continue;
                double& slot = dp[mask | bit];
                slot = log_add(slot, base + x);
            }
        }
    }

    double tilde[64];
    for (std::size_t k = 0; k <= small; ++k) tilde[k] = psi.tilde(k, c, c_prime);
    double hi = log_zero;
    for (std::size_t mask = 0; mask < states; ++mask) {
        if (dp[mask] == log_zero) continue;
        const double t = tilde[std::popcount(mask)];
        if (t == log_zero) continue;
        hi = std::max(hi, dp[mask] + t);
    }
    if (hi == log_zero) return log_zero;
    double acc = 0.0;
    for (std::size_t mask = 0; mask < states; ++mask) {
        if (dp[mask] == log_zero) continue;
        const double t = tilde[std::popcount(mask)];
        if (t == log_zero) continue;
        acc += std::exp(dp[mask] + t - hi);
    }
    return hi + std::log(acc);
}

inline double matching_sum(std::span<const double> w, std::size_t c, std::size_t c_prime, const PsiTable& psi,
                           std::size_t cap = default_degree_cap) {
    MatchingWorkspace ws;
    return matching_sum(w, c, c_prime, psi, ws, cap);
}

inline LogWeight matching_sum(std::span<const double> w, std::size_t c, std::size_t c_prime,
                              const ModelParams& params, std::size_t cap = default_degree_cap) {
    return LogWeight(matching_sum(w, c, c_prime, PsiTable(params), cap));
}

}  // namespace treealign
