#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "errors.hpp"
#include "log_weight.hpp"
#include "tree_sampling.hpp"

namespace treealign {

/// Precomputed logs for the node weight
///   psi(k, c, c') = e^{lambda s} s^k (1-s)^{c+c'-2k} / (lambda^k k!).
/// tilde(k, ...) is log(k! psi), the weight attached to a sum over size-k
/// partial matchings (which counts each pair of injections once per ordering).
class PsiTable {
public:
    explicit PsiTable(const ModelParams& params) : params_(params) {
        params.validate();
        lambda_s_ = params.lambda * params.s;
        log_s_ = params.s > 0.0 ? std::log(params.s) : log_zero;
        log_s_bar_ = params.s < 1.0 ? std::log1p(-params.s) : log_zero;
        log_lambda_ = std::log(params.lambda);
    }

    const ModelParams& params() const noexcept { return params_; }

    double tilde(std::size_t k, std::size_t c, std::size_t c_prime) const noexcept {
        const double rest = static_cast<double>(c + c_prime - 2 * k);
        double v = lambda_s_ - static_cast<double>(k) * log_lambda_;
        if (k > 0) v += static_cast<double>(k) * log_s_;
        if (rest > 0) v += rest * log_s_bar_;
        return v;
    }

    double log_psi(std::size_t k, std::size_t c, std::size_t c_prime) const {
        if (k > std::min(c, c_prime))
            throw DomainError("log_psi: k=" + std::to_string(k) + " exceeds min(c, c')");
        return tilde(k, c, c_prime) - std::lgamma(static_cast<double>(k) + 1.0);
    }

private:
    ModelParams params_;
    double lambda_s_ = 0.0;
    double log_s_ = 0.0;
    double log_s_bar_ = 0.0;
    double log_lambda_ = 0.0;
};

inline LogWeight log_psi(std::size_t k, std::size_t c, std::size_t c_prime, const ModelParams& params) {
    return LogWeight(PsiTable(params).log_psi(k, c, c_prime));
}

}  // namespace treealign
