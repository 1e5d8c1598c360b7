#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "likelihood.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "tree_sampling.hpp"

namespace treealign {

struct Exceedance {
    std::size_t count = 0;
    double frequency = 0.0;
    double std_error = 0.0;
};

struct MonteCarloStats {
    std::size_t n_trials = 0;
    double mean = 0.0;
    double std_error = 0.0;
    std::vector<std::pair<double, double>> quantiles;  // (level, value)
    std::map<double, Exceedance> exceed;               // beta -> P(L > beta)
};

/// Summary of log-LR samples; exceedance is P(L > beta), i.e. log L > log beta.
inline MonteCarloStats summarize(const std::vector<double>& log_values, const std::vector<double>& betas = {}) {
    MonteCarloStats st;
    st.n_trials = log_values.size();
    if (log_values.empty()) return st;
    const auto n = static_cast<double>(log_values.size());
    double sum = 0.0;
    for (double v : log_values) sum += v;
    st.mean = sum / n;
    if (log_values.size() > 1) {
        double ss = 0.0;
        for (double v : log_values) ss += (v - st.mean) * (v - st.mean);
        st.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    std::vector<double> sorted = log_values;
    std::sort(sorted.begin(), sorted.end());
    for (double q : {0.1, 0.25, 0.5, 0.75, 0.9}) {
        const auto idx = static_cast<std::size_t>(std::floor(q * (n - 1.0)));
        st.quantiles.emplace_back(q, sorted[idx]);
    }
    for (double beta : betas) {
        if (!(beta > 0.0)) throw DomainError("exceedance thresholds must be positive");
        const double lb = std::log(beta);
        Exceedance e;
        e.count = static_cast<std::size_t>(std::count_if(log_values.begin(), log_values.end(), [&](double v) { return v > lb; }));
        e.frequency = static_cast<double>(e.count) / n;
        e.std_error = std::sqrt(e.frequency * (1.0 - e.frequency) / n);
        st.exceed[beta] = e;
    }
    return st;
}

/// log L_d on n_trials pairs drawn under h; trial i uses seed.derive(i).
inline std::vector<double> sample_log_lr(const ModelParams& params, Hypothesis h, std::size_t n_trials, const Seed& seed,
                                         std::size_t degree_cap = default_degree_cap) {
    params.validate();
    std::vector<double> out(n_trials, 0.0);
    if (params.depth == 0) return out;
    parallel_for(n_trials, [&](std::size_t i) {
        const auto pair = sample_pair(params, h, seed.derive(i));
        PairMemo memo(params, degree_cap);
        out[i] = likelihood_ratio(pair.t, pair.t_prime, params.depth, params, memo).log();
    });
    return out;
}

/// Estimate of KL_d = E_1[log L_d].
inline MonteCarloStats kl_estimate(const PhasePoint& p, int d, std::size_t n_trials, const Seed& seed,
                                   std::size_t degree_cap = default_degree_cap) {
    if (n_trials < 100) throw DomainError("kl_estimate: need at least 100 trials");
    const ModelParams params{p.lambda, p.s, d};
    return summarize(sample_log_lr(params, Hypothesis::H1, n_trials, seed, degree_cap));
}

struct ExceedanceCurve {
    MonteCarloStats h0;
    MonteCarloStats h1;
};

inline ExceedanceCurve exceedance_curve(const PhasePoint& p, int d, const std::vector<double>& betas,
                                        std::size_t n_trials, const Seed& seed,
                                        std::size_t degree_cap = default_degree_cap) {
    const ModelParams params{p.lambda, p.s, d};
    ExceedanceCurve out;
    out.h0 = summarize(sample_log_lr(params, Hypothesis::H0, n_trials, seed.derive(0), degree_cap), betas);
    out.h1 = summarize(sample_log_lr(params, Hypothesis::H1, n_trials, seed.derive(1), degree_cap), betas);
    return out;
}

enum class PhaseLabel { impossible_ls_le_1, detectable_kl, detectable_auto, hard_candidate, unknown };

inline const char* to_string(PhaseLabel l) {
    switch (l) {
        case PhaseLabel::impossible_ls_le_1: return "IMPOSSIBLE_LS_LE_1";
        case PhaseLabel::detectable_kl: return "DETECTABLE_KL";
        case PhaseLabel::detectable_auto: return "DETECTABLE_AUTO";
        case PhaseLabel::hard_candidate: return "HARD_CANDIDATE";
        case PhaseLabel::unknown: return "UNKNOWN";
    }
    return "?";
}

struct PhaseConfig {
    double r0 = 20.0;
    double eta = 0.1;
    int v_d_max = 10000;
    double v_tol = 1e-12;
    // Monte Carlo exceedance evidence; disabled when mc_trials == 0
    std::size_t mc_trials = 0;
    int mc_depth = 3;
    std::vector<double> mc_betas{100.0};
    std::size_t mc_degree_cap = default_degree_cap;
    Seed seed{};
};

struct PhaseEvidence {
    double lambda_s = 0.0;
    std::optional<SStarResult> s_star;
    AutoCondition auto_check;
    double r0 = 0.0;
    double eta = 0.0;
    VIterationResult v;
    std::optional<ExceedanceCurve> exceedance;
};

struct PhaseVerdict {
    PhasePoint point;
    std::vector<PhaseLabel> labels;
    PhaseEvidence evidence;
    std::string note;

    bool has(PhaseLabel l) const { return std::find(labels.begin(), labels.end(), l) != labels.end(); }
};

inline PhaseVerdict classify(const PhasePoint& p, const PhaseConfig& cfg) {
    p.validate();
    PhaseVerdict v;
    v.point = p;
    auto& ev = v.evidence;
    ev.lambda_s = p.lambda_s();
    ev.r0 = cfg.r0;
    ev.eta = cfg.eta;
    ev.auto_check = auto_condition_detail(p, cfg.r0, cfg.eta);
    ev.v = v_iteration(p, cfg.v_d_max, cfg.v_tol);
    if (p.lambda > 1.0 && p.lambda <= std::exp(1.0)) ev.s_star = s_star_scan(p.lambda);

    if (ev.lambda_s <= 1.0) {
        v.labels.push_back(PhaseLabel::impossible_ls_le_1);
    } else {
        if (ev.s_star && p.lambda < std::exp(1.0) && p.s > ev.s_star->value) v.labels.push_back(PhaseLabel::detectable_kl);
        if (ev.auto_check.holds) v.labels.push_back(PhaseLabel::detectable_auto);
        if (ev.v.status == VStatus::converged) {
            v.labels.push_back(PhaseLabel::hard_candidate);
            v.note = "conjectured hard: V_d bounded";
        }
    }
    if (v.labels.empty()) v.labels.push_back(PhaseLabel::unknown);
    if (cfg.mc_trials > 0) {
        try {
            ev.exceedance = exceedance_curve(p, cfg.mc_depth, cfg.mc_betas, cfg.mc_trials, cfg.seed, cfg.mc_degree_cap);
        } catch (const DegreeCapExceeded& e) {
            if (!v.note.empty()) v.note += "; ";
            v.note += std::string("Monte Carlo evidence skipped: ") + e.what();
        }
    }
    return v;
}

inline std::vector<PhaseVerdict> phase_scan(const std::vector<PhasePoint>& grid, const PhaseConfig& cfg = {}) {
    if (grid.empty()) throw DomainError("phase_scan: empty grid");
    std::vector<PhaseVerdict> out;
    out.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        PhaseConfig c = cfg;
        c.seed = cfg.seed.derive(i);
        out.push_back(classify(grid[i], c));
    }
    return out;
}

}  // namespace treealign
