#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

#include "automorphism.hpp"
#include "errors.hpp"
#include "log_weight.hpp"
#include "matching_sum.hpp"
#include "psi.hpp"
#include "tree.hpp"
#include "tree_io.hpp"
#include "tree_sampling.hpp"

namespace treealign {

/// Memo of log L_d over pairs of interned shapes. Keys are unordered pairs, so
/// L(t, t') and L(t', t) are the same stored number. Not thread-safe; use one
/// per evaluation thread.
class PairMemo {
public:
    using ShapeId = ShapeTable::ShapeId;

    explicit PairMemo(const ModelParams& params, std::size_t degree_cap = default_degree_cap)
        : psi_(params), cap_(degree_cap) {}

    const ModelParams& params() const noexcept { return psi_.params(); }
    std::size_t degree_cap() const noexcept { return cap_; }
    ShapeTable& shapes() noexcept { return shapes_; }
    std::size_t size() const noexcept { return values_.size(); }

    void clear() {
        values_.clear();
        shapes_ = ShapeTable();
    }

    double eval(ShapeId a, ShapeId b, int d) {
        if (d <= 0) return 0.0;
        if (a > b) std::swap(a, b);
        const Key key{a, b, d};
        if (auto it = values_.find(key); it != values_.end()) return it->second;

        // Orient by code rather than by id so the value never depends on intern order.
        if (shapes_.code(a) > shapes_.code(b)) std::swap(a, b);
        const auto ca = shapes_.children(a);
        const auto cb = shapes_.children(b);
        if (std::min(ca.size(), cb.size()) > cap_) throw DegreeCapExceeded(ca.size(), cb.size(), cap_, "tree pair");
        std::vector<double> w(ca.size() * cb.size());
        for (std::size_t i = 0; i < ca.size(); ++i)
            for (std::size_t j = 0; j < cb.size(); ++j) w[i * cb.size() + j] = eval(ca[i], cb[j], d - 1);
        const double v = matching_sum(w, ca.size(), cb.size(), psi_, ws_, cap_);
        values_.emplace(key, v);
        return v;
    }

private:
    struct Key {
        ShapeId a;
        ShapeId b;
        int d;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            std::uint64_t h = (std::uint64_t{k.a} << 32) | k.b;
            return static_cast<std::size_t>(detail::splitmix64(h ^ (std::uint64_t(k.d) * 0x9e3779b97f4a7c15ULL)));
        }
    };

    PsiTable psi_;
    std::size_t cap_;
    ShapeTable shapes_;
    MatchingWorkspace ws_;
    std::unordered_map<Key, double, KeyHash> values_;
};

/// log L_d(t, t'). Nodes deeper than d are ignored.
inline LogWeight likelihood_ratio(const RootedTree& t, const RootedTree& t_prime, int d, const ModelParams& params,
                                  PairMemo& memo) {
    if (d < 0) throw DomainError("likelihood_ratio: negative depth");
    const auto& mp = memo.params();
    if (mp.lambda != params.lambda || mp.s != params.s)
        throw DomainError("likelihood_ratio: memo was built for different (lambda, s)");
    if (d == 0) return LogWeight::one();
    const auto a = memo.shapes().intern_root(t);
    const auto b = memo.shapes().intern_root(t_prime);
    return LogWeight(memo.eval(a, b, d));
}

inline LogWeight likelihood_ratio(const RootedTree& t, const RootedTree& t_prime, int d, const ModelParams& params) {
    PairMemo memo(params);
    return likelihood_ratio(t, t_prime, d, params, memo);
}

inline constexpr std::size_t explicit_oracle_max_nodes = 16;

/// Brute-force L_d from its expansion as a sum over labeled subtrees tau of
/// depth <= d and pairs of embeddings of tau into t and t', each term being a
/// product of psi over the nodes of tau above depth d. Exponential cost.
inline LogWeight likelihood_ratio_explicit(const RootedTree& t, const RootedTree& t_prime, int d,
                                           const ModelParams& params) {
    if (t.size() > explicit_oracle_max_nodes || t_prime.size() > explicit_oracle_max_nodes)
        throw OracleTooLarge("explicit likelihood oracle limited to " + std::to_string(explicit_oracle_max_nodes) +
                             " nodes per tree");
    if (d < 0) throw DomainError("likelihood_ratio_explicit: negative depth");
    params.validate();
    const double lambda = params.lambda;
    const double s = params.s;
    auto psi = [&](std::size_t k, std::size_t c, std::size_t cp) {
        double v = std::exp(lambda * s) / std::tgamma(static_cast<double>(k) + 1.0);
        v *= std::pow(s, static_cast<double>(k)) / std::pow(lambda, static_cast<double>(k));
        v *= std::pow(1.0 - s, static_cast<double>(c + cp - 2 * k));  // pow(0, 0) = 1
        return v;
    };
    auto falling = [](std::size_t n, std::size_t k) {
        double v = 1.0;
        for (std::size_t i = 0; i < k; ++i) v *= static_cast<double>(n - i);
        return v;
    };

    struct Item {
        NodeId a;
        NodeId b;
        int depth;
    };

    // Sum over all ways to extend the embedded pairs still on the frontier.
    std::function<double(std::vector<Item>&)> expand = [&](std::vector<Item>& frontier) -> double {
        if (frontier.empty()) return 1.0;
        const Item it = frontier.back();
        frontier.pop_back();
        double total = 0.0;
        const std::size_t ca = t.degree(it.a);
        const std::size_t cb = t_prime.degree(it.b);
        if (it.depth >= d) {
            total = expand(frontier);
        } else if (it.depth == d - 1) {
            // children of tau sit at depth d and carry no weight, only their count matters
            double f = 0.0;
            for (std::size_t k = 0; k <= std::min(ca, cb); ++k) f += psi(k, ca, cb) * falling(ca, k) * falling(cb, k);
            if (f != 0.0) total = f * expand(frontier);
        } else {
            const auto kids_a = t.children(it.a);
            const auto kids_b = t_prime.children(it.b);
            for (std::size_t k = 0; k <= std::min(ca, cb); ++k) {
                const double w = psi(k, ca, cb);
                if (w == 0.0) continue;
                // enumerate ordered k-tuples of distinct children on both sides
                std::vector<std::size_t> pick_a, pick_b;
                std::vector<char> used_a(ca, 0), used_b(cb, 0);
                std::function<void()> choose_b;
                std::function<void()> choose_a = [&] {
                    if (pick_a.size() == k) {
                        choose_b();
                        return;
                    }
                    for (std::size_t x = 0; x < ca; ++x) {
                        if (used_a[x]) continue;
                        used_a[x] = 1;
                        pick_a.push_back(x);
                        choose_a();
                        pick_a.pop_back();
                        used_a[x] = 0;
                    }
                };
                choose_b = [&] {
                    if (pick_b.size() == k) {
                        std::vector<Item> next = frontier;
                        for (std::size_t i = 0; i < k; ++i)
                            next.push_back(Item{kids_a[pick_a[i]], kids_b[pick_b[i]], it.depth + 1});
                        total += w * expand(next);
                        return;
                    }
                    for (std::size_t y = 0; y < cb; ++y) {
                        if (used_b[y]) continue;
                        used_b[y] = 1;
                        pick_b.push_back(y);
                        choose_b();
                        pick_b.pop_back();
                        used_b[y] = 0;
                    }
                };
                choose_a();
            }
        }
        frontier.push_back(it);
        return total;
    };

    if (d == 0) return LogWeight::one();
    std::vector<Item> frontier{Item{t.root(), t_prime.root(), 0}};
    return LogWeight::from_linear(expand(frontier));
}

/// Lower bound on log L_d(t, t') from the planted intersection tree: the
/// contribution of the subtrees tau equivalent to tau* alone, restricted to
/// embeddings that agree with the planted ones above depth d-1.
inline LogWeight lower_bound_lr(const TreePairSample& sample, const ModelParams& params) {
    if (!sample.ground_truth) throw MissingGroundTruth();
    params.validate();
    const auto& gt = *sample.ground_truth;
    const int n = params.depth;
    if (n == 0) return LogWeight::one();
    const double lambda = params.lambda;
    const double s = params.s;
    const double log_s = s > 0.0 ? std::log(s) : log_zero;
    const double log_s_bar = s < 1.0 ? std::log1p(-s) : log_zero;
    auto log_binom = [](double n_, double k_) {
        return std::lgamma(n_ + 1.0) - std::lgamma(k_ + 1.0) - std::lgamma(n_ - k_ + 1.0);
    };

    double total = automorphism_count_log(prune(gt.tau_star, n));
    for (NodeId i = 0; i < gt.tau_star.size(); ++i) {
        const int depth = gt.tau_star.depth(i);
        if (depth > n - 1) continue;
        const auto c = static_cast<double>(gt.tau_star.degree(i));
        const auto delta = static_cast<double>(sample.t.degree(gt.sigma[i])) - c;
        const auto delta_p = static_cast<double>(sample.t_prime.degree(gt.sigma_prime[i])) - c;
        if (c > 0) total += c * log_s;
        if (delta + delta_p > 0) total += (delta + delta_p) * log_s_bar;
        total += lambda * s - c * std::log(lambda);
        if (depth == n - 1) total += log_binom(c + delta, c) + log_binom(c + delta_p, c);
    }
    return LogWeight(total);
}

/// Writes "code_t,code_t_prime,depth,log_L" rows for every ordered pair of trees.
inline void dump_oracle_csv(std::ostream& os, std::span<const RootedTree> trees, int d, const ModelParams& params) {
    PairMemo memo(params);
    os << "# treealign-csv v1\n" << "t,t_prime,depth,log_L\n";
    os.precision(17);
    for (const auto& a : trees)
        for (const auto& b : trees)
            os << canonical_code(a) << ',' << canonical_code(b) << ',' << d << ','
               << likelihood_ratio(a, b, d, params, memo).log() << '\n';
}

}  // namespace treealign
