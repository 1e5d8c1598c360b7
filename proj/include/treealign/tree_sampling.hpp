#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"
#include "tree.hpp"

namespace treealign {

inline constexpr std::size_t default_node_cap = 10'000'000;

struct ModelParams {
    double lambda = 1.0;
    double s = 0.5;
    int depth = 0;

    double s_bar() const noexcept { return 1.0 - s; }

    void validate() const {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be positive, got " + std::to_string(lambda));
        if (!(s >= 0.0 && s <= 1.0)) throw DomainError("s must lie in [0,1], got " + std::to_string(s));
        if (depth < 0) throw DomainError("depth must be >= 0");
    }
};

enum class Hypothesis { H0, H1 };

inline const char* to_string(Hypothesis h) { return h == Hypothesis::H0 ? "H0" : "H1"; }

struct GroundTruth {
    RootedTree tau_star;
    std::vector<NodeId> sigma;        // tau_star node -> t node
    std::vector<NodeId> sigma_prime;  // tau_star node -> t_prime node
};

struct TreePairSample {
    RootedTree t;
    RootedTree t_prime;
    Hypothesis hypothesis = Hypothesis::H0;
    std::optional<GroundTruth> ground_truth;
};

/// A tree together with the position of every source node in it (no_node if dropped).
struct MappedTree {
    RootedTree tree;
    std::vector<NodeId> map;
};

namespace detail {

inline void check_budget(const RootedTree& t, std::size_t cap) {
    if (t.size() > cap) throw BudgetExceeded(cap);
}

/// Grows GW(mean) offspring below the listed frontier nodes until max_depth.
template <class URBG>
void grow_gw(RootedTree& t, std::deque<NodeId> frontier, double mean, int max_depth, URBG& rng, std::size_t cap) {
    while (!frontier.empty()) {
        const NodeId v = frontier.front();
        frontier.pop_front();
        if (t.depth(v) >= max_depth) continue;
        const std::size_t k = draw_poisson(mean, rng);
        for (std::size_t i = 0; i < k; ++i) {
            frontier.push_back(t.add_child(v));
            check_budget(t, cap);
        }
    }
}

}  // namespace detail

template <class URBG>
RootedTree sample_gw(double mean, int depth, URBG& rng, std::size_t cap = default_node_cap) {
    RootedTree t;
    detail::grow_gw(t, {t.root()}, mean, depth, rng, cap);
    return t;
}

template <class URBG>
RootedTree sample_gw(const ModelParams& params, URBG& rng, std::size_t cap = default_node_cap) {
    params.validate();
    return sample_gw(params.lambda, params.depth, rng, cap);
}

inline RootedTree sample_gw(const ModelParams& params, const Seed& seed, std::size_t cap = default_node_cap) {
    auto rng = seed.engine();
    return sample_gw(params, rng, cap);
}

/// Keeps every edge with probability s and returns the root component.
template <class URBG>
MappedTree subsample_mapped(const RootedTree& t, double s, URBG& rng) {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("subsample: s must lie in [0,1]");
    MappedTree out{RootedTree(), std::vector<NodeId>(t.size(), no_node)};
    out.map[t.root()] = out.tree.root();
    // t is stored parent-before-child, so a single forward pass sees parents first.
    for (NodeId v = 0; v < t.size(); ++v) {
        if (out.map[v] == no_node) continue;
        for (NodeId c : t.children(v))
            if (draw_bernoulli(s, rng)) out.map[c] = out.tree.add_child(out.map[v]);
    }
    return out;
}

template <class URBG>
RootedTree subsample(const RootedTree& t, double s, URBG& rng) {
    return subsample_mapped(t, s, rng).tree;
}

inline RootedTree subsample(const RootedTree& t, double s, const Seed& seed) {
    auto rng = seed.engine();
    return subsample(t, s, rng);
}

/// Appends Poisson(lambda(1-s)) fresh children to every node of t, each rooting
/// an independent GW(lambda) subtree, and prunes at params.depth.
template <class URBG>
MappedTree augment_mapped(const RootedTree& t, const ModelParams& params, URBG& rng, std::size_t cap = default_node_cap) {
    params.validate();
    const double extra = params.lambda * params.s_bar();
    MappedTree out{RootedTree(), std::vector<NodeId>(t.size(), no_node)};
    out.map[t.root()] = out.tree.root();
    // entries are (source node or no_node for fresh nodes, node in output)
    std::deque<std::pair<NodeId, NodeId>> queue{{t.root(), out.tree.root()}};
    while (!queue.empty()) {
        auto [src, dst] = queue.front();
        queue.pop_front();
        if (out.tree.depth(dst) >= params.depth) continue;
        if (src != no_node) {
            for (NodeId c : t.children(src)) {
                const NodeId nc = out.tree.add_child(dst);
                out.map[c] = nc;
                queue.emplace_back(c, nc);
            }
        }
        const std::size_t k = draw_poisson(src != no_node ? extra : params.lambda, rng);
        for (std::size_t i = 0; i < k; ++i) queue.emplace_back(no_node, out.tree.add_child(dst));
        detail::check_budget(out.tree, cap);
    }
    return out;
}

template <class URBG>
RootedTree augment(const RootedTree& t, const ModelParams& params, URBG& rng, std::size_t cap = default_node_cap) {
    return augment_mapped(t, params, rng, cap).tree;
}

inline RootedTree augment(const RootedTree& t, const ModelParams& params, const Seed& seed, std::size_t cap = default_node_cap) {
    auto rng = seed.engine();
    return augment(t, params, rng, cap);
}

/// Shuffles every child list uniformly and independently.
template <class URBG>
MappedTree relabel_uniform_mapped(const RootedTree& t, URBG& rng) {
    MappedTree out{RootedTree(), std::vector<NodeId>(t.size(), no_node)};
    out.tree.reserve(t.size());
    out.map[t.root()] = out.tree.root();
    std::vector<NodeId> kids;
    std::deque<NodeId> queue{t.root()};
    while (!queue.empty()) {
        const NodeId v = queue.front();
        queue.pop_front();
        kids.assign(t.children(v).begin(), t.children(v).end());
        std::shuffle(kids.begin(), kids.end(), rng);
        for (NodeId c : kids) {
            out.map[c] = out.tree.add_child(out.map[v]);
            queue.push_back(c);
        }
    }
    return out;
}

template <class URBG>
RootedTree relabel_uniform(const RootedTree& t, URBG& rng) {
    return relabel_uniform_mapped(t, rng).tree;
}

inline RootedTree relabel_uniform(const RootedTree& t, const Seed& seed) {
    auto rng = seed.engine();
    return relabel_uniform(t, rng);
}

/// One step of the kernel: subsample at s, augment with (lambda, s), relabel.
template <class URBG>
RootedTree markov_transition(const RootedTree& t, const ModelParams& params, URBG& rng, std::size_t cap = default_node_cap) {
    params.validate();
    auto kept = subsample(prune(t, params.depth), params.s, rng);
    auto grown = augment(kept, params, rng, cap);
    return relabel_uniform(grown, rng);
}

inline RootedTree markov_transition(const RootedTree& t, const ModelParams& params, const Seed& seed, std::size_t cap = default_node_cap) {
    auto rng = seed.engine();
    return markov_transition(t, params, rng, cap);
}

/// Under H0 two independent GW(lambda) trees. Under H1 an intersection tree
/// GW(lambda s), augmented twice independently and relabeled.
inline TreePairSample sample_pair(const ModelParams& params, Hypothesis h, const Seed& seed,
                                  std::size_t cap = default_node_cap) {
    params.validate();
    TreePairSample out;
    out.hypothesis = h;
    if (h == Hypothesis::H0) {
        out.t = sample_gw(params, seed.derive(0), cap);
        out.t_prime = sample_gw(params, seed.derive(1), cap);
        return out;
    }
    auto rng_tau = seed.derive(2).engine();
    RootedTree tau = sample_gw(params.lambda * params.s, params.depth, rng_tau, cap);

    auto side = [&](std::uint64_t stream) {
        auto rng = seed.derive(stream).engine();
        auto aug = augment_mapped(tau, params, rng, cap);
        auto rel = relabel_uniform_mapped(aug.tree, rng);
        std::vector<NodeId> sigma(tau.size());
        for (NodeId v = 0; v < tau.size(); ++v) sigma[v] = rel.map[aug.map[v]];
        return std::pair{std::move(rel.tree), std::move(sigma)};
    };
    auto [t, sigma] = side(3);
    auto [tp, sigma_p] = side(4);
    out.t = std::move(t);
    out.t_prime = std::move(tp);
    out.ground_truth = GroundTruth{std::move(tau), std::move(sigma), std::move(sigma_p)};
    return out;
}

}  // namespace treealign
