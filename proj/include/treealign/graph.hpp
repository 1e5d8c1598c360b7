#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "analytic.hpp"
#include "errors.hpp"
#include "rng.hpp"
#include "tree.hpp"

namespace treealign {

using Vertex = std::uint32_t;
using Edge = std::pair<Vertex, Vertex>;

/// Simple undirected graph on [0, n) with sorted adjacency lists.
class SparseGraph {
public:
    SparseGraph() = default;

    /// Edges may come in either orientation; self-loops and duplicates throw.
    SparseGraph(std::size_t n, std::span<const Edge> edges) : adj_(n) {
        for (auto [a, b] : edges) {
            if (a >= n || b >= n) throw DomainError("edge endpoint out of range");
            if (a == b) throw DomainError("self-loop at node " + std::to_string(a));
            adj_[a].push_back(b);
            adj_[b].push_back(a);
        }
        for (auto& row : adj_) {
            std::sort(row.begin(), row.end());
            if (std::adjacent_find(row.begin(), row.end()) != row.end()) throw DomainError("duplicate edge");
        }
        edges_ = edges.size();
    }

    SparseGraph(std::size_t n, const std::vector<Edge>& edges) : SparseGraph(n, std::span<const Edge>(edges)) {}

    std::size_t n() const noexcept { return adj_.size(); }
    std::size_t num_edges() const noexcept { return edges_; }
    std::span<const Vertex> neighbors(Vertex i) const { return adj_.at(i); }
    std::size_t degree(Vertex i) const { return adj_.at(i).size(); }

    std::size_t max_degree() const noexcept {
        std::size_t m = 0;
        for (const auto& row : adj_) m = std::max(m, row.size());
        return m;
    }

    bool has_edge(Vertex i, Vertex j) const {
        if (i >= n() || j >= n()) return false;
        const auto& row = adj_[i];
        return std::binary_search(row.begin(), row.end(), j);
    }

    /// Edges with i < j in lexicographic order.
    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        out.reserve(edges_);
        for (Vertex i = 0; i < n(); ++i)
            for (Vertex j : adj_[i])
                if (i < j) out.emplace_back(i, j);
        return out;
    }

    bool is_valid() const {
        std::size_t twice = 0;
        for (Vertex i = 0; i < n(); ++i) {
            const auto& row = adj_[i];
            if (!std::is_sorted(row.begin(), row.end())) return false;
            if (std::adjacent_find(row.begin(), row.end()) != row.end()) return false;
            for (Vertex j : row)
                if (j == i || j >= n() || !has_edge(j, i)) return false;
            twice += row.size();
        }
        return twice == 2 * edges_;
    }

    friend bool operator==(const SparseGraph& a, const SparseGraph& b) { return a.adj_ == b.adj_; }

private:
    std::vector<std::vector<Vertex>> adj_;
    std::size_t edges_ = 0;
};

/// g and g_prime where node i of g corresponds to node sigma_star[i] of g_prime.
struct CorrelatedPair {
    SparseGraph g;
    SparseGraph g_prime;
    std::vector<Vertex> sigma_star;
};

inline constexpr std::size_t dense_sampler_limit = 20000;

/// Pairs are i.i.d. with cells (1,1) w.p. lambda s/n, (1,0) and (0,1) w.p.
/// lambda(1-s)/n each. Small n loops over all pairs; larger n draws the union
/// graph by geometric skips and then assigns the cell of each union edge.
inline CorrelatedPair sample_correlated_er(std::size_t n, const PhasePoint& p, const Seed& seed,
                                           std::size_t dense_limit = dense_sampler_limit) {
    p.validate();
    if (n == 0) return {};
    const double nn = static_cast<double>(n);
    const double p11 = p.lambda * p.s / nn;
    const double p10 = p.lambda * (1.0 - p.s) / nn;
    const double q = p11 + 2.0 * p10;
    if (q > 1.0) throw DomainError("lambda(2-s)/n exceeds 1");

    auto rng = seed.derive(0).engine();
    std::vector<Edge> e, ep;  // ep in g's labels for now
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto assign = [&](Vertex i, Vertex j, double u) {
        if (u < p11) {
            e.emplace_back(i, j);
            ep.emplace_back(i, j);
        } else if (u < p11 + p10) {
            e.emplace_back(i, j);
        } else if (u < q) {
            ep.emplace_back(i, j);
        }
    };
    if (n <= dense_limit) {
        for (Vertex i = 0; i < n; ++i)
            for (Vertex j = i + 1; j < n; ++j) assign(i, j, unif(rng));
    } else if (q > 0.0) {
        std::geometric_distribution<long long> skip(q);
        Vertex i = 0;
        long long j = 0;  // next candidate column is i + 1 + j
        for (;;) {
            j += skip(rng);
            while (i < n && j >= static_cast<long long>(n - 1 - i)) {
                j -= static_cast<long long>(n - 1 - i);
                ++i;
            }
            if (i >= n) break;
            // conditional on the pair being a union edge
            assign(i, static_cast<Vertex>(i + 1 + j), q * unif(rng));
            ++j;
        }
    }

    std::vector<Vertex> sigma(n);
    std::iota(sigma.begin(), sigma.end(), Vertex{0});
    auto rng_sigma = seed.derive(1).engine();
    std::shuffle(sigma.begin(), sigma.end(), rng_sigma);
    for (auto& [a, b] : ep) {
        a = sigma[a];
        b = sigma[b];
    }
    return CorrelatedPair{SparseGraph(n, e), SparseGraph(n, ep), std::move(sigma)};
}

struct Subgraph {
    SparseGraph graph;
    std::vector<Vertex> node_map;  // old -> new, no_node when dropped
    std::vector<Vertex> inverse;   // new -> old
};

inline constexpr Vertex no_vertex = static_cast<Vertex>(-1);

inline Subgraph induced_subgraph(const SparseGraph& g, const std::vector<Vertex>& keep_sorted) {
    Subgraph out;
    out.node_map.assign(g.n(), no_vertex);
    out.inverse = keep_sorted;
    for (std::size_t k = 0; k < keep_sorted.size(); ++k) out.node_map[keep_sorted[k]] = static_cast<Vertex>(k);
    std::vector<Edge> edges;
    for (auto [a, b] : g.edges())
        if (out.node_map[a] != no_vertex && out.node_map[b] != no_vertex) edges.emplace_back(out.node_map[a], out.node_map[b]);
    out.graph = SparseGraph(keep_sorted.size(), edges);
    return out;
}

/// Component label per node, components numbered by their smallest node.
inline std::vector<std::size_t> connected_components(const SparseGraph& g, std::size_t* count = nullptr) {
    std::vector<std::size_t> comp(g.n(), static_cast<std::size_t>(-1));
    std::size_t c = 0;
    std::vector<Vertex> stack;
    for (Vertex s = 0; s < g.n(); ++s) {
        if (comp[s] != static_cast<std::size_t>(-1)) continue;
        comp[s] = c;
        stack.assign(1, s);
        while (!stack.empty()) {
            const Vertex v = stack.back();
            stack.pop_back();
            for (Vertex w : g.neighbors(v))
                if (comp[w] == static_cast<std::size_t>(-1)) {
                    comp[w] = c;
                    stack.push_back(w);
                }
        }
        ++c;
    }
    if (count) *count = c;
    return comp;
}

/// Largest connected component; ties go to the component with the smallest node id.
inline Subgraph largest_component(const SparseGraph& g) {
    if (g.n() == 0) return Subgraph{};
    std::size_t count = 0;
    const auto comp = connected_components(g, &count);
    std::vector<std::size_t> sizes(count, 0);
    for (auto c : comp) ++sizes[c];
    const auto best = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    std::vector<Vertex> keep;
    for (Vertex v = 0; v < g.n(); ++v)
        if (comp[v] == best) keep.push_back(v);
    return induced_subgraph(g, keep);
}

struct Neighborhood {
    RootedTree tree;
    bool has_cycle = false;
    std::vector<Vertex> vertex_of;  // tree node -> graph vertex
};

/// Breadth-first ball of radius d around i as a rooted tree (children by
/// vertex id). has_cycle is set when the ball induces any edge beyond the BFS tree.
inline Neighborhood neighborhood_tree(const SparseGraph& g, Vertex i, int d) {
    if (i >= g.n()) throw DomainError("neighborhood_tree: vertex out of range");
    if (d < 0) throw DomainError("neighborhood_tree: negative radius");
    Neighborhood out;
    out.vertex_of.push_back(i);
    std::vector<NodeId> node_of(g.n(), no_node);
    node_of[i] = out.tree.root();
    std::deque<Vertex> queue{i};
    while (!queue.empty()) {
        const Vertex v = queue.front();
        queue.pop_front();
        const NodeId nv = node_of[v];
        if (out.tree.depth(nv) >= d) continue;
        for (Vertex w : g.neighbors(v)) {
            if (node_of[w] != no_node) continue;
            node_of[w] = out.tree.add_child(nv);
            out.vertex_of.push_back(w);
            queue.push_back(w);
        }
    }
    std::size_t twice = 0;
    for (Vertex v : out.vertex_of)
        for (Vertex w : g.neighbors(v))
            if (node_of[w] != no_node) ++twice;
    out.has_cycle = twice / 2 > out.vertex_of.size() - 1;
    return out;
}

/// Candidate matches (i in g, u in g_prime); possibly non-injective.
struct PartialMap {
    std::vector<std::pair<Vertex, Vertex>> pairs;

    bool is_injective() const {
        std::vector<Vertex> l, r;
        for (auto [i, u] : pairs) {
            l.push_back(i);
            r.push_back(u);
        }
        std::sort(l.begin(), l.end());
        std::sort(r.begin(), r.end());
        return std::adjacent_find(l.begin(), l.end()) == l.end() && std::adjacent_find(r.begin(), r.end()) == r.end();
    }
};

struct AlignmentMetrics {
    double overlap = 0.0;
    double error_fraction = 0.0;
    std::size_t matched = 0;
    std::size_t correct = 0;
};

inline AlignmentMetrics metrics(const PartialMap& map, const std::vector<Vertex>& sigma_star, std::size_t n) {
    if (!map.is_injective()) throw NonInjectiveInput("metrics: map is not injective");
    if (n == 0) throw DomainError("metrics: n must be positive");
    AlignmentMetrics m;
    m.matched = map.pairs.size();
    for (auto [i, u] : map.pairs)
        if (i < sigma_star.size() && sigma_star[i] == u) ++m.correct;
    m.overlap = static_cast<double>(m.correct) / static_cast<double>(n);
    m.error_fraction = static_cast<double>(m.matched - m.correct) / static_cast<double>(n);
    return m;
}

}  // namespace treealign
