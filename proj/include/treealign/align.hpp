#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "log_weight.hpp"
#include "matching_sum.hpp"
#include "parallel.hpp"
#include "psi.hpp"

namespace treealign {

/// Directed edges of a graph in CSR order: edge i -> neighbors(i)[k] has id
/// offset[i] + k.
struct DirectedEdges {
    std::vector<std::size_t> offset;  // size n + 1
    std::vector<std::size_t> reverse;
    std::vector<Vertex> source;

    explicit DirectedEdges(const SparseGraph& g) : offset(g.n() + 1, 0) {
        for (Vertex i = 0; i < g.n(); ++i) offset[i + 1] = offset[i] + g.degree(i);
        reverse.resize(offset.back());
        source.resize(offset.back());
        for (Vertex i = 0; i < g.n(); ++i) {
            const auto nb = g.neighbors(i);
            for (std::size_t k = 0; k < nb.size(); ++k) {
                const Vertex j = nb[k];
                const auto back = g.neighbors(j);
                const auto pos = static_cast<std::size_t>(std::lower_bound(back.begin(), back.end(), i) - back.begin());
                reverse[offset[i] + k] = offset[j] + pos;
                source[offset[i] + k] = i;
            }
        }
    }

    std::size_t size() const noexcept { return reverse.size(); }
    std::size_t id(Vertex i, std::size_t k) const noexcept { return offset[i] + k; }
    /// id of the edge neighbors(i)[k] -> i
    std::size_t incoming(Vertex i, std::size_t k) const noexcept { return reverse[offset[i] + k]; }
};

/// Log-messages indexed by (directed edge of g, directed edge of g_prime).
/// The true log-message is value + offset.
struct MessageTable {
    int t = 0;
    std::size_t rows = 0;  // 2|E|
    std::size_t cols = 0;  // 2|E'|
    std::vector<double> values;
    double offset = 0.0;

    double at(std::size_t e, std::size_t f) const { return values[e * cols + f]; }
    double absolute(std::size_t e, std::size_t f) const { return values[e * cols + f] + offset; }
};

/// Absolute log-scores per node pair.
struct ScoreMatrix {
    int t = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double at(Vertex i, Vertex u) const { return values[static_cast<std::size_t>(i) * cols + u]; }
};

inline constexpr std::size_t default_table_budget = 200'000'000;

struct AlignConfig {
    int d = 2;
    double gamma = 0.0;
    double beta_log = 0.0;  // log of the threshold beta
    std::size_t degree_cap = default_degree_cap;
    std::size_t table_budget = default_table_budget;
    bool normalize = true;

    /// d = floor(c log n), gamma = c log(lambda s) / 2, beta_log = n^gamma, with
    /// c = 0.49 / log(lambda (2 - s)).
    static AlignConfig derive(std::size_t n, double lambda, double s) {
        const double union_rate = lambda * (2.0 - s);
        if (union_rate <= 1.0 || lambda * s <= 1.0)
            throw DomainError("cannot derive default depth/threshold: need lambda(2-s) > 1 and lambda s > 1; set d and beta explicitly");
        const double c = 0.49 / std::log(union_rate);
        AlignConfig cfg;
        cfg.d = static_cast<int>(std::floor(c * std::log(static_cast<double>(n))));
        cfg.gamma = 0.5 * c * std::log(lambda * s);
        cfg.beta_log = std::pow(static_cast<double>(n), cfg.gamma);
        if (cfg.d < 2) cfg.d = 2;
        return cfg;
    }
};

inline MessageTable init_messages(const SparseGraph& g, const SparseGraph& g_prime,
                                  std::size_t budget = default_table_budget) {
    MessageTable m;
    m.rows = 2 * g.num_edges();
    m.cols = 2 * g_prime.num_edges();
    if (m.rows != 0 && m.cols > budget / m.rows)
        throw CapacityExceeded("message table needs " + std::to_string(m.rows) + " x " + std::to_string(m.cols) +
                               " entries, over the budget of " + std::to_string(budget) +
                               "; use smaller graphs or raise the budget");
    m.values.assign(m.rows * m.cols, 0.0);
    return m;
}

namespace detail {

/// Full d_i x d_u matrix of absolute incoming log-messages m_{l -> i, w -> u}.
inline void gather_incoming(const MessageTable& table, const DirectedEdges& de, const DirectedEdges& dep, Vertex i,
                            std::size_t di, Vertex u, std::size_t du, std::vector<double>& out) {
    out.resize(di * du);
    for (std::size_t a = 0; a < di; ++a) {
        const std::size_t row = de.incoming(i, a);
        for (std::size_t b = 0; b < du; ++b) out[a * du + b] = table.absolute(row, dep.incoming(u, b));
    }
}

inline std::string pair_label(Vertex i, Vertex u) {
    return "node pair (" + std::to_string(i) + ", " + std::to_string(u) + ")";
}

}  // namespace detail

/// One message update: m^{t+1}_{i->j, u->v} is the matching sum over the
/// incoming messages from the other neighbors of i and u.
inline MessageTable mp_sweep(const MessageTable& table, const SparseGraph& g, const SparseGraph& g_prime,
                             const PsiTable& psi, const AlignConfig& config) {
    const DirectedEdges de(g), dep(g_prime);
    if (table.rows != de.size() || table.cols != dep.size()) throw DomainError("mp_sweep: table does not match graphs");
    MessageTable next;
    next.t = table.t + 1;
    next.rows = table.rows;
    next.cols = table.cols;
    next.values.assign(table.values.size(), log_zero);

    parallel_for(g.n(), [&](std::size_t ii) {
        const auto i = static_cast<Vertex>(ii);
        const std::size_t di = g.degree(i);
        if (di == 0) return;
        MatchingWorkspace ws;
        std::vector<double> in, sub;
        for (Vertex u = 0; u < g_prime.n(); ++u) {
            const std::size_t du = g_prime.degree(u);
            if (du == 0) continue;
            if (std::min(di, du) - 1 > config.degree_cap)
                throw DegreeCapExceeded(di - 1, du - 1, config.degree_cap, detail::pair_label(i, u));
            detail::gather_incoming(table, de, dep, i, di, u, du, in);
            sub.resize((di - 1) * (du - 1));
            for (std::size_t x = 0; x < di; ++x) {
                for (std::size_t y = 0; y < du; ++y) {
                    std::size_t k = 0;
                    for (std::size_t a = 0; a < di; ++a) {
                        if (a == x) continue;
                        for (std::size_t b = 0; b < du; ++b)
                            if (b != y) sub[k++] = in[a * du + b];
                    }
                    next.values[de.id(i, x) * next.cols + dep.id(u, y)] =
                        matching_sum(sub, di - 1, du - 1, psi, ws, config.degree_cap);
                }
            }
        }
    });

    if (config.normalize) {
        double hi = log_zero;
        for (double v : next.values)
            if (std::isfinite(v)) hi = std::max(hi, v);
        if (std::isfinite(hi)) {
            for (double& v : next.values) v -= hi;
            next.offset = hi;
        }
    }
    return next;
}

/// L(i, u) over the full neighborhoods, as absolute log values.
inline ScoreMatrix aggregate(const MessageTable& table, const SparseGraph& g, const SparseGraph& g_prime,
                             const PsiTable& psi, const AlignConfig& config) {
    const DirectedEdges de(g), dep(g_prime);
    if (table.rows != de.size() || table.cols != dep.size()) throw DomainError("aggregate: table does not match graphs");
    ScoreMatrix sm;
    sm.t = table.t;
    sm.rows = g.n();
    sm.cols = g_prime.n();
    sm.values.assign(sm.rows * sm.cols, log_zero);
    parallel_for(g.n(), [&](std::size_t ii) {
        const auto i = static_cast<Vertex>(ii);
        const std::size_t di = g.degree(i);
        MatchingWorkspace ws;
        std::vector<double> in;
        for (Vertex u = 0; u < g_prime.n(); ++u) {
            const std::size_t du = g_prime.degree(u);
            if (std::min(di, du) > config.degree_cap)
                throw DegreeCapExceeded(di, du, config.degree_cap, detail::pair_label(i, u));
            detail::gather_incoming(table, de, dep, i, di, u, du, in);
            sm.values[ii * sm.cols + u] = matching_sum(in, di, du, psi, ws, config.degree_cap);
        }
    });
    return sm;
}

inline MessageTable run_sweeps(const SparseGraph& g, const SparseGraph& g_prime, const PsiTable& psi,
                               const AlignConfig& config, int sweeps) {
    auto table = init_messages(g, g_prime, config.table_budget);
    for (int k = 0; k < sweeps; ++k) table = mp_sweep(table, g, g_prime, psi, config);
    return table;
}

struct ScoredPair {
    Vertex i;
    Vertex u;
    double log_score;
};

namespace detail {

/// Size of a maximum matching in the bipartite graph adj (left -> right lists), capped at `want`.
inline std::size_t bipartite_matching_size(const std::vector<std::vector<std::size_t>>& adj, std::size_t right,
                                           std::size_t want) {
    std::vector<std::size_t> match_right(right, static_cast<std::size_t>(-1));
    std::vector<char> visited;
    std::size_t size = 0;
    auto augment = [&](auto&& self, std::size_t a) -> bool {
        for (std::size_t b : adj[a]) {
            if (visited[b]) continue;
            visited[b] = 1;
            if (match_right[b] == static_cast<std::size_t>(-1) || self(self, match_right[b])) {
                match_right[b] = a;
                return true;
            }
        }
        return false;
    };
    for (std::size_t a = 0; a < adj.size() && size < want; ++a) {
        visited.assign(right, 0);
        if (augment(augment, a)) ++size;
    }
    return size;
}

inline std::vector<char> cycle_flags(const SparseGraph& g, int d) {
    std::vector<char> out(g.n());
    for (Vertex i = 0; i < g.n(); ++i) out[i] = neighborhood_tree(g, i, d).has_cycle ? 1 : 0;
    return out;
}

}  // namespace detail

struct MpAlignResult {
    std::vector<ScoredPair> matches;
    PartialMap map;
};

/// Thresholded aligner: after d-1 sweeps, (i, u) is kept when both d-balls are
/// cycle-free and three distinct neighbor pairs (j_t, v_t) have incoming
/// oriented scores above log beta. Existence of such a triple is a bipartite
/// matching of size 3 on the thresholded neighbor graph.
inline MpAlignResult mpalign(const SparseGraph& g, const SparseGraph& g_prime, const PsiTable& psi,
                             const AlignConfig& config) {
    if (config.d < 2) throw DomainError("mpalign: d must be at least 2");
    const auto table = run_sweeps(g, g_prime, psi, config, config.d - 1);
    const DirectedEdges de(g), dep(g_prime);
    const auto cyc = detail::cycle_flags(g, config.d);
    const auto cyc_p = detail::cycle_flags(g_prime, config.d);

    std::vector<std::vector<ScoredPair>> per_row(g.n());
    parallel_for(g.n(), [&](std::size_t ii) {
        const auto i = static_cast<Vertex>(ii);
        const std::size_t di = g.degree(i);
        if (di < 3 || cyc[i]) return;
        std::vector<double> in;
        std::vector<std::vector<std::size_t>> adj(di);
        MatchingWorkspace ws;
        for (Vertex u = 0; u < g_prime.n(); ++u) {
            const std::size_t du = g_prime.degree(u);
            if (du < 3 || cyc_p[u]) continue;
            detail::gather_incoming(table, de, dep, i, di, u, du, in);
            std::size_t strong_rows = 0;
            for (std::size_t a = 0; a < di; ++a) {
                adj[a].clear();
                for (std::size_t b = 0; b < du; ++b)
                    if (in[a * du + b] > config.beta_log) adj[a].push_back(b);
                if (!adj[a].empty()) ++strong_rows;
            }
            if (strong_rows < 3) continue;
            if (detail::bipartite_matching_size(adj, du, 3) < 3) continue;
            if (std::min(di, du) > config.degree_cap)
                throw DegreeCapExceeded(di, du, config.degree_cap, detail::pair_label(i, u));
            per_row[ii].push_back(ScoredPair{i, u, matching_sum(in, di, du, psi, ws, config.degree_cap)});
        }
    });
    MpAlignResult out;
    for (auto& row : per_row)
        for (auto& p : row) {
            out.map.pairs.emplace_back(p.i, p.u);
            out.matches.push_back(p);
        }
    return out;
}

/// Drops every pair whose left or right endpoint occurs more than once.
inline PartialMap prune_to_injective(const PartialMap& map) {
    std::vector<Vertex> l, r;
    for (auto [i, u] : map.pairs) {
        l.push_back(i);
        r.push_back(u);
    }
    std::sort(l.begin(), l.end());
    std::sort(r.begin(), r.end());
    auto count = [](const std::vector<Vertex>& v, Vertex x) {
        auto [lo, hi] = std::equal_range(v.begin(), v.end(), x);
        return hi - lo;
    };
    PartialMap out;
    for (auto [i, u] : map.pairs)
        if (count(l, i) == 1 && count(r, u) == 1) out.pairs.emplace_back(i, u);
    return out;
}

/// Fraction of g's edges mapped onto edges of g_prime by pi, plus the same for sigma in reverse.
inline double match_edges(const SparseGraph& g, const SparseGraph& g_prime, const std::vector<Vertex>& pi,
                          const std::vector<Vertex>& sigma) {
    if (pi.size() != g.n() || sigma.size() != g_prime.n()) throw DomainError("match_edges: maps must be total");
    double e = 0.0;
    if (g.num_edges() > 0) {
        std::size_t hit = 0;
        for (auto [a, b] : g.edges()) hit += g_prime.has_edge(pi[a], pi[b]) ? 1 : 0;
        e += static_cast<double>(hit) / static_cast<double>(g.num_edges());
    }
    if (g_prime.num_edges() > 0) {
        std::size_t hit = 0;
        for (auto [u, v] : g_prime.edges()) hit += g.has_edge(sigma[u], sigma[v]) ? 1 : 0;
        e += static_cast<double>(hit) / static_cast<double>(g_prime.num_edges());
    }
    return e;
}

/// Row and column argmax of a score matrix, ties to the lowest index.
inline std::pair<std::vector<Vertex>, std::vector<Vertex>> argmax_maps(const ScoreMatrix& sm) {
    std::vector<Vertex> pi(sm.rows, 0), sigma(sm.cols, 0);
    std::vector<double> col_best(sm.cols, -std::numeric_limits<double>::infinity());
    std::vector<char> col_set(sm.cols, 0);
    for (std::size_t i = 0; i < sm.rows; ++i) {
        double best = 0.0;
        bool set = false;
        for (std::size_t u = 0; u < sm.cols; ++u) {
            const double v = sm.values[i * sm.cols + u];
            if (!set || v > best) {
                best = v;
                pi[i] = static_cast<Vertex>(u);
                set = true;
            }
            if (!col_set[u] || v > col_best[u]) {
                col_best[u] = v;
                sigma[u] = static_cast<Vertex>(i);
                col_set[u] = 1;
            }
        }
    }
    return {std::move(pi), std::move(sigma)};
}

/// Ground truth for overlap diagnostics: truth[i] is the g_prime node matched
/// to node i of g (no_vertex if absent), and overlaps are divided by n.
struct OverlapTruth {
    std::vector<Vertex> truth;
    std::size_t n = 0;
};

inline double map_overlap(const std::vector<Vertex>& pi, const std::vector<Vertex>& sigma, const OverlapTruth& truth) {
    std::size_t hit_pi = 0, hit_sigma = 0;
    for (std::size_t i = 0; i < pi.size() && i < truth.truth.size(); ++i)
        if (truth.truth[i] != no_vertex && truth.truth[i] == pi[i]) ++hit_pi;
    for (std::size_t u = 0; u < sigma.size(); ++u) {
        const Vertex i = sigma[u];
        if (i < truth.truth.size() && truth.truth[i] == u) ++hit_sigma;
    }
    const auto n = static_cast<double>(truth.n);
    return 0.5 * (static_cast<double>(hit_pi) / n + static_cast<double>(hit_sigma) / n);
}

struct TraceRow {
    int t = 0;
    double e = 0.0;
    std::optional<double> overlap;
};

struct MpAlign2Result {
    std::vector<Vertex> pi;
    std::vector<Vertex> sigma;
    int t_star = 0;
    std::vector<TraceRow> trace;
    ScoreMatrix scores;  // at t_star
};

/// Argmax aligner: for t = 1..d_max run one sweep, aggregate, take row and
/// column argmaxes and score them by match_edges; returns the earliest best t.
inline MpAlign2Result mpalign2(const SparseGraph& g, const SparseGraph& g_prime, const PsiTable& psi, int d_max,
                               const AlignConfig& config = {}, const std::optional<OverlapTruth>& truth = std::nullopt) {
    if (d_max < 1) throw DomainError("mpalign2: d_max must be at least 1");
    MpAlign2Result out;
    auto table = init_messages(g, g_prime, config.table_budget);
    double best = -1.0;
    for (int t = 1; t <= d_max; ++t) {
        table = mp_sweep(table, g, g_prime, psi, config);
        auto sm = aggregate(table, g, g_prime, psi, config);
        auto [pi, sigma] = argmax_maps(sm);
        TraceRow row;
        row.t = t;
        row.e = match_edges(g, g_prime, pi, sigma);
        if (truth) row.overlap = map_overlap(pi, sigma, *truth);
        out.trace.push_back(row);
        if (row.e > best) {
            best = row.e;
            out.t_star = t;
            out.pi = std::move(pi);
            out.sigma = std::move(sigma);
            out.scores = std::move(sm);
        }
    }
    return out;
}

}  // namespace treealign
