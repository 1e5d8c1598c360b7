// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <unistd.h>

#include <boost/math/distributions/binomial.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "stat_util.hpp"
#include "treealign/treealign.hpp"

namespace fs = std::filesystem;
using namespace treealign;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("%s %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double rel_err(double a, double b) {
    if (a == b) return 0.0;
    return std::abs(a - b) / std::max(1.0, std::abs(b));
}

SparseGraph forest_graph(const std::vector<RootedTree>& trees) {
    std::vector<Edge> edges;
    Vertex base = 0;
    for (const auto& t : trees) {
        for (NodeId v = 1; v < t.size(); ++v) edges.emplace_back(base + t.parent(v), base + v);
        base += static_cast<Vertex>(t.size());
    }
    return SparseGraph(base, edges);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome lr_oracle() {
    const auto shapes = test_util::shapes_up_to(2, 3);
    double worst = 0.0;
    std::size_t pairs = 0;
    for (double s : {0.2, 0.5, 0.9}) {
        const ModelParams p{1.7, s, 2};
        PairMemo memo(p);
        for (const auto& a : shapes)
            for (const auto& b : shapes) {
                worst = std::max(worst, rel_err(likelihood_ratio(a, b, 2, p, memo).log(),
                                                likelihood_ratio_explicit(a, b, 2, p).log()));
                ++pairs;
            }
    }
    return {worst <= 1e-9, fmt("%.0f pairs over %.0f shapes, worst relative log error %.2e", double(pairs),
                               double(shapes.size()), worst)};
}

std::vector<double> h0_sample() {
    static const auto logs = sample_log_lr(ModelParams{1.5, 0.7, 3}, Hypothesis::H0, 20000, Seed(2024));
    return logs;
}

Outcome martingale() {
    std::vector<double> lin;
    for (double x : h0_sample()) lin.push_back(std::exp(x));
    const auto m = test_util::mean_se(lin);
    return {std::abs(m.mean - 1.0) <= 4 * m.se, fmt("mean L = %.4f, SE = %.4f", m.mean, m.se)};
}

Outcome markov_bound() {
    const auto st = summarize(h0_sample(), {100.0});
    const auto& e = st.exceed.at(100.0);
    return {e.frequency <= 0.01 + 3 * e.std_error, fmt("P0(L > 100) = %.5f, SE = %.5f", e.frequency, e.std_error)};
}

Outcome automorphisms() {
    const auto trees = test_util::plane_trees_up_to(7);
    std::size_t bad = 0;
    for (const auto& t : trees) {
        const auto brute = test_util::count_relabelings_onto(t, t);
        if (std::llround(std::exp(automorphism_count_log(t))) != static_cast<long long>(brute)) ++bad;
    }
    return {bad == 0, fmt("%.0f plane trees, %.0f mismatches", double(trees.size()), double(bad))};
}

Outcome extinction() {
    const double one = extinction_probability(1.0);
    const double two = extinction_probability(2.0);
    const double oracle = test_util::bisect_extinction(2.0);
    return {one == 1.0 && std::abs(two - oracle) <= 1e-9,
            fmt("p_ext(1) = %.17g, p_ext(2) = %.12f, bisection %.12f", one, two, oracle)};
}

Outcome semigroup() {
    const int cut = 60;
    const auto ab = test_util::compose(test_util::depth1_kernel(2.0, 0.8, cut), test_util::depth1_kernel(2.0, 0.9, cut));
    const auto direct = test_util::depth1_kernel(2.0, 0.72, cut);
    double worst = 0.0;
    for (int c = 0; c <= 20; ++c) {
        double tv = 0.0;
        for (int x = 0; x <= cut; ++x) tv += std::abs(ab[c][x] - direct[c][x]);
        worst = std::max(worst, 0.5 * tv);
    }
    // the library transition, applied twice, against the exact composite law
    const ModelParams p1{2.0, 0.9, 1}, p2{2.0, 0.8, 1};
    Rng rng(606);
    std::vector<long long> deg;
    const auto start = RootedTree::star(4);
    for (int k = 0; k < 50000; ++k)
        deg.push_back(static_cast<long long>(markov_transition(markov_transition(start, p1, rng), p2, rng).degree(0)));
    const double pv = test_util::chi_square_gof(deg, [&](long long x) { return x <= cut ? direct[4][x] : 0.0; });
    return {worst <= 1e-8 && pv > 1e-3, fmt("worst TV over start degrees 0..20 = %.2e, sampled chi-square p = %.3f", worst, pv)};
}

Outcome mp_tree_equivalence() {
    const ModelParams p{2.0, 0.7, 4};
    const PsiTable psi(p);
    double worst = 0.0;
    std::size_t checks = 0;
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
        const Seed seed(7007, {rep});
        auto rng = seed.engine();
        const auto a = sample_pair(p, Hypothesis::H1, seed.derive(0));
        const auto g = forest_graph({a.t, sample_gw(p, rng)});
        const auto gp = forest_graph({a.t_prime, sample_gw(p, rng)});
        auto table = init_messages(g, gp);
        for (int t = 1; t <= 4; ++t) {
            const auto sm = aggregate(table, g, gp, psi, AlignConfig{});
            PairMemo memo(p);
            std::vector<RootedTree> ng, ngp;
            for (Vertex i = 0; i < g.n(); ++i) ng.push_back(neighborhood_tree(g, i, t).tree);
            for (Vertex u = 0; u < gp.n(); ++u) ngp.push_back(neighborhood_tree(gp, u, t).tree);
            for (Vertex i = 0; i < g.n(); ++i)
                for (Vertex u = 0; u < gp.n(); ++u) {
                    worst = std::max(worst, rel_err(sm.at(i, u), likelihood_ratio(ng[i], ngp[u], t, p, memo).log()));
                    ++checks;
                }
            table = mp_sweep(table, g, gp, psi, AlignConfig{});
        }
    }
    return {worst <= 1e-6, fmt("%.0f node pairs over t = 1..4, worst relative log error %.2e", double(checks), worst)};
}

Outcome kl_monotone() {
    const PhasePoint p{2.0, 0.8};
    std::vector<MonteCarloStats> kl;
    for (int d = 1; d <= 3; ++d) kl.push_back(kl_estimate(p, d, 1000, Seed(8008, {std::uint64_t(d)})));
    bool ok = true;
    for (int k = 0; k + 1 < 3; ++k)
        ok = ok && kl[k].mean <= kl[k + 1].mean + 3 * std::hypot(kl[k].std_error, kl[k + 1].std_error);
    return {ok, fmt("KL_1 = %.4f, KL_2 = %.4f, KL_3 = %.4f (SE of KL_3 %.4f)", kl[0].mean, kl[1].mean, kl[2].mean,
                    kl[2].std_error)};
}

double mean_overlap(double s) {
    const std::size_t n = 200;
    const double lambda = 2.5;
    const PsiTable psi(ModelParams{lambda, s, 1});
    double total = 0.0;
    for (std::uint64_t k = 0; k < 10; ++k) {
        const auto cp = sample_correlated_er(n, PhasePoint{lambda, s}, Seed(9009, {k}));
        const auto lg = largest_component(cp.g), lgp = largest_component(cp.g_prime);
        OverlapTruth truth;
        truth.n = n;
        truth.truth.assign(lg.graph.n(), no_vertex);
        for (Vertex a = 0; a < lg.graph.n(); ++a) truth.truth[a] = lgp.node_map[cp.sigma_star[lg.inverse[a]]];
        const auto r = mpalign2(lg.graph, lgp.graph, psi, 15, AlignConfig{}, truth);
        total += *r.trace[r.t_star - 1].overlap;
    }
    return total / 10.0;
}

Outcome overlap_gap() {
    const double hi = mean_overlap(0.95), lo = mean_overlap(0.40);
    return {hi - lo >= 0.2, fmt("mean overlap %.4f at s = 0.95, %.4f at s = 0.40, gap %.4f", hi, lo, hi - lo)};
}

Outcome one_sided() {
    const std::size_t n = 200;
    const double lambda = 2.0, s = 0.95;
    const PsiTable psi(ModelParams{lambda, s, 1});
    auto cfg = AlignConfig::derive(n, lambda, s);
    cfg.d = 3;
    cfg.beta_log = 1.0;
    std::size_t matched = 0, correct = 0, nonempty = 0;
    for (std::uint64_t k = 0; k < 10; ++k) {
        const auto cp = sample_correlated_er(n, PhasePoint{lambda, s}, Seed(1010, {k}));
        const auto map = prune_to_injective(mpalign(cp.g, cp.g_prime, psi, cfg).map);
        const auto m = metrics(map, cp.sigma_star, n);
        matched += m.matched;
        correct += m.correct;
        nonempty += m.matched > 0 ? 1 : 0;
    }
    const double floor = 50.0 / static_cast<double>(n);
    const double precision = matched ? static_cast<double>(correct) / matched : 0.0;
    double p_value = 1.0;
    if (matched > 0 && correct > 0) {
        boost::math::binomial_distribution<double> null(static_cast<double>(matched), floor);
        p_value = boost::math::cdf(boost::math::complement(null, static_cast<double>(correct) - 1.0));
    }
    return {precision >= floor && p_value < 0.01 && nonempty >= 8,
            fmt("%.0f/%.0f correct (precision %.3f), binomial p = %.2e vs precision 50/n", double(correct),
                double(matched), precision, p_value) +
                fmt(", %.0f/10 runs non-empty", double(nonempty))};
}

Outcome hard_phase() {
    const auto hard = v_iteration(PhasePoint{100.0, 0.05}, 10000, 1e-12);
    const auto easy = v_iteration(PhasePoint{2.0, 0.9}, 10000, 1e-12);
    const bool ok = hard.status == VStatus::converged && std::isfinite(hard.value) && hard.residual <= 1e-12 &&
                    (easy.status == VStatus::pole || easy.status == VStatus::diverged);
    return {ok, std::string("(100, 0.05): ") + to_string(hard.status) + fmt(" V = %.6f residual %.2e", hard.value, hard.residual) +
                    "; (2, 0.9): " + to_string(easy.status) + fmt(" at step %.0f", easy.step)};
}

Outcome s_star_check() {
    const double at_e = s_star(std::exp(1.0));
    const double g1 = s_star_g(2.0, 1.0);
    return {std::abs(at_e - 1.0) <= 1e-6 && g1 < 0.0, fmt("s*(e) = %.9f, g(1) at lambda 2 = %.6f", at_e, g1)};
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / ("treealign_accept_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const std::vector<std::pair<std::string, std::string>> commands{
        {"gen", "gen --lambda 2.5 --s 0.9 --n 300 --seed 13"},
        {"tree-sim", "tree-sim --lambda 1.5,2 --s 0.5,0.9 --depth 2,3 --trials 300 --seed 13"},
        {"phase", "phase --lambda 2,100 --s 0.05,0.9 --trials 200 --seed 13"},
        {"align2", "align --lambda 2.5 --s 0.9 --n 150 --runs 2 --d-max 6 --seed 13"},
        {"align1", "align --algo mpalign --lambda 2 --s 0.95 --n 200 --depth 3 --beta-log 1 --runs 2 --seed 13"}};
    std::size_t files = 0;
    for (const auto& [name, args] : commands) {
        for (const char* rep : {"a", "b"}) {
            const std::string cmd = std::string(TREEALIGN_CLI) + " " + args + " --out " + (root / name / rep).string() +
                                    " 2>/dev/null";
            if (std::system(cmd.c_str()) != 0) return {false, "command failed: " + args};
        }
        for (const auto& entry : fs::directory_iterator(root / name / "a")) {
            const auto other = root / name / "b" / entry.path().filename();
            if (!fs::exists(other) || slurp(entry.path()) != slurp(other))
                return {false, name + ": " + entry.path().filename().string() + " differs"};
            ++files;
        }
    }
    fs::remove_all(root);
    return {true, fmt("%.0f output files byte-identical across reruns of 5 commands", double(files))};
}

}  // namespace

int main() {
    report(1, "LR oracle equivalence", lr_oracle);
    report(2, "H0 martingale", martingale);
    report(3, "H0 Markov bound", markov_bound);
    report(4, "automorphism brute force", automorphisms);
    report(5, "extinction probability", extinction);
    report(6, "kernel semigroup", semigroup);
    report(7, "message passing equals tree LR", mp_tree_equivalence);
    report(8, "KL monotone in depth", kl_monotone);
    report(9, "overlap gap n=200", overlap_gap);
    report(10, "one-sided precision", one_sided);
    report(11, "hard-phase numerics", hard_phase);
    report(12, "s* threshold", s_star_check);
    report(13, "CLI determinism", determinism);
    std::printf("%d of 13 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
