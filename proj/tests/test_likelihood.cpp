#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "stat_util.hpp"
#include "treealign/likelihood.hpp"
#include "treealign/tree_io.hpp"

using namespace treealign;
using test_util::shapes_up_to;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

double psi_linear(std::size_t k, std::size_t c, std::size_t cp, double lambda, double s) {
    return std::exp(lambda * s) * std::pow(s, double(k)) * std::pow(1 - s, double(c + cp - 2 * k)) /
           (std::pow(lambda, double(k)) * std::tgamma(k + 1.0));
}

// Sum over k and over ordered pairs of injections [k] -> [c], [k] -> [c'].
double matching_sum_oracle(const std::vector<double>& w_lin, std::size_t c, std::size_t cp, double lambda, double s) {
    double total = 0.0;
    for (std::size_t k = 0; k <= std::min(c, cp); ++k) {
        double inner = 0.0;
        std::vector<std::size_t> a, b;
        std::vector<char> ua(c, 0), ub(cp, 0);
        std::function<void()> pick_b;
        std::function<void()> pick_a = [&] {
            if (a.size() == k) return pick_b();
            for (std::size_t x = 0; x < c; ++x)
                if (!ua[x]) {
                    ua[x] = 1;
                    a.push_back(x);
                    pick_a();
                    a.pop_back();
                    ua[x] = 0;
                }
        };
        pick_b = [&] {
            if (b.size() == k) {
                double prod = 1.0;
                for (std::size_t i = 0; i < k; ++i) prod *= w_lin[a[i] * cp + b[i]];
                inner += prod;
                return;
            }
            for (std::size_t y = 0; y < cp; ++y)
                if (!ub[y]) {
                    ub[y] = 1;
                    b.push_back(y);
                    pick_b();
                    b.pop_back();
                    ub[y] = 0;
                }
        };
        pick_a();
        total += psi_linear(k, c, cp, lambda, s) * inner;
    }
    return total;
}

}  // namespace

TEST(Psi, Examples) {
    const ModelParams p{2.0, 0.5, 1};
    EXPECT_NEAR(log_psi(0, 0, 0, p).log(), 1.0, 1e-15);
    EXPECT_NEAR(log_psi(1, 1, 1, p).log(), std::log(std::exp(1.0) * 0.25), 1e-15);
    EXPECT_NEAR(log_psi(2, 2, 2, ModelParams{1.0, 1.0, 1}).log(), std::log(std::exp(1.0) / 2.0), 1e-15);
    EXPECT_TRUE(log_psi(1, 2, 2, ModelParams{1.0, 1.0, 1}).is_zero());
    EXPECT_THROW(log_psi(2, 1, 3, p), DomainError);
}

TEST(Psi, SymmetricAndMatchesClosedForm) {
    for (double s : {0.0, 0.3, 0.9, 1.0}) {
        const PsiTable t(ModelParams{1.7, s, 1});
        for (std::size_t c = 0; c < 6; ++c)
            for (std::size_t cp = 0; cp < 6; ++cp)
                for (std::size_t k = 0; k <= std::min(c, cp); ++k) {
                    EXPECT_EQ(t.log_psi(k, c, cp), t.log_psi(k, cp, c));
                    const double lin = psi_linear(k, c, cp, 1.7, s);
                    if (lin == 0.0) {
                        EXPECT_EQ(t.log_psi(k, c, cp), log_zero);
                    } else {
                        EXPECT_NEAR(t.log_psi(k, c, cp), std::log(lin), 1e-12);
                    }
                }
    }
}

TEST(MatchingSum, EmptyIsPsiZero) {
    const ModelParams p{2.0, 0.5, 1};
    EXPECT_NEAR(matching_sum({}, 0, 0, p).log(), 1.0, 1e-15);
}

TEST(MatchingSum, OneByOne) {
    const ModelParams p{2.0, 0.5, 1};
    const double log_l = 0.7;
    const std::vector<double> w{log_l};
    const double expect = std::log(psi_linear(0, 1, 1, 2, 0.5) + psi_linear(1, 1, 1, 2, 0.5) * std::exp(log_l));
    EXPECT_NEAR(matching_sum(w, 1, 1, p).log(), expect, 1e-14);
}

TEST(MatchingSum, EqualsExhaustiveInjections) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (double s : {0.0, 0.2, 0.5, 0.8, 0.97, 1.0})
        for (std::size_t c = 0; c <= 4; ++c)
            for (std::size_t cp = 0; cp <= 4; ++cp)
                for (int rep = 0; rep < 5; ++rep) {
                    std::vector<double> w(c * cp), lin(c * cp);
                    for (std::size_t k = 0; k < w.size(); ++k) {
                        w[k] = u(rng);
                        lin[k] = std::exp(w[k]);
                    }
                    const ModelParams p{1.6, s, 1};
                    const double oracle = matching_sum_oracle(lin, c, cp, 1.6, s);
                    const double got = matching_sum(w, c, cp, p).log();
                    if (oracle == 0.0) {
                        EXPECT_EQ(got, log_zero) << "s=" << s << " c=" << c << " c'=" << cp;
                    } else {
                        EXPECT_LE(std::abs(std::exp(got - std::log(oracle)) - 1.0), 1e-12)
                            << "s=" << s << " c=" << c << " c'=" << cp;
                    }
                }
}

TEST(MatchingSum, ZeroWeightEntries) {
    // a -inf entry removes every matching that uses it
    const ModelParams p{2.0, 0.6, 1};
    std::vector<double> w{log_zero, 0.0, 0.0, log_zero};
    std::vector<double> lin{0.0, 1.0, 1.0, 0.0};
    EXPECT_NEAR(matching_sum(w, 2, 2, p).log(), std::log(matching_sum_oracle(lin, 2, 2, 2.0, 0.6)), 1e-12);
}

TEST(MatchingSum, TransposeSymmetric) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    const PsiTable psi(ModelParams{2.0, 0.7, 1});
    for (std::size_t c = 1; c <= 6; ++c)
        for (std::size_t cp = 1; cp <= 6; ++cp) {
            std::vector<double> w(c * cp), wt(c * cp);
            for (auto& x : w) x = g(rng);
            for (std::size_t i = 0; i < c; ++i)
                for (std::size_t j = 0; j < cp; ++j) wt[j * c + i] = w[i * cp + j];
            EXPECT_NEAR(matching_sum(w, c, cp, psi), matching_sum(wt, cp, c, psi), 1e-12);
        }
}

TEST(MatchingSum, DegreeCap) {
    const ModelParams p{2.0, 0.5, 1};
    std::vector<double> w(4 * 5, 0.0);
    EXPECT_THROW(matching_sum(w, 4, 5, PsiTable(p), 3), DegreeCapExceeded);
    EXPECT_NO_THROW(matching_sum(w, 4, 5, PsiTable(p), 4));
    // a single large side is fine
    std::vector<double> wide(1 * 40, 0.0);
    EXPECT_NO_THROW(matching_sum(wide, 1, 40, PsiTable(p)));
}

TEST(LikelihoodRatio, SingleNodes) {
    for (int d = 1; d < 5; ++d) {
        const ModelParams p{2.3, 0.4, d};
        EXPECT_NEAR(likelihood_ratio(RootedTree(), RootedTree(), d, p).log(), 2.3 * 0.4, 1e-14);
    }
}

TEST(LikelihoodRatio, DepthZeroIsOne) {
    const ModelParams p{2.0, 0.5, 0};
    EXPECT_EQ(likelihood_ratio(from_paren("((())())"), RootedTree::star(4), 0, p).log(), 0.0);
}

TEST(LikelihoodRatio, DeeperNodesIgnored) {
    const ModelParams p{2.0, 0.6, 2};
    const auto a = from_paren("((()(()))(()))"), b = from_paren("(((()))())");
    EXPECT_EQ(likelihood_ratio(a, b, 2, p).log(), likelihood_ratio(prune(a, 2), prune(b, 2), 2, p).log());
}

TEST(LikelihoodRatio, ExplicitDegreesOneOne) {
    const ModelParams p{2.0, 0.5, 1};
    using test_util::poisson_pmf;
    const double num = poisson_pmf(1, 0) * poisson_pmf(1, 1) * poisson_pmf(1, 1) +
                       poisson_pmf(1, 1) * poisson_pmf(1, 0) * poisson_pmf(1, 0);
    const double expect = std::log(num / (poisson_pmf(2, 1) * poisson_pmf(2, 1)));
    const auto t = RootedTree::star(1);
    EXPECT_NEAR(likelihood_ratio_explicit(t, t, 1, p).log(), expect, 1e-13);
    EXPECT_NEAR(likelihood_ratio(t, t, 1, p).log(), expect, 1e-13);
    EXPECT_NEAR(likelihood_ratio_explicit(RootedTree(), RootedTree(), 1, p).log(), 1.0, 1e-14);
}

TEST(LikelihoodRatio, ExplicitGuard) {
    const ModelParams p{2.0, 0.5, 1};
    EXPECT_THROW(likelihood_ratio_explicit(RootedTree::star(20), RootedTree(), 1, p), OracleTooLarge);
}

TEST(LikelihoodRatio, RecursiveEqualsExplicitExhaustive) {
    const auto shapes = shapes_up_to(2, 3);
    ASSERT_EQ(shapes.size(), 35u);
    for (double s : {0.3, 0.8}) {
        const ModelParams p{1.8, s, 2};
        PairMemo memo(p);
        for (const auto& a : shapes)
            for (const auto& b : shapes) {
                const double rec = likelihood_ratio(a, b, 2, p, memo).log();
                const double ex = likelihood_ratio_explicit(a, b, 2, p).log();
                EXPECT_LE(rel_err(rec, ex), 1e-9) << to_paren(a) << " " << to_paren(b);
            }
    }
}

TEST(LikelihoodRatio, RecursiveEqualsExplicitDepthThree) {
    std::vector<RootedTree> trees;
    Rng rng(3);
    const ModelParams p{1.5, 0.7, 3};
    while (trees.size() < 25) {
        auto t = sample_gw(p, rng);
        if (t.size() <= 9) trees.push_back(t);
    }
    for (const auto& a : trees)
        for (const auto& b : trees)
            EXPECT_LE(rel_err(likelihood_ratio(a, b, 3, p).log(), likelihood_ratio_explicit(a, b, 3, p).log()), 1e-9);
}

TEST(LikelihoodRatio, ExactlySymmetric) {
    const ModelParams p{2.0, 0.8, 4};
    for (std::uint64_t k = 0; k < 300; ++k) {
        const auto s = sample_pair(p, k % 2 ? Hypothesis::H1 : Hypothesis::H0, Seed(k));
        PairMemo m1(p), m2(p);
        EXPECT_EQ(likelihood_ratio(s.t, s.t_prime, 4, p, m1).log(), likelihood_ratio(s.t_prime, s.t, 4, p, m2).log());
    }
}

TEST(LikelihoodRatio, RelabelingInvariant) {
    const ModelParams p{2.0, 0.8, 4};
    Rng rng(4);
    for (std::uint64_t k = 0; k < 100; ++k) {
        const auto s = sample_pair(p, Hypothesis::H1, Seed(k));
        EXPECT_EQ(likelihood_ratio(s.t, s.t_prime, 4, p).log(),
                  likelihood_ratio(relabel_uniform(s.t, rng), relabel_uniform(s.t_prime, rng), 4, p).log());
    }
}

TEST(LikelihoodRatio, MemoMatchesRecomputation) {
    const ModelParams p{2.0, 0.7, 3};
    PairMemo shared(p);
    for (std::uint64_t k = 0; k < 200; ++k) {
        const auto s = sample_pair(p, Hypothesis::H1, Seed(k));
        EXPECT_EQ(likelihood_ratio(s.t, s.t_prime, 3, p, shared).log(), likelihood_ratio(s.t, s.t_prime, 3, p).log());
    }
    EXPECT_GT(shared.size(), 0u);
    PairMemo other(ModelParams{2.0, 0.5, 3});
    EXPECT_THROW(likelihood_ratio(RootedTree(), RootedTree(), 3, p, other), DomainError);
}

TEST(LikelihoodRatio, MartingaleUnderH0) {
    const ModelParams p{1.5, 0.7, 3};
    std::vector<double> lin;
    for (std::uint64_t k = 0; k < 20000; ++k) {
        const auto s = sample_pair(p, Hypothesis::H0, Seed(2024, {k}));
        lin.push_back(std::exp(likelihood_ratio(s.t, s.t_prime, 3, p).log()));
    }
    const auto m = test_util::mean_se(lin);
    EXPECT_LE(std::abs(m.mean - 1.0), 4 * m.se) << "mean " << m.mean << " se " << m.se;

    for (double beta : {10.0, 100.0}) {
        double hits = 0;
        for (double x : lin) hits += x > beta ? 1 : 0;
        const double f = hits / lin.size();
        const double se = std::sqrt(std::max(f * (1 - f), 1.0 / lin.size()) / lin.size());
        EXPECT_LE(f, 1.0 / beta + 3 * se);
    }
}

TEST(LowerBound, RequiresGroundTruth) {
    const ModelParams p{2.0, 0.5, 2};
    EXPECT_THROW(lower_bound_lr(sample_pair(p, Hypothesis::H0, Seed(1)), p), MissingGroundTruth);
}

TEST(LowerBound, SingleNodeIntersection) {
    const ModelParams p{2.0, 0.4, 2};
    TreePairSample s;
    s.hypothesis = Hypothesis::H1;
    s.t = from_paren("((())())");
    s.t_prime = RootedTree::star(3);
    s.ground_truth = GroundTruth{RootedTree(), {0}, {0}};
    const double expect = 2 * std::log(0.6) + 3 * std::log(0.6) + 0.8;
    EXPECT_NEAR(lower_bound_lr(s, p).log(), expect, 1e-13);
}

TEST(LowerBound, SOneSample) {
    const ModelParams p{2.0, 1.0, 3};
    const auto s = sample_pair(p, Hypothesis::H1, Seed(77));
    const auto& tau = s.ground_truth->tau_star;
    double expect = automorphism_count_log(tau);
    for (NodeId v = 0; v < tau.size(); ++v)
        if (tau.depth(v) <= 2) expect += 2.0 - tau.degree(v) * std::log(2.0);
    EXPECT_NEAR(lower_bound_lr(s, p).log(), expect, 1e-10);
}

TEST(LowerBound, BelowLikelihoodRatio) {
    const ModelParams p{2.0, 0.8, 3};
    for (std::uint64_t k = 0; k < 1000; ++k) {
        const auto s = sample_pair(p, Hypothesis::H1, Seed(31, {k}));
        const double lr = likelihood_ratio(s.t, s.t_prime, 3, p).log();
        const double lb = lower_bound_lr(s, p).log();
        EXPECT_GE(lr, lb - 1e-9 * std::max(1.0, std::abs(lb))) << k;
    }
}

TEST(OracleDump, CsvRows) {
    const ModelParams p{2.0, 0.5, 2};
    std::vector<RootedTree> trees{RootedTree(), RootedTree::star(2)};
    std::ostringstream os;
    dump_oracle_csv(os, trees, 2, p);
    const auto text = os.str();
    EXPECT_EQ(text.rfind("# treealign-csv v1\nt,t_prime,depth,log_L\n", 0), 0u);
    EXPECT_NE(text.find("(),(),2,1\n"), std::string::npos);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
}
