#include <CLI11.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "treealign/treealign.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace treealign;

namespace {

constexpr const char* version = "0.1.0";
constexpr const char* csv_tag = "# treealign-csv v1\n";

struct Options {
    std::uint64_t seed = 1;
    std::string out;
    std::size_t trials = 1000;
    std::vector<double> lambda;
    std::vector<double> s;
    std::vector<std::size_t> n;
    std::vector<int> depth;
    std::string algo = "mpalign2";
    std::optional<double> gamma;
    std::optional<double> beta_log;
    std::size_t degree_cap = default_degree_cap;
    std::vector<double> betas{100.0};
    std::size_t runs = 1;
    std::string input;
    int d_max = 15;
    std::size_t table_budget = default_table_budget;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string sha256_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char h[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(h, sizeof h, "%02x", md[i]);
        hex += h;
    }
    return hex;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("cannot write " + p.string());
    os << text;
}

void write_manifest(const fs::path& dir, const std::string& command, const json& config,
                    const std::vector<std::string>& outputs, const json& seeds) {
    json m;
    m["tool"] = "treealign";
    m["version"] = version;
    m["command"] = command;
    m["config"] = config;
    m["seeds"] = seeds;
    json digests = json::object();
    for (const auto& f : outputs) digests[f] = sha256_file(dir / f);
    m["outputs"] = digests;
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

fs::path prepare_out(const Options& o) {
    if (o.out.empty()) throw ConfigError("--out is required");
    fs::path dir(o.out);
    fs::create_directories(dir);
    return dir;
}

// Validation, run before any sampling.

void check_lambda(const std::vector<double>& v, const char* field) {
    if (v.empty()) throw ConfigError(std::string(field) + ": at least one value is required");
    for (double x : v)
        if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(std::string(field) + ": must be positive and finite, got " + num(x));
}

void check_s(const std::vector<double>& v, const char* field) {
    if (v.empty()) throw ConfigError(std::string(field) + ": at least one value is required");
    for (double x : v)
        if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(std::string(field) + ": must lie in [0,1], got " + num(x));
}

void check_common(const Options& o, const std::string& cmd) {
    if (o.degree_cap < 1 || o.degree_cap > 30)
        throw ConfigError(cmd + ".degree-cap: must lie in [1,30], got " + std::to_string(o.degree_cap));
    for (int d : o.depth)
        if (d < 0) throw ConfigError(cmd + ".depth: must be >= 0, got " + std::to_string(d));
    for (double b : o.betas)
        if (!(b > 0.0)) throw ConfigError(cmd + ".betas: thresholds must be positive, got " + num(b));
}

json echo(const Options& o, const std::string& cmd) {
    json j;
    j["seed"] = o.seed;
    j["lambda"] = o.lambda;
    j["s"] = o.s;
    j["degree_cap"] = o.degree_cap;
    if (cmd == "tree-sim" || cmd == "phase") {
        j["depth"] = o.depth;
        j["trials"] = o.trials;
        j["betas"] = o.betas;
    }
    if (cmd == "align" || cmd == "gen") j["n"] = o.n;
    if (cmd == "align") {
        j["algo"] = o.algo;
        j["runs"] = o.runs;
        j["depth"] = o.depth;
        j["d_max"] = o.d_max;
        j["gamma"] = o.gamma ? json(*o.gamma) : json(nullptr);
        j["beta_log"] = o.beta_log ? json(*o.beta_log) : json(nullptr);
        j["input"] = o.input;
        j["table_budget"] = o.table_budget;
    }
    return j;
}

// tree-sim

void cmd_tree_sim(Options o) {
    if (o.depth.empty()) o.depth = {2};
    check_lambda(o.lambda, "tree-sim.lambda");
    check_s(o.s, "tree-sim.s");
    check_common(o, "tree-sim");
    if (o.trials < 1) throw ConfigError("tree-sim.trials: must be >= 1");
    const auto dir = prepare_out(o);

    std::ostringstream csv;
    csv << csv_tag << "lambda,s,d,hypothesis,statistic,value,std_error,n_trials,seed\n";
    const Seed master(o.seed);
    std::uint64_t point = 0;
    for (double lam : o.lambda)
        for (double s : o.s)
            for (int d : o.depth) {
                const ModelParams params{lam, s, d};
                for (Hypothesis h : {Hypothesis::H0, Hypothesis::H1}) {
                    const auto seed = master.derive(point).derive(h == Hypothesis::H0 ? 0 : 1);
                    const auto st = summarize(sample_log_lr(params, h, o.trials, seed, o.degree_cap), o.betas);
                    auto row = [&](const std::string& stat, double v, double se) {
                        csv << num(lam) << ',' << num(s) << ',' << d << ',' << to_string(h) << ',' << stat << ','
                            << num(v) << ',' << num(se) << ',' << o.trials << ',' << o.seed << '\n';
                    };
                    row("mean_log_L", st.mean, st.std_error);
                    for (const auto& [beta, ex] : st.exceed) row("exceed_beta_" + num(beta), ex.frequency, ex.std_error);
                }
                ++point;
            }
    write_text(dir / "results.csv", csv.str());
    write_manifest(dir, "tree-sim", echo(o, "tree-sim"), {"results.csv"},
                   {{"master", o.seed}, {"derivation", "grid point index, then 0 for H0 and 1 for H1, then trial index"}});
}

// phase

json stats_json(const MonteCarloStats& st) {
    json ex = json::object();
    for (const auto& [beta, e] : st.exceed) ex[num(beta)] = {{"frequency", e.frequency}, {"std_error", e.std_error}};
    return {{"n_trials", st.n_trials}, {"mean_log_L", st.mean}, {"std_error", st.std_error}, {"exceedance", ex}};
}

json verdict_json(const PhaseVerdict& v) {
    json labels = json::array();
    for (auto l : v.labels) labels.push_back(to_string(l));
    const auto& ev = v.evidence;
    json e;
    e["lambda_s"] = ev.lambda_s;
    e["s_star"] = ev.s_star ? json{{"value", ev.s_star->value}, {"sign_changes", ev.s_star->sign_changes}} : json(nullptr);
    e["auto_condition"] = {{"holds", ev.auto_check.holds}, {"lhs", ev.auto_check.lhs}, {"rhs", ev.auto_check.rhs},
                           {"r0", ev.r0}, {"eta", ev.eta}};
    e["v_iteration"] = {{"status", to_string(ev.v.status)}, {"step", ev.v.step}, {"value", ev.v.value},
                        {"residual", ev.v.residual}};
    e["exceedance"] = ev.exceedance ? json{{"H0", stats_json(ev.exceedance->h0)}, {"H1", stats_json(ev.exceedance->h1)}}
                                    : json(nullptr);
    return {{"lambda", v.point.lambda}, {"s", v.point.s}, {"labels", labels}, {"note", v.note}, {"evidence", e}};
}

void cmd_phase(Options o, bool trials_given) {
    check_lambda(o.lambda, "phase.lambda");
    check_s(o.s, "phase.s");
    check_common(o, "phase");
    if (o.depth.size() > 1) throw ConfigError("phase.depth: takes a single Monte Carlo depth");
    const auto dir = prepare_out(o);

    PhaseConfig cfg;
    cfg.mc_trials = trials_given ? o.trials : 0;
    if (!o.depth.empty()) cfg.mc_depth = o.depth.front();
    cfg.mc_betas = o.betas;
    cfg.mc_degree_cap = o.degree_cap;
    cfg.seed = Seed(o.seed);
    std::vector<PhasePoint> grid;
    for (double lam : o.lambda)
        for (double s : o.s) grid.push_back({lam, s});
    std::ostringstream out;
    for (const auto& v : phase_scan(grid, cfg)) out << verdict_json(v).dump() << '\n';
    write_text(dir / "verdicts.jsonl", out.str());
    auto config = echo(o, "phase");
    config["trials"] = cfg.mc_trials;
    config["depth"] = cfg.mc_depth;
    write_manifest(dir, "phase", config, {"verdicts.jsonl"},
                   {{"master", o.seed}, {"derivation", "grid point index for Monte Carlo evidence"}});
}

// gen

void cmd_gen(Options o) {
    check_lambda(o.lambda, "gen.lambda");
    check_s(o.s, "gen.s");
    if (o.lambda.size() != 1 || o.s.size() != 1 || o.n.size() != 1)
        throw ConfigError("gen: takes exactly one value each for lambda, s and n");
    if (o.n.front() < 1) throw ConfigError("gen.n: must be >= 1");
    const auto dir = prepare_out(o);
    const double lam = o.lambda.front(), s = o.s.front();
    const std::size_t n = o.n.front();
    const auto pair = sample_correlated_er(n, PhasePoint{lam, s}, Seed(o.seed));
    json meta{{"lambda", lam}, {"s", s}, {"n", n}, {"seed", o.seed}, {"version", version}};
    save_bundle(dir, pair, meta);
    write_manifest(dir, "gen", echo(o, "gen"), {"g.edges", "gprime.edges", "sigma.json", "meta.json"},
                   {{"master", o.seed}});
}

// align

struct RunOutput {
    std::vector<ScoredPair> matches;
    std::vector<TraceRow> trace;
    json metrics;
};

AlignConfig mpalign_config(const Options& o, std::size_t n, double lam, double s) {
    AlignConfig cfg;
    try {
        cfg = AlignConfig::derive(n, lam, s);
    } catch (const DomainError& e) {
        if (o.depth.empty() || !(o.gamma || o.beta_log)) throw ConfigError(std::string("align: ") + e.what());
    }
    if (!o.depth.empty()) cfg.d = o.depth.front();
    if (o.gamma) {
        cfg.gamma = *o.gamma;
        cfg.beta_log = std::pow(static_cast<double>(n), *o.gamma);
    }
    if (o.beta_log) cfg.beta_log = *o.beta_log;
    cfg.degree_cap = o.degree_cap;
    cfg.table_budget = o.table_budget;
    return cfg;
}

RunOutput run_mpalign(const Options& o, const SparseGraph& g, const SparseGraph& gp,
                      const std::optional<std::vector<Vertex>>& sigma, double lam, double s) {
    const auto cfg = mpalign_config(o, g.n(), lam, s);
    const PsiTable psi(ModelParams{lam, s, 1});
    const auto res = mpalign(g, gp, psi, cfg);
    const auto pruned = prune_to_injective(res.map);
    RunOutput out;
    for (const auto& m : res.matches)
        if (std::find(pruned.pairs.begin(), pruned.pairs.end(), std::pair{m.i, m.u}) != pruned.pairs.end())
            out.matches.push_back(m);
    out.metrics = {{"matched", pruned.pairs.size()}, {"d", cfg.d}, {"beta_log", cfg.beta_log}};
    if (sigma) {
        const auto m = metrics(pruned, *sigma, g.n());
        out.metrics["correct"] = m.correct;
        out.metrics["overlap"] = m.overlap;
        out.metrics["error_fraction"] = m.error_fraction;
    }
    return out;
}

RunOutput run_mpalign2(const Options& o, const SparseGraph& g, const SparseGraph& gp,
                       const std::optional<std::vector<Vertex>>& sigma, double lam, double s) {
    const auto lg = largest_component(g);
    const auto lgp = largest_component(gp);
    std::optional<OverlapTruth> truth;
    if (sigma) {
        OverlapTruth t;
        t.n = g.n();
        t.truth.assign(lg.graph.n(), no_vertex);
        for (Vertex a = 0; a < lg.graph.n(); ++a) t.truth[a] = lgp.node_map[(*sigma)[lg.inverse[a]]];
        truth = std::move(t);
    }
    AlignConfig cfg;
    cfg.degree_cap = o.degree_cap;
    cfg.table_budget = o.table_budget;
    const PsiTable psi(ModelParams{lam, s, 1});
    const auto res = mpalign2(lg.graph, lgp.graph, psi, o.d_max, cfg, truth);
    RunOutput out;
    std::size_t correct = 0;
    for (Vertex a = 0; a < lg.graph.n(); ++a) {
        const Vertex i = lg.inverse[a], u = lgp.inverse[res.pi[a]];
        out.matches.push_back({i, u, res.scores.at(a, res.pi[a])});
        if (sigma && (*sigma)[i] == u) ++correct;
    }
    out.trace = res.trace;
    const auto& best = res.trace[res.t_star - 1];
    out.metrics = {{"matched", out.matches.size()}, {"t_star", res.t_star}, {"e_t_star", best.e},
                   {"lcc_g", lg.graph.n()}, {"lcc_g_prime", lgp.graph.n()}};
    if (sigma) {
        out.metrics["correct"] = correct;
        out.metrics["overlap"] = *best.overlap;
        out.metrics["error_fraction"] = static_cast<double>(out.matches.size() - correct) / static_cast<double>(g.n());
    }
    return out;
}

void cmd_align(Options o) {
    check_common(o, "align");
    if (o.algo != "mpalign" && o.algo != "mpalign2") throw ConfigError("align.algo: must be mpalign or mpalign2");
    if (o.gamma && !(*o.gamma > 0.0 && std::isfinite(*o.gamma)))
        throw ConfigError("align.gamma: must be positive and finite, got " + num(*o.gamma));
    if (o.beta_log && !std::isfinite(*o.beta_log)) throw ConfigError("align.beta-log: must be finite");
    if (o.d_max < 1) throw ConfigError("align.d-max: must be >= 1");
    if (o.depth.size() > 1) throw ConfigError("align.depth: takes a single value");
    if (o.algo == "mpalign" && !o.depth.empty() && o.depth.front() < 2)
        throw ConfigError("align.depth: mpalign needs d >= 2, got " + std::to_string(o.depth.front()));
    if (o.runs < 1) throw ConfigError("align.runs: must be >= 1");

    std::optional<Bundle> bundle;
    if (!o.input.empty()) {
        bundle = load_bundle(o.input);
        if (o.lambda.empty() && bundle->meta.contains("lambda")) o.lambda = {bundle->meta["lambda"].get<double>()};
        if (o.s.empty() && bundle->meta.contains("s")) o.s = {bundle->meta["s"].get<double>()};
        o.n = {bundle->g.n()};
        o.runs = 1;
        if (bundle->g.n() != bundle->g_prime.n()) throw ConfigError("align.input: graphs differ in node count");
    }
    check_lambda(o.lambda, "align.lambda");
    check_s(o.s, "align.s");
    if (o.lambda.size() != 1 || o.s.size() != 1) throw ConfigError("align: takes exactly one value each for lambda and s");
    if (o.n.size() != 1 || o.n.front() < 1) throw ConfigError("align.n: exactly one value >= 1 is required");
    const double lam = o.lambda.front(), s = o.s.front();
    const std::size_t n = o.n.front();
    if (o.algo == "mpalign") mpalign_config(o, n, lam, s);  // rejects underivable defaults up front
    const auto dir = prepare_out(o);

    std::ostringstream matches, trace, metrics_csv;
    matches << csv_tag << "run,i,u,log_score\n";
    trace << csv_tag << "run,t,e,overlap\n";
    metrics_csv << csv_tag << "run,algo,n,matched,correct,overlap,error_fraction,t_star,e_t_star\n";
    json run_meta = json::array();
    const Seed master(o.seed);
    for (std::size_t r = 0; r < o.runs; ++r) {
        CorrelatedPair pair;
        std::optional<std::vector<Vertex>> sigma;
        if (bundle) {
            pair.g = bundle->g;
            pair.g_prime = bundle->g_prime;
            sigma = bundle->sigma_star;
        } else {
            pair = sample_correlated_er(n, PhasePoint{lam, s}, master.derive(r));
            sigma = pair.sigma_star;
        }
        const auto out = o.algo == "mpalign" ? run_mpalign(o, pair.g, pair.g_prime, sigma, lam, s)
                                             : run_mpalign2(o, pair.g, pair.g_prime, sigma, lam, s);
        for (const auto& m : out.matches) matches << r << ',' << m.i << ',' << m.u << ',' << num(m.log_score) << '\n';
        for (const auto& row : out.trace)
            trace << r << ',' << row.t << ',' << num(row.e) << ',' << (row.overlap ? num(*row.overlap) : "") << '\n';
        auto field = [&](const char* k) -> std::string {
            if (!out.metrics.contains(k)) return "";
            const auto& v = out.metrics[k];
            return v.is_number_float() ? num(v.get<double>()) : v.dump();
        };
        metrics_csv << r << ',' << o.algo << ',' << n << ',' << field("matched") << ',' << field("correct") << ','
                    << field("overlap") << ',' << field("error_fraction") << ',' << field("t_star") << ','
                    << field("e_t_star") << '\n';
        json rm = out.metrics;
        rm["run"] = r;
        run_meta.push_back(rm);
    }
    write_text(dir / "matches.csv", matches.str());
    write_text(dir / "trace.csv", trace.str());
    write_text(dir / "metrics.csv", metrics_csv.str());
    json meta{{"config", echo(o, "align")}, {"version", version}, {"runs", run_meta}};
    if (bundle) meta["input_meta"] = bundle->meta;
    write_text(dir / "meta.json", meta.dump(2) + "\n");
    write_manifest(dir, "align", echo(o, "align"), {"matches.csv", "trace.csv", "metrics.csv", "meta.json"},
                   {{"master", o.seed}, {"derivation", bundle ? "bundle input, no sampling" : "run index"}});
}

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--lambda", o.lambda, "mean degree(s), comma separated")->delimiter(',');
    sub->add_option("--s", o.s, "correlation(s) in [0,1], comma separated")->delimiter(',');
    sub->add_option("--degree-cap", o.degree_cap, "largest degree handled by the matching sum");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"treealign: correlated tree detection and sparse graph alignment experiments"};
    app.set_version_flag("--version", version);
    app.set_config("--config", "", "TOML/INI config; command-line flags take precedence");
    app.require_subcommand(1);
    Options o;

    auto* tree_sim = app.add_subcommand("tree-sim", "Monte Carlo log-likelihood-ratio sweep over (lambda, s, d)");
    add_common(tree_sim, o);
    tree_sim->add_option("--depth", o.depth, "tree depth(s)")->delimiter(',');
    tree_sim->add_option("--trials", o.trials, "trials per grid point and hypothesis");
    tree_sim->add_option("--betas", o.betas, "exceedance thresholds on L")->delimiter(',');

    auto* phase = app.add_subcommand("phase", "phase classification over a (lambda, s) grid");
    add_common(phase, o);
    auto* phase_trials = phase->add_option("--trials", o.trials, "Monte Carlo trials for exceedance evidence (off unless set)");
    phase->add_option("--depth", o.depth, "Monte Carlo depth");
    phase->add_option("--betas", o.betas, "exceedance thresholds on L")->delimiter(',');

    auto* align = app.add_subcommand("align", "align correlated Erdos-Renyi pairs");
    add_common(align, o);
    align->add_option("--n", o.n, "number of nodes");
    align->add_option("--depth", o.depth, "mpalign depth d");
    align->add_option("--algo", o.algo, "mpalign or mpalign2");
    align->add_option("--gamma", o.gamma, "threshold exponent: log beta = n^gamma");
    align->add_option("--beta-log", o.beta_log, "log beta directly; overrides --gamma");
    align->add_option("--runs", o.runs, "independent sampled pairs");
    align->add_option("--input", o.input, "bundle directory to align instead of sampling");
    align->add_option("--d-max", o.d_max, "mpalign2 iterations");
    align->add_option("--table-budget", o.table_budget, "largest message table in entries");

    auto* gen = app.add_subcommand("gen", "write a correlated pair bundle");
    add_common(gen, o);
    gen->add_option("--n", o.n, "number of nodes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        if (tree_sim->parsed()) cmd_tree_sim(o);
        if (phase->parsed()) cmd_phase(o, phase_trials->count() > 0);
        if (align->parsed()) cmd_align(o);
        if (gen->parsed()) cmd_gen(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const CapacityExceeded& e) {
        std::cerr << "capacity: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "done in %.3f s\n", secs);
    return 0;
}
