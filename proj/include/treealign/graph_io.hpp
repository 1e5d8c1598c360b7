#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "graph.hpp"

namespace treealign {

/// "# n=N" header followed by "i j" lines with i < j.
inline void write_edge_list(std::ostream& os, const SparseGraph& g) {
    os << "# n=" << g.n() << '\n';
    for (auto [a, b] : g.edges()) os << a << ' ' << b << '\n';
}

/// Accepts either endpoint order, comment lines starting with '#', and an
/// optional "# n=N" header. Without a header n is one past the largest id.
inline SparseGraph read_edge_list(std::istream& is) {
    std::optional<std::size_t> declared;
    std::vector<Edge> edges;
    std::vector<std::pair<Edge, std::size_t>> seen;  // normalized edge, line
    std::string line;
    std::size_t lineno = 0;
    std::size_t max_id = 0;
    bool any = false;
    while (std::getline(is, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '#') {
            const auto pos = line.find("n=");
            if (pos != std::string::npos && !declared && edges.empty()) {
                try {
                    declared = std::stoull(line.substr(pos + 2));
                } catch (const std::exception&) {
                    throw ParseError(lineno, "bad node-count header");
                }
            }
            continue;
        }
        std::istringstream ls(line);
        long long a = -1, b = -1;
        std::string extra;
        if (!(ls >> a >> b) || (ls >> extra)) throw ParseError(lineno, "expected two node ids");
        if (a < 0 || b < 0) throw ParseError(lineno, "negative node id");
        if (a == b) throw ParseError(lineno, "self-loop " + std::to_string(a));
        if (declared && (static_cast<std::size_t>(a) >= *declared || static_cast<std::size_t>(b) >= *declared))
            throw ParseError(lineno, "node id beyond declared n");
        const Edge e{static_cast<Vertex>(std::min(a, b)), static_cast<Vertex>(std::max(a, b))};
        edges.push_back(e);
        seen.emplace_back(e, lineno);
        max_id = std::max<std::size_t>(max_id, static_cast<std::size_t>(std::max(a, b)));
        any = true;
    }
    std::sort(seen.begin(), seen.end());
    for (std::size_t k = 1; k < seen.size(); ++k)
        if (seen[k].first == seen[k - 1].first)
            throw ParseError(std::max(seen[k].second, seen[k - 1].second), "duplicate edge " +
                                 std::to_string(seen[k].first.first) + " " + std::to_string(seen[k].first.second));
    const std::size_t n = declared ? *declared : (any ? max_id + 1 : 0);
    return SparseGraph(n, edges);
}

inline void save_edge_list(const std::filesystem::path& path, const SparseGraph& g) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    write_edge_list(os, g);
}

inline SparseGraph load_edge_list(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read " + path.string());
    return read_edge_list(is);
}

inline void save_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

inline nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read " + path.string());
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(0, path.string() + ": " + e.what());
    }
}

struct Bundle {
    SparseGraph g;
    SparseGraph g_prime;
    std::optional<std::vector<Vertex>> sigma_star;
    nlohmann::json meta;
};

/// Directory with g.edges, gprime.edges, sigma.json and meta.json.
inline void save_bundle(const std::filesystem::path& dir, const CorrelatedPair& pair, const nlohmann::json& meta) {
    std::filesystem::create_directories(dir);
    save_edge_list(dir / "g.edges", pair.g);
    save_edge_list(dir / "gprime.edges", pair.g_prime);
    save_json(dir / "sigma.json", nlohmann::json{{"sigma_star", pair.sigma_star}});
    save_json(dir / "meta.json", meta);
}

inline Bundle load_bundle(const std::filesystem::path& dir) {
    Bundle b;
    b.g = load_edge_list(dir / "g.edges");
    b.g_prime = load_edge_list(dir / "gprime.edges");
    if (std::filesystem::exists(dir / "sigma.json")) {
        auto sigma = load_json(dir / "sigma.json").at("sigma_star").get<std::vector<Vertex>>();
        if (sigma.size() != b.g.n()) throw ParseError(0, "sigma.json: length does not match g");
        std::vector<char> hit(b.g_prime.n(), 0);
        for (Vertex u : sigma) {
            if (u >= hit.size() || hit[u]) throw ParseError(0, "sigma.json: not a permutation");
            hit[u] = 1;
        }
        b.sigma_star = std::move(sigma);
    }
    if (std::filesystem::exists(dir / "meta.json")) b.meta = load_json(dir / "meta.json");
    return b;
}

}  // namespace treealign
