#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "tree.hpp"

namespace treealign {

/// Nested-parenthesis form in child order, e.g. "(()())" for a root with two leaves.
inline std::string to_paren(const RootedTree& t) {
    std::string out;
    out.reserve(2 * t.size());
    // (node, next child index)
    std::vector<std::pair<NodeId, std::size_t>> stack{{t.root(), 0}};
    out.push_back('(');
    while (!stack.empty()) {
        auto& [v, next] = stack.back();
        const auto kids = t.children(v);
        if (next < kids.size()) {
            const NodeId c = kids[next++];
            out.push_back('(');
            stack.emplace_back(c, 0);
        } else {
            out.push_back(')');
            stack.pop_back();
        }
    }
    return out;
}

inline RootedTree from_paren(std::string_view text) {
    RootedTree t;
    if (text.size() < 2 || text.front() != '(') throw ParseError(1, "tree must start with '('");
    std::vector<NodeId> stack{t.root()};
    for (std::size_t i = 1; i < text.size(); ++i) {
        const char ch = text[i];
        if (stack.empty()) throw ParseError(1, "trailing characters at offset " + std::to_string(i));
        if (ch == '(') {
            stack.push_back(t.add_child(stack.back()));
        } else if (ch == ')') {
            stack.pop_back();
        } else {
            throw ParseError(1, std::string("unexpected character '") + ch + "' at offset " + std::to_string(i));
        }
    }
    if (!stack.empty()) throw ParseError(1, "unbalanced parentheses");
    return t;
}

/// {"nodes": [{"parent": p|null, "children": [...]}, ...], "root": 0}
inline nlohmann::json to_json(const RootedTree& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (NodeId v = 0; v < t.size(); ++v) {
        nlohmann::json node;
        node["parent"] = t.parent(v) == no_node ? nlohmann::json(nullptr) : nlohmann::json(t.parent(v));
        node["children"] = std::vector<NodeId>(t.children(v).begin(), t.children(v).end());
        nodes.push_back(std::move(node));
    }
    return {{"nodes", std::move(nodes)}, {"root", t.root()}};
}

inline RootedTree tree_from_json(const nlohmann::json& j) {
    const auto& nodes = j.at("nodes");
    const auto root = j.at("root").get<std::size_t>();
    if (nodes.empty() || root >= nodes.size()) throw ParseError(1, "tree json: bad root");
    RootedTree t;
    std::vector<std::pair<std::size_t, NodeId>> stack{{root, t.root()}};
    std::vector<char> seen(nodes.size(), 0);
    seen[root] = 1;
    while (!stack.empty()) {
        auto [src, dst] = stack.back();
        stack.pop_back();
        std::vector<std::pair<std::size_t, NodeId>> pending;
        for (const auto& c : nodes[src].at("children")) {
            const auto ci = c.get<std::size_t>();
            if (ci >= nodes.size() || seen[ci]) throw ParseError(1, "tree json: invalid child " + std::to_string(ci));
            seen[ci] = 1;
            pending.emplace_back(ci, t.add_child(dst));
        }
        stack.insert(stack.end(), pending.rbegin(), pending.rend());
    }
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (!seen[i]) throw ParseError(1, "tree json: node " + std::to_string(i) + " unreachable from root");
    return t;
}

}  // namespace treealign
