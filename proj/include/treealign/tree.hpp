#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "errors.hpp"

namespace treealign {

using NodeId = std::uint32_t;
inline constexpr NodeId no_node = std::numeric_limits<NodeId>::max();

/// Ordered rooted tree stored in an arena. The root is node 0 and every child
/// id is larger than its parent id, so reverse index order is a valid
/// bottom-up traversal. The position of a node in its parent's child list is
/// its canonical label component.
class RootedTree {
public:
    RootedTree() { nodes_.push_back(Node{no_node, 0, {}}); }

    static RootedTree single() { return RootedTree(); }

    /// Root followed by a chain of `length` edges.
    static RootedTree path(std::size_t length) {
        RootedTree t;
        NodeId last = t.root();
        for (std::size_t i = 0; i < length; ++i) last = t.add_child(last);
        return t;
    }

    /// Root with `leaves` leaf children.
    static RootedTree star(std::size_t leaves) {
        RootedTree t;
        for (std::size_t i = 0; i < leaves; ++i) t.add_child(t.root());
        return t;
    }

    NodeId root() const noexcept { return 0; }
    std::size_t size() const noexcept { return nodes_.size(); }
    NodeId parent(NodeId v) const { return nodes_.at(v).parent; }
    std::span<const NodeId> children(NodeId v) const { return nodes_.at(v).children; }
    std::size_t degree(NodeId v) const { return nodes_.at(v).children.size(); }
    int depth(NodeId v) const { return nodes_.at(v).depth; }

    /// Maximum node depth.
    int height() const noexcept {
        int h = 0;
        for (const auto& n : nodes_) h = std::max(h, n.depth);
        return h;
    }

    NodeId add_child(NodeId p) {
        if (p >= nodes_.size()) throw DomainError("add_child: unknown parent");
        const auto id = static_cast<NodeId>(nodes_.size());
        const int d = nodes_[p].depth + 1;
        nodes_.push_back(Node{p, d, {}});
        nodes_[p].children.push_back(id);
        return id;
    }

    void reserve(std::size_t n) { nodes_.reserve(n); }

    /// Checks the arena invariants: single root, depth(child) = depth(parent)+1,
    /// parent/child links agree, every node reachable from the root.
    bool is_valid() const {
        if (nodes_.empty() || nodes_[0].parent != no_node || nodes_[0].depth != 0) return false;
        std::vector<char> seen(nodes_.size(), 0);
        seen[0] = 1;
        std::size_t reached = 1;
        for (NodeId v = 0; v < nodes_.size(); ++v) {
            if (v != 0 && nodes_[v].parent == no_node) return false;
            for (NodeId c : nodes_[v].children) {
                if (c >= nodes_.size() || c <= v || nodes_[c].parent != v) return false;
                if (nodes_[c].depth != nodes_[v].depth + 1 || seen[c]) return false;
                seen[c] = 1;
                ++reached;
            }
        }
        return reached == nodes_.size();
    }

    /// Equality as labeled (ordered) trees.
    friend bool operator==(const RootedTree& a, const RootedTree& b) {
        if (a.size() != b.size()) return false;
        std::vector<std::pair<NodeId, NodeId>> stack{{a.root(), b.root()}};
        while (!stack.empty()) {
            auto [x, y] = stack.back();
            stack.pop_back();
            const auto cx = a.children(x);
            const auto cy = b.children(y);
            if (cx.size() != cy.size()) return false;
            for (std::size_t i = 0; i < cx.size(); ++i) stack.emplace_back(cx[i], cy[i]);
        }
        return true;
    }

private:
    struct Node {
        NodeId parent;
        int depth;
        std::vector<NodeId> children;
    };
    std::vector<Node> nodes_;
};

/// Copy of the nodes at depth <= d, child order preserved.
inline RootedTree prune(const RootedTree& t, int d) {
    if (d < 0) throw DomainError("prune: negative depth");
    RootedTree out;
    std::deque<std::pair<NodeId, NodeId>> queue{{t.root(), out.root()}};
    while (!queue.empty()) {
        auto [src, dst] = queue.front();
        queue.pop_front();
        if (t.depth(src) >= d) continue;
        for (NodeId c : t.children(src)) queue.emplace_back(c, out.add_child(dst));
    }
    return out;
}

/// Interns unordered subtree shapes. Two subtrees get the same id iff they are
/// equal up to relabeling. Child lists of a shape are kept sorted by canonical
/// code, so any computation driven by shape ids is independent of the child
/// order and of the order in which shapes were first seen.
class ShapeTable {
public:
    using ShapeId = std::uint32_t;

    /// Interns every subtree of t; result[v] is the shape of the subtree at v.
    std::vector<ShapeId> intern(const RootedTree& t) {
        std::vector<ShapeId> ids(t.size());
        std::vector<ShapeId> kids;
        for (std::size_t k = t.size(); k-- > 0;) {
            const auto v = static_cast<NodeId>(k);
            kids.clear();
            for (NodeId c : t.children(v)) kids.push_back(ids[c]);
            ids[v] = intern_children(kids);
        }
        return ids;
    }

    ShapeId intern_root(const RootedTree& t) { return intern(t)[t.root()]; }

    const std::string& code(ShapeId s) const { return codes_.at(s); }
    std::span<const ShapeId> children(ShapeId s) const { return children_.at(s); }
    std::size_t degree(ShapeId s) const { return children_.at(s).size(); }
    std::size_t size() const noexcept { return codes_.size(); }

private:
    ShapeId intern_children(std::vector<ShapeId>& kids) {
        std::sort(kids.begin(), kids.end(), [this](ShapeId a, ShapeId b) { return codes_[a] < codes_[b]; });
        std::string code;
        code.reserve(2);
        code.push_back('(');
        for (ShapeId k : kids) code += codes_[k];
        code.push_back(')');
        auto [it, inserted] = index_.try_emplace(code, static_cast<ShapeId>(codes_.size()));
        if (inserted) {
            codes_.push_back(std::move(code));
            children_.push_back(kids);
        }
        return it->second;
    }

    std::unordered_map<std::string, ShapeId> index_;
    std::vector<std::string> codes_;
    std::vector<std::vector<ShapeId>> children_;
};

/// AHU-style code: a node's code is "(" + sorted child codes + ")". Equal codes
/// iff the trees are equal up to relabeling. A single node encodes as "()".
inline std::string canonical_code(const RootedTree& t) {
    ShapeTable table;
    return table.code(table.intern_root(t));
}

}  // namespace treealign
