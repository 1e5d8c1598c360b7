#pragma once

#include <cmath>
#include <vector>

#include "tree.hpp"

namespace treealign {

/// log |Aut(t)|: at every node, children of equal shape may be permuted freely,
/// so the count is the product over nodes of the factorials of the shape
/// multiplicities among its children.
inline double automorphism_count_log(const RootedTree& t) {
    ShapeTable shapes;
    const auto ids = shapes.intern(t);
    double total = 0.0;
    std::vector<ShapeTable::ShapeId> kids;
    for (NodeId v = 0; v < t.size(); ++v) {
        kids.clear();
        for (NodeId c : t.children(v)) kids.push_back(ids[c]);
        std::sort(kids.begin(), kids.end());
        for (std::size_t i = 0; i < kids.size();) {
            std::size_t j = i;
            while (j < kids.size() && kids[j] == kids[i]) ++j;
            total += std::lgamma(static_cast<double>(j - i) + 1.0);
            i = j;
        }
    }
    return total;
}

}  // namespace treealign
