// Test-side oracles for the forest isomorphism properties, recomputed
// directly from full-chase graphs, independent of the termination wrapper.
#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "warden/chase.hpp"

namespace warden::testing {

// Generic reachable-subgraph matcher: nodes pairwise equivalent under `eq`,
// successor multisets matched bijectively, recursing along `succ`.
inline bool subgraphs_match(
    const std::vector<Fact>& facts, const std::map<int32_t, std::vector<int32_t>>& succ,
    const std::function<bool(const Fact&, const Fact&)>& eq, int32_t a, int32_t b) {
    std::function<bool(int32_t, int32_t, std::set<std::pair<int32_t, int32_t>>&, int)>
        match = [&](int32_t x, int32_t y, std::set<std::pair<int32_t, int32_t>>& seen,
                    int depth) -> bool {
        if (depth > 32) return true;
        if (!seen.insert({x, y}).second) return true;
        if (!eq(facts[x], facts[y])) return false;
        auto ix = succ.find(x);
        auto iy = succ.find(y);
        std::vector<int32_t> cx = ix == succ.end() ? std::vector<int32_t>{} : ix->second;
        std::vector<int32_t> cy = iy == succ.end() ? std::vector<int32_t>{} : iy->second;
        if (cx.size() != cy.size()) return false;
        std::vector<bool> used(cy.size(), false);
        std::function<bool(size_t)> rec = [&](size_t i) -> bool {
            if (i == cx.size()) return true;
            for (size_t j = 0; j < cy.size(); ++j) {
                if (used[j]) continue;
                auto saved = seen;
                if (match(cx[i], cy[j], seen, depth + 1)) {
                    used[j] = true;
                    if (rec(i + 1)) return true;
                    used[j] = false;
                }
                seen = std::move(saved);
            }
            return false;
        };
        return rec(0);
    };
    std::set<std::pair<int32_t, int32_t>> seen;
    return match(a, b, seen, 0);
}

inline std::map<int32_t, std::vector<int32_t>> successor_map(
    const NaiveChaseResult& chase, const std::set<EdgeFlavor>& flavors) {
    std::map<int32_t, std::vector<int32_t>> succ;
    for (const auto& e : chase.edges)
        if (flavors.count(e.flavor)) succ[e.from].push_back(e.to);
    for (auto& [k, v] : succ) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return succ;
}

// Isomorphic facts root isomorphic subtrees of the warded forest (linear
// edges plus ward edges).
inline bool theorem1_holds(const NaiveChaseResult& chase, size_t max_group = 32) {
    auto succ = successor_map(chase, {EdgeFlavor::Linear, EdgeFlavor::Ward});
    std::map<Fact, std::vector<int32_t>> groups;
    for (size_t i = 0; i < chase.facts.size(); ++i)
        groups[iso_canonical(chase.facts[i])].push_back(int32_t(i));
    auto eq = [](const Fact& a, const Fact& b) { return isomorphic(a, b); };
    for (const auto& [key, ids] : groups) {
        if (ids.size() < 2) continue;
        size_t n = std::min(ids.size(), max_group);
        for (size_t i = 0; i + 1 < n; ++i)
            if (!subgraphs_match(chase.facts, succ, eq, ids[i], ids[i + 1]))
                return false;
    }
    return true;
}

// Isomorphic facts have isomorphic chase subgraphs (every edge flavor).
inline bool theorem2_holds(const NaiveChaseResult& chase, size_t max_group = 16) {
    auto succ = successor_map(
        chase, {EdgeFlavor::Linear, EdgeFlavor::Ward, EdgeFlavor::Other});
    std::map<Fact, std::vector<int32_t>> groups;
    for (size_t i = 0; i < chase.facts.size(); ++i)
        groups[iso_canonical(chase.facts[i])].push_back(int32_t(i));
    auto eq = [](const Fact& a, const Fact& b) { return isomorphic(a, b); };
    for (const auto& [key, ids] : groups) {
        if (ids.size() < 2) continue;
        size_t n = std::min(ids.size(), max_group);
        for (size_t i = 0; i + 1 < n; ++i)
            if (!subgraphs_match(chase.facts, succ, eq, ids[i], ids[i + 1]))
                return false;
    }
    return true;
}

// Pattern-isomorphic facts root pattern-isomorphic subtrees of the linear
// forest (linear edges only).
inline bool theorem3_holds(const NaiveChaseResult& chase, size_t max_group = 32) {
    auto succ = successor_map(chase, {EdgeFlavor::Linear});
    std::map<std::string, std::vector<int32_t>> groups;
    for (size_t i = 0; i < chase.facts.size(); ++i)
        groups[pattern(chase.facts[i]).repr].push_back(int32_t(i));
    auto eq = [](const Fact& a, const Fact& b) { return pattern(a) == pattern(b); };
    for (const auto& [key, ids] : groups) {
        if (ids.size() < 2) continue;
        size_t n = std::min(ids.size(), max_group);
        for (size_t i = 0; i + 1 < n; ++i)
            if (!subgraphs_match(chase.facts, succ, eq, ids[i], ids[i + 1]))
                return false;
    }
    return true;
}

}  // namespace warden::testing
