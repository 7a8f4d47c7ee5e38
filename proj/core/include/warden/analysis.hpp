#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "warden/model.hpp"

namespace warden {

// Predicate argument position, 1-based.
struct Position {
    std::string pred;
    size_t index = 0;  // 1..arity
    auto operator<=>(const Position&) const = default;
};

std::string to_string(const Position& p);

enum class VarClass { Harmless, Harmful, Dangerous };
enum class RuleKind { Linear, WardedJoin, HarmlessJoin, HarmfulJoin };
enum class Verdict { Warded, HarmlessWarded, NotWarded };

std::string to_string(VarClass c);
std::string to_string(RuleKind k);

struct RuleReport {
    std::map<std::string, VarClass> variables;
    std::optional<size_t> ward;  // body atom index, when a ward exists
    RuleKind kind = RuleKind::Linear;
    // Pairs of body atom indices joined on a harmful variable.
    std::vector<std::pair<std::string, std::vector<size_t>>> harmful_joins;
};

struct WardednessReport {
    std::set<Position> affected;
    std::map<int, RuleReport> per_rule;  // rule id -> report
    Verdict verdict = Verdict::Warded;
    std::vector<std::string> violations;

    bool warded() const { return verdict != Verdict::NotWarded; }
    bool harmless_warded() const { return verdict == Verdict::HarmlessWarded; }
    std::string to_json() const;
};

// Least fixpoint of the affected-position induction: existential head
// positions, plus head positions fed exclusively from affected body
// occurrences of the same variable.
std::set<Position> affected_positions(const Program& program);

// harmless: some body occurrence in a non-affected position;
// harmful: every body occurrence affected; dangerous: harmful and in head.
std::map<std::string, VarClass> classify_variables(const Rule& rule,
                                                   const std::set<Position>& affected);

WardednessReport check_warded(const Program& program);

struct DependencyGraph {
    // Edge a -> b iff head predicate of a occurs in body of b.
    std::map<int, std::set<int>> edges;
    std::vector<std::vector<int>> sccs;       // strongly connected components
    std::set<int> recursive_rules;            // rules on a cycle (incl. self-loop)
};

DependencyGraph dependency_graph(const Program& program);

}  // namespace warden
