#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "warden/analysis.hpp"
#include "warden/model.hpp"

namespace warden {

// ---------------------------------------------------------------------------
// Fact isomorphism and patterns

// Same predicate, equal constants positionally, and a positional bijection
// between the labeled nulls.
bool isomorphic(const Fact& a, const Fact& b);

// Canonical form under isomorphism: nulls renumbered by first occurrence.
// Two facts are isomorphic iff their iso keys are equal.
Fact iso_canonical(const Fact& f);
size_t iso_hash(const Fact& f);

struct Pattern {
    std::string repr;  // e.g. p(C1,C2,N1,N2)
    bool operator==(const Pattern&) const = default;
    bool operator<(const Pattern& o) const { return repr < o.repr; }
};

// Canonical form under pattern-isomorphism: distinct constants become
// C1,C2,..., distinct nulls N1,N2,..., in order of first occurrence.
Pattern pattern(const Fact& f);

// Summary-structure key: like pattern(), but constants in `pinned` map to
// themselves. Pinning the program's literal constants keeps horizontal
// pruning sound when rules mention constants.
std::string pattern_key(const Fact& f, const std::set<Value>& pinned);

// ---------------------------------------------------------------------------
// Fact records and the two run structures

enum class GenKind { Linear, Warded, NonLinear, Root };

std::string to_string(GenKind k);

struct FactRecord {
    Fact fact;
    GenKind kind = GenKind::Root;
    int32_t id = -1;
    int32_t parent = -1;      // linear parent / ward parent record
    int32_t l_root = -1;
    int32_t w_root = -1;
    std::vector<int> provenance;  // rule ids applied from l_root
};

// Left-subsequence (prefix) order on provenances.
bool provenance_prefix(const std::vector<int>& shorter, const std::vector<int>& longer);

struct ChaseStats {
    int64_t facts_generated = 0;
    int64_t facts_admitted = 0;
    int64_t facts_rejected = 0;
    int64_t iso_checks = 0;     // pairwise isomorphism evaluations
    int64_t prefix_rejects = 0; // line 3: beyond a stop-provenance
    int64_t prefix_admits = 0;  // line 5: within a stop-provenance
    int64_t nulls_created = 0;
};

// G: facts of each warded tree, keyed by w_root record. Facts live in the
// run's record arena; buckets hold record ids only.
class GroundStructure {
public:
    using Resolver = std::function<const Fact&(int32_t)>;

    // Scans the bucket for a fact isomorphic to `f` (hash prefilter, exact
    // bijection check on collision); counts each comparison in `stats`.
    // Returns the matching record id or -1.
    int32_t find_isomorphic(int32_t w_root, const Fact& f, const Resolver& resolve,
                            ChaseStats& stats) const;
    void append(int32_t w_root, int32_t rec, const Fact& f);

    // Exact-membership probe over every stored fact (the non-linear branch).
    bool contains_exact(const Fact& f) const;
    void index_exact(const Fact& f);

    const std::vector<int32_t>* bucket(int32_t w_root) const;

private:
    struct Bucket {
        std::vector<int32_t> rows;
        std::unordered_map<size_t, std::vector<int32_t>> rows_by_hash;
    };
    std::unordered_map<int32_t, Bucket> buckets_;
    std::unordered_set<Fact, FactHash> exact_;
};

// S: stop-provenances keyed by the pattern of the linear root.
class SummaryStructure {
public:
    // Inserting drops stored provenances comparable with the new one, keeping
    // the set a prefix-antichain.
    void insert(const std::string& root_pattern, const std::vector<int>& prov);
    const std::vector<std::vector<int>>* find(const std::string& root_pattern) const;
    size_t size() const { return entries_.size(); }

private:
    std::map<std::string, std::vector<std::vector<int>>> entries_;
};

// ---------------------------------------------------------------------------
// Termination strategies

class TerminationStrategy {
public:
    virtual ~TerminationStrategy() = default;
    // Decides whether the candidate may enter the chase; mutates internal
    // structures. The record's roots/provenance are already computed.
    virtual bool check_termination(const FactRecord& rec) = 0;
    // EDB facts are given, not checked; they still seed the stores.
    virtual void register_root(const FactRecord& rec) = 0;
    ChaseStats stats;
    // True when the last decision came from a stop-provenance test rather
    // than an isomorphism check.
    bool last_via_prefix = false;
};

// Algorithm of the termination wrapper: prefix tests against S, local
// isomorphism check against the fact's warded tree in G.
class WardedStrategy : public TerminationStrategy {
public:
    explicit WardedStrategy(std::set<Value> pinned_constants)
        : pinned_(std::move(pinned_constants)) {}

    bool check_termination(const FactRecord& rec) override;
    void register_root(const FactRecord& rec) override;

    const GroundStructure& ground() const { return ground_; }
    const SummaryStructure& summary() const { return summary_; }

    // The fact arena backing record ids; set by the run before use.
    std::function<const FactRecord&(int32_t)> resolve;
    GroundStructure::Resolver fact_resolver;

private:
    GroundStructure ground_;
    SummaryStructure summary_;
    std::set<Value> pinned_;
};

// The trivial technique: exhaustive storage and pure isomorphism check
// against every stored fact of the same predicate.
class TrivialStrategy : public TerminationStrategy {
public:
    bool check_termination(const FactRecord& rec) override;
    void register_root(const FactRecord& rec) override;

private:
    std::map<std::string, std::vector<Fact>> store_;
};

// Folds one contribution into a group's per-contributor slots and returns the
// updated aggregate value (shared by the oracle and the streaming filter).
Value aggregate_update(AggFunc func,
                       std::map<std::vector<GroundTerm>, Value>& group,
                       const std::vector<GroundTerm>& contributor,
                       const Value& contribution);

// ---------------------------------------------------------------------------
// Skolem evaluation (deterministic, injective, range disjoint)

class SkolemTable {
public:
    explicit SkolemTable(NullFactory& nulls) : nulls_(&nulls) {}
    LabeledNull eval(const std::string& func, const std::vector<GroundTerm>& args);

private:
    struct KeyHash {
        size_t operator()(const std::pair<std::string, Fact>& k) const {
            return std::hash<std::string>{}(k.first) ^ FactHash{}(k.second);
        }
    };
    NullFactory* nulls_;
    std::unordered_map<std::pair<std::string, Fact>, LabeledNull, KeyHash> memo_;
};

// ---------------------------------------------------------------------------
// Naive oracle chase

enum class ChaseMode {
    IsoPrune,  // admit iff no isomorphic fact was ever generated (§ trivial)
    Full,      // admit iff not an exact duplicate; cap-bounded
};

enum class EdgeFlavor { Linear, Ward, Other };

struct ChaseEdge {
    int32_t from = -1;
    int32_t to = -1;
    int rule = 0;
    EdgeFlavor flavor = EdgeFlavor::Other;
};

struct NaiveChaseResult {
    std::vector<Fact> facts;            // admitted facts, EDB first
    std::vector<ChaseEdge> edges;       // chase graph edges
    // Forest bookkeeping per admitted fact, aligned with `facts`.
    std::vector<FactRecord> records;
    std::map<std::string, std::vector<Fact>> outputs;
    bool capped = false;
    int64_t candidates = 0;

    std::vector<Fact> output_union() const;
};

struct CapExceeded : std::runtime_error {
    explicit CapExceeded(size_t cap)
        : std::runtime_error("chase exceeded fact cap " + std::to_string(cap)) {}
};

// Breadth-first saturation with the chosen admission mode. Throws CapExceeded
// in Full mode when the cap is hit; in IsoPrune mode the cap marks failure
// via `capped` (termination is expected for warded inputs).
NaiveChaseResult naive_chase(const ReasoningTask& task, size_t cap,
                             ChaseMode mode = ChaseMode::IsoPrune,
                             bool throw_on_cap = true);

// ---------------------------------------------------------------------------
// Forests

struct ForestSnapshot {
    std::vector<const FactRecord*> records;
    // Linear edges parent->child and ward edges ward->child, by record id.
    std::vector<std::pair<int32_t, int32_t>> linear_edges;
    std::vector<std::pair<int32_t, int32_t>> ward_edges;

    // Lifted linear forest: nodes are (root pattern, provenance) classes.
    struct LiftedNode {
        std::string root_pattern;
        std::vector<int> provenance;
        std::vector<int32_t> members;   // records collapsed into this node
        Pattern member_pattern;         // common pattern of the members
        bool uniform = true;            // all members pattern-isomorphic
    };
    std::vector<LiftedNode> lifted_nodes;
    std::vector<std::pair<size_t, size_t>> lifted_edges;

    std::string warded_dot() const;
    std::string lifted_dot() const;
};

ForestSnapshot forest_snapshot(const std::vector<FactRecord>& records,
                               const std::set<Value>& pinned_constants);

// ---------------------------------------------------------------------------
// Answer comparison up to null homomorphism

// True iff there is a null->term mapping h with h(a) in B for every a in A.
bool hom_subsumed(const std::vector<Fact>& A, const std::vector<Fact>& B);
bool hom_equivalent(const std::vector<Fact>& A, const std::vector<Fact>& B);

// Answer equality for the reasoning task: ground answers coincide exactly and
// every null-bearing answer has a homomorphic counterpart on the other side.
// (Chase variants may split or share witness nulls across facts without
// changing the task's answers, so facts embed individually.)
bool answers_match(const std::vector<Fact>& A, const std::vector<Fact>& B);

}  // namespace warden
