#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "warden/analysis.hpp"
#include "warden/chase.hpp"
#include "warden/model.hpp"

namespace warden {

struct NotHarmlessWarded : std::runtime_error {
    explicit NotHarmlessWarded(const std::string& why)
        : std::runtime_error("program not executable: " + why) {}
};

struct UnboundInputPredicate : std::runtime_error {
    explicit UnboundInputPredicate(const std::string& pred)
        : std::runtime_error("@input predicate '" + pred + "' has no data") {}
};

// next() availability signals of the pull protocol.
enum class Signal { FactReady, CyclicMiss, RealMiss };

// One rule compiled into a filter chain: ordered joins, selections placed at
// the earliest stage whose variables are bound, then the head map.
struct FilterChain {
    int rule_id = 0;
    RuleKind kind = RuleKind::Linear;
    GenKind gen_kind = GenKind::NonLinear;
    std::vector<size_t> atom_order;      // body atom indices, join order
    std::optional<size_t> ward_atom;     // original body index of the ward
    // conditions_at[i]: conditions evaluable once atom_order[0..i] are bound.
    std::vector<std::vector<Condition>> conditions_at;
    std::vector<Condition> post_conditions;  // need aggregate/skolem targets
};

struct Pipeline {
    Program program;
    WardednessReport report;
    std::vector<FilterChain> chains;        // one per rule, textual order
    // Pipe a -> b iff head predicate of rule a occurs in body of rule b.
    std::vector<std::pair<int, int>> pipes;
    std::set<std::string> scans;            // predicates read from the EDB
    std::set<std::string> sinks;            // one per @output predicate
    bool optimized = false;

    std::string describe() const;           // plan listing for tests/CLI
};

// Compiles a harmless-warded program (existentials confined) into a pipeline.
// Throws NotHarmlessWarded otherwise.
Pipeline compile(const Program& program);

// Join-order optimization: ascending estimated input cardinality with
// recursive inputs last; selections stay pushed to their earliest stage.
Pipeline optimize(const Pipeline& pipeline, const Database& database);

struct EngineConfig {
    bool trivial_strategy = false;   // the exhaustive-store baseline
    size_t fact_cap = 0;             // 0 = unlimited
    bool collect_records = true;     // keep the record arena for tracing
    bool record_decisions = false;   // keep every wrapper decision, in order
};

struct Decision {
    Fact fact;
    GenKind kind = GenKind::NonLinear;
    int32_t w_root = -1;
    bool admitted = false;
    bool via_prefix = false;  // decided by a stop-provenance test
};

struct EngineStats {
    ChaseStats chase;
    std::map<std::string, int64_t> filter_pulls;
    int64_t rounds = 0;
    int64_t wall_ms = 0;
    std::map<std::string, int64_t> output_counts;
    std::string to_json() const;
};

struct RunResult {
    std::map<std::string, std::vector<Fact>> outputs;
    EngineStats stats;
    std::vector<FactRecord> records;     // admitted facts (when collected)
    std::set<Value> pinned_constants;    // program literals, for forests
    // Per-sink pull signals in order, for protocol-level tests.
    std::vector<std::pair<std::string, Signal>> protocol;
    // Monotonic-aggregate emission stream, in evaluation order.
    std::vector<Fact> aggregate_emissions;
    // Wrapper decisions in order (when record_decisions is set).
    std::vector<Decision> decisions;
};

// Executes the pipeline: sinks drive evaluation via pull with round-robin
// polling; every derived fact passes the termination wrapper exactly once.
RunResult run(const Pipeline& pipeline, const Database& database,
              const EngineConfig& config = {});

// ---------------------------------------------------------------------------
// Slot-machine join, exposed for direct testing.

// Dynamic hash index over a growing relation: probes serve from the hash
// table up to the build watermark and fall back to scanning the unindexed
// suffix, extending the index as they go.
class DynamicIndex {
public:
    DynamicIndex(const std::vector<Fact>* rows, std::vector<size_t> key_positions);

    // Row ids whose key positions equal `key`. Extends the index over any
    // rows appended since the last probe.
    const std::vector<int32_t>& probe(const std::vector<GroundTerm>& key);
    size_t scans = 0;   // rows visited while extending
    size_t probes = 0;

private:
    const std::vector<Fact>* rows_;
    std::vector<size_t> key_positions_;
    size_t watermark_ = 0;
    std::map<std::vector<GroundTerm>, std::vector<int32_t>> index_;
    std::vector<int32_t> empty_;
};

// Joins a left stream against a right relation on equal key positions;
// results are (left row, right row) pairs in stream order.
std::vector<std::pair<int32_t, int32_t>> slot_join(
    const std::vector<Fact>& left, const std::vector<Fact>& right,
    const std::vector<size_t>& left_keys, const std::vector<size_t>& right_keys);

}  // namespace warden
