#pragma once

#include <map>
#include <string>

#include "warden/model.hpp"

namespace warden {

struct InfeasibleSpec : std::runtime_error {
    explicit InfeasibleSpec(const std::string& why)
        : std::runtime_error("infeasible scenario spec: " + why) {}
};

// Knobs of the warded-rule generator, after the synthetic scenario families.
struct ScenarioSpec {
    int linear_rules = 0;
    int join_rules = 0;
    int recursive_linear = 0;
    int recursive_join = 0;
    int existential_rules = 0;
    int harmless_harmful_joins = 0;     // harmless join, harmful variable aside
    int harmless_with_ward = 0;         // warded joins
    int harmless_without_ward = 0;      // plain harmless joins
    int harmful_harmful_joins = 0;      // joins on harmful variables
    int facts_per_input = 20;
    int constant_pool = 12;
    uint64_t seed = 1;

    void validate() const;
};

// The eight 100-rule scenario profiles, scaled to `total_rules`.
ScenarioSpec synth_profile(char id, int total_rules, uint64_t seed);

// Deterministic in the spec; the produced program always checks warded with
// the requested counts.
ReasoningTask gen_warded(const ScenarioSpec& spec);

struct GraphSpec {
    size_t n = 1000;          // expected node count
    double alpha = 0.71;      // new node -> existing (by in-degree)
    double beta = 0.09;       // edge between existing nodes
    double gamma = 0.20;      // existing (by out-degree) -> new node
    uint64_t seed = 1;

    void validate() const;
};

// Scale-free ownership graph: control(x,y) edges plus own(x,y,w) with
// weights in (0,1]; deterministic in the seed.
Database gen_ownership(const GraphSpec& spec);

// The worked programs and small instances used throughout, as parseable
// tasks keyed by name: example1, example2, example4, psc, psc_existential,
// stronglink, complex_warded, simple_warded, softlink, aggregates,
// company_control.
const std::map<std::string, std::string>& fixture_sources();
ReasoningTask fixture(const std::string& name);
std::map<std::string, ReasoningTask> fixtures();

}  // namespace warden
