#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "warden/analysis.hpp"
#include "warden/model.hpp"

namespace warden {

struct NotWardedError : std::runtime_error {
    explicit NotWardedError(const std::string& why)
        : std::runtime_error("program is not warded: " + why) {}
};

struct RewriteStep {
    std::string kind;  // head-split | existential-push | grounding | direct |
                       // indirect | virtual-join-drop(a|b|c) | linearization |
                       // origin-shift | inline
    std::vector<int> input_rules;
    std::vector<int> output_rules;
    std::string note;
};

struct RewriteTrace {
    std::vector<RewriteStep> steps;
    void add(std::string kind, std::vector<int> in, std::vector<int> out,
             std::string note = "");
    std::string to_json() const;
};

// Multiple-head elimination and syntactic duplicate removal. Multi-head rules
// with existentials route head atoms through an auxiliary predicate carrying
// frontier and existential variables, so one null feeds all heads.
Program normalize(const Program& program, RewriteTrace* trace = nullptr);

// Splits every non-linear rule with existentials into an existential-free
// non-linear stage and a linear existential stage.
Program confine_existentials(const Program& program, RewriteTrace* trace = nullptr);

struct RewriteResult {
    Program program;
    RewriteTrace trace;
};

// The harmful-joins elimination. Precondition: warded, normalized,
// existentials confined. Joins on harmful variables are replaced by
// Dom-guarded grounded copies (constant bindings) and, per null source
// (Skolem function), harmless joins of witness predicates on the source's
// key variables (null bindings). Witness recursion is folded through fresh
// predicates, emitted in origin-shifted transitive-closure shape when a
// seed-rederivation check proves that form complete.
RewriteResult eliminate_harmful_joins(const Program& program);

// normalize -> confine_existentials -> eliminate_harmful_joins.
RewriteResult rewrite_program(const Program& program);

// Name of the built-in active-domain guard predicate.
inline const char* kDomPredicate = "dom";

}  // namespace warden
