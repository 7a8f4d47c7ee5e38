#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace warden {

// ---------------------------------------------------------------------------
// Terms

struct Date {
    int32_t year = 0;
    int32_t month = 0;
    int32_t day = 0;
    auto operator<=>(const Date&) const = default;
};

// Typed constant. Equality is by typed value: integer 1 != string "1".
using Value = std::variant<int64_t, double, std::string, bool, Date>;

struct LabeledNull {
    // Monotonically increasing within one run; rendered as _:nK.
    int64_t id = 0;
    auto operator<=>(const LabeledNull&) const = default;
};

struct Variable {
    std::string name;
    auto operator<=>(const Variable&) const = default;
};

// Ground terms appear in facts; full terms also in rule atoms.
using GroundTerm = std::variant<Value, LabeledNull>;
using Term = std::variant<Value, LabeledNull, Variable>;

bool is_constant(const Term& t);
bool is_null(const Term& t);
bool is_variable(const Term& t);

std::string to_string(const Value& v);
std::string to_string(const GroundTerm& t);
std::string to_string(const Term& t);

// Total order across heterogeneous values (type rank, then value); used for
// deterministic output ordering.
int compare(const Value& a, const Value& b);
int compare(const GroundTerm& a, const GroundTerm& b);

// ---------------------------------------------------------------------------
// Atoms, facts

struct Atom {
    std::string pred;
    std::vector<Term> args;

    size_t arity() const { return args.size(); }
    bool operator==(const Atom&) const = default;
};

struct Fact {
    std::string pred;
    std::vector<GroundTerm> args;

    size_t arity() const { return args.size(); }
    bool operator==(const Fact&) const = default;
    bool operator<(const Fact& o) const;
};

struct FactHash {
    size_t operator()(const Fact& f) const;
};

std::string to_string(const Atom& a);
std::string to_string(const Fact& f);

Atom to_atom(const Fact& f);
// Precondition: the atom is ground.
Fact to_fact(const Atom& a);

// ---------------------------------------------------------------------------
// Rules

enum class CmpOp { Lt, Gt, Le, Ge, Ne, Eq };

std::string to_string(CmpOp op);

// Body expressions: a term, or an arithmetic combination.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { Leaf, Add, Sub, Mul, Div } kind = Kind::Leaf;
    Term leaf;       // Kind::Leaf
    ExprPtr lhs, rhs;

    static ExprPtr make(Term t);
    static ExprPtr make(Kind k, ExprPtr l, ExprPtr r);
};

void collect_variables(const ExprPtr& e, std::set<std::string>& out);
std::string to_string(const ExprPtr& e);

struct Condition {
    ExprPtr lhs;
    CmpOp op = CmpOp::Eq;
    ExprPtr rhs;
};

enum class AggFunc { MSum, MCount, MMin, MMax };

std::string to_string(AggFunc f);

struct Aggregation {
    AggFunc func = AggFunc::MSum;
    std::string arg;                     // aggregated variable
    std::vector<std::string> contributors;
    std::string target;                  // head variable receiving the value
};

struct SkolemSpec {
    std::string func;
    std::vector<std::string> args;
};

struct SourceSpan {
    int line = 0;
    int col = 0;
};

struct Rule {
    int id = 0;
    std::vector<Atom> body;
    std::vector<Condition> conditions;
    std::vector<Atom> head;              // exactly one after normalization
    std::set<std::string> existentials;  // head-only variables
    std::optional<Aggregation> aggregation;
    std::map<std::string, SkolemSpec> skolems;  // head variable -> skolem
    SourceSpan span;

    bool is_linear() const { return body.size() == 1; }
    std::set<std::string> body_variables() const;
    std::set<std::string> head_variables() const;
};

std::string to_string(const Rule& r);

// ---------------------------------------------------------------------------
// Programs

struct DataBinding {
    std::string kind;   // "csv"
    std::string path;
    std::vector<std::string> column_types;  // int|float|string|bool|date
};

struct PostDirective {
    bool certain = false;
    bool sorted = false;
};

struct Program {
    std::vector<Rule> rules;
    std::set<std::string> inputs;
    std::set<std::string> outputs;
    std::map<std::string, DataBinding> bindings;
    std::map<std::string, PostDirective> post_directives;

    // Name -> arity for every predicate mentioned.
    std::map<std::string, size_t> predicates() const;
    std::set<std::string> head_predicates() const;
    int max_rule_id() const;
};

using Database = std::map<std::string, std::vector<Fact>>;

struct ReasoningTask {
    Program program;
    Database database;
};

// ---------------------------------------------------------------------------
// Substitutions and rule application

struct Substitution {
    std::map<std::string, GroundTerm> map;

    const GroundTerm* find(const std::string& var) const;
    bool bind(const std::string& var, const GroundTerm& t);  // false on clash
};

// Fresh-null source, owned by one run.
class NullFactory {
public:
    LabeledNull fresh() { return LabeledNull{next_++}; }
    int64_t issued() const { return next_; }

private:
    int64_t next_ = 1;
};

// One chase-step match. Returns nullopt iff a constant position mismatches
// or the substitution would become inconsistent. Arity mismatch is a
// programming error and asserts.
std::optional<Substitution> unify(const Atom& atom, const Fact& fact,
                                  const Substitution& partial);

// Instantiates the head of `rule` under `sub`, inventing one fresh null per
// existential variable shared across all head atoms of this application.
// Skolem and aggregation targets are the engine's job and must already be
// bound in `sub` when present.
std::vector<Fact> apply(const Rule& rule, const Substitution& sub,
                        NullFactory& nulls);

// Condition evaluation on ground bindings (numeric promotion int->float;
// other cross-type comparisons are errors).
bool eval_conditions(const std::vector<Condition>& conds, const Substitution& sub);
GroundTerm eval_expr(const ExprPtr& e, const Substitution& sub);

}  // namespace warden
