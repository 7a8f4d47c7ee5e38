#include "warden/model.hpp"

#include <cassert>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace warden {

bool is_constant(const Term& t) { return std::holds_alternative<Value>(t); }
bool is_null(const Term& t) { return std::holds_alternative<LabeledNull>(t); }
bool is_variable(const Term& t) { return std::holds_alternative<Variable>(t); }

std::string to_string(const Value& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, int64_t>) {
                return std::to_string(x);
            } else if constexpr (std::is_same_v<T, double>) {
                std::ostringstream os;
                os << x;
                if (os.str().find('.') == std::string::npos &&
                    os.str().find('e') == std::string::npos &&
                    os.str().find("inf") == std::string::npos &&
                    os.str().find("nan") == std::string::npos)
                    os << ".0";
                return os.str();
            } else if constexpr (std::is_same_v<T, std::string>) {
                return x;
            } else if constexpr (std::is_same_v<T, bool>) {
                return x ? "true" : "false";
            } else {
                char buf[16];
                std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", x.year, x.month, x.day);
                return buf;
            }
        },
        v);
}

std::string to_string(const GroundTerm& t) {
    if (const auto* n = std::get_if<LabeledNull>(&t)) return "_:n" + std::to_string(n->id);
    return to_string(std::get<Value>(t));
}

std::string to_string(const Term& t) {
    if (const auto* n = std::get_if<LabeledNull>(&t)) return "_:n" + std::to_string(n->id);
    if (const auto* v = std::get_if<Variable>(&t)) return v->name;
    return to_string(std::get<Value>(t));
}

int compare(const Value& a, const Value& b) {
    if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
    if (a < b) return -1;
    return a == b ? 0 : 1;
}

int compare(const GroundTerm& a, const GroundTerm& b) {
    const bool an = std::holds_alternative<LabeledNull>(a);
    const bool bn = std::holds_alternative<LabeledNull>(b);
    if (an != bn) return an ? 1 : -1;  // constants sort before nulls
    if (an) {
        auto x = std::get<LabeledNull>(a).id, y = std::get<LabeledNull>(b).id;
        return x < y ? -1 : (x == y ? 0 : 1);
    }
    return compare(std::get<Value>(a), std::get<Value>(b));
}

bool Fact::operator<(const Fact& o) const {
    if (pred != o.pred) return pred < o.pred;
    if (args.size() != o.args.size()) return args.size() < o.args.size();
    for (size_t i = 0; i < args.size(); ++i) {
        int c = compare(args[i], o.args[i]);
        if (c != 0) return c < 0;
    }
    return false;
}

namespace {

void hash_mix(size_t& h, size_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
}

size_t hash_value(const Value& v) {
    size_t h = v.index();
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Date>)
                hash_mix(h, std::hash<int64_t>{}((int64_t(x.year) << 16) ^
                                                 (x.month << 8) ^ x.day));
            else
                hash_mix(h, std::hash<T>{}(x));
        },
        v);
    return h;
}

}  // namespace

size_t FactHash::operator()(const Fact& f) const {
    size_t h = std::hash<std::string>{}(f.pred);
    for (const auto& t : f.args) {
        if (const auto* n = std::get_if<LabeledNull>(&t))
            hash_mix(h, std::hash<int64_t>{}(~n->id));
        else
            hash_mix(h, hash_value(std::get<Value>(t)));
    }
    return h;
}

std::string to_string(const Atom& a) {
    std::string s = a.pred + "(";
    for (size_t i = 0; i < a.args.size(); ++i) {
        if (i) s += ",";
        s += to_string(a.args[i]);
    }
    return s + ")";
}

std::string to_string(const Fact& f) {
    std::string s = f.pred + "(";
    for (size_t i = 0; i < f.args.size(); ++i) {
        if (i) s += ",";
        s += to_string(f.args[i]);
    }
    return s + ")";
}

Atom to_atom(const Fact& f) {
    Atom a;
    a.pred = f.pred;
    for (const auto& t : f.args)
        if (const auto* n = std::get_if<LabeledNull>(&t))
            a.args.emplace_back(*n);
        else
            a.args.emplace_back(std::get<Value>(t));
    return a;
}

Fact to_fact(const Atom& a) {
    Fact f;
    f.pred = a.pred;
    for (const auto& t : a.args) {
        assert(!is_variable(t));
        if (const auto* n = std::get_if<LabeledNull>(&t))
            f.args.emplace_back(*n);
        else
            f.args.emplace_back(std::get<Value>(t));
    }
    return f;
}

std::string to_string(CmpOp op) {
    switch (op) {
        case CmpOp::Lt: return "<";
        case CmpOp::Gt: return ">";
        case CmpOp::Le: return "<=";
        case CmpOp::Ge: return ">=";
        case CmpOp::Ne: return "!=";
        case CmpOp::Eq: return "=";
    }
    return "?";
}

ExprPtr Expr::make(Term t) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Leaf;
    e->leaf = std::move(t);
    return e;
}

ExprPtr Expr::make(Kind k, ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->lhs = std::move(l);
    e->rhs = std::move(r);
    return e;
}

void collect_variables(const ExprPtr& e, std::set<std::string>& out) {
    if (!e) return;
    if (e->kind == Expr::Kind::Leaf) {
        if (const auto* v = std::get_if<Variable>(&e->leaf)) out.insert(v->name);
        return;
    }
    collect_variables(e->lhs, out);
    collect_variables(e->rhs, out);
}

std::string to_string(const ExprPtr& e) {
    if (!e) return "?";
    switch (e->kind) {
        case Expr::Kind::Leaf: {
            if (const auto* v = std::get_if<Value>(&e->leaf);
                v && std::holds_alternative<std::string>(*v))
                return "\"" + std::get<std::string>(*v) + "\"";
            return to_string(e->leaf);
        }
        case Expr::Kind::Add: return "(" + to_string(e->lhs) + " + " + to_string(e->rhs) + ")";
        case Expr::Kind::Sub: return "(" + to_string(e->lhs) + " - " + to_string(e->rhs) + ")";
        case Expr::Kind::Mul: return "(" + to_string(e->lhs) + " * " + to_string(e->rhs) + ")";
        case Expr::Kind::Div: return "(" + to_string(e->lhs) + " / " + to_string(e->rhs) + ")";
    }
    return "?";
}

std::string to_string(AggFunc f) {
    switch (f) {
        case AggFunc::MSum: return "msum";
        case AggFunc::MCount: return "mcount";
        case AggFunc::MMin: return "mmin";
        case AggFunc::MMax: return "mmax";
    }
    return "?";
}

std::set<std::string> Rule::body_variables() const {
    std::set<std::string> out;
    for (const auto& a : body)
        for (const auto& t : a.args)
            if (const auto* v = std::get_if<Variable>(&t)) out.insert(v->name);
    return out;
}

std::set<std::string> Rule::head_variables() const {
    std::set<std::string> out;
    for (const auto& a : head)
        for (const auto& t : a.args)
            if (const auto* v = std::get_if<Variable>(&t)) out.insert(v->name);
    return out;
}

namespace {

std::string term_source(const Term& t) {
    if (const auto* v = std::get_if<Value>(&t);
        v && std::holds_alternative<std::string>(*v))
        return "\"" + std::get<std::string>(*v) + "\"";
    return to_string(t);
}

std::string atom_source(const Atom& a) {
    std::string s = a.pred + "(";
    for (size_t i = 0; i < a.args.size(); ++i) {
        if (i) s += ",";
        s += term_source(a.args[i]);
    }
    return s + ")";
}

}  // namespace

std::string to_string(const Rule& r) {
    std::string s;
    for (size_t i = 0; i < r.body.size(); ++i) {
        if (i) s += ", ";
        s += atom_source(r.body[i]);
    }
    for (const auto& [var, sk] : r.skolems) {
        if (!s.empty()) s += ", ";
        s += var + " = #" + sk.func + "(";
        for (size_t i = 0; i < sk.args.size(); ++i) {
            if (i) s += ",";
            s += sk.args[i];
        }
        s += ")";
    }
    if (r.aggregation) {
        const auto& g = *r.aggregation;
        if (!s.empty()) s += ", ";
        s += g.target + " = " + to_string(g.func) + "(" + g.arg;
        if (!g.contributors.empty()) {
            s += ", <";
            for (size_t i = 0; i < g.contributors.size(); ++i) {
                if (i) s += ",";
                s += g.contributors[i];
            }
            s += ">";
        }
        s += ")";
    }
    for (const auto& c : r.conditions) {
        if (!s.empty()) s += ", ";
        s += to_string(c.lhs) + " " + to_string(c.op) + " " + to_string(c.rhs);
    }
    s += " -> ";
    for (size_t i = 0; i < r.head.size(); ++i) {
        if (i) s += ", ";
        s += atom_source(r.head[i]);
    }
    s += ".";
    return s;
}

std::map<std::string, size_t> Program::predicates() const {
    std::map<std::string, size_t> out;
    for (const auto& r : rules) {
        for (const auto& a : r.body) out.emplace(a.pred, a.arity());
        for (const auto& a : r.head) out.emplace(a.pred, a.arity());
    }
    return out;
}

std::set<std::string> Program::head_predicates() const {
    std::set<std::string> out;
    for (const auto& r : rules)
        for (const auto& a : r.head) out.insert(a.pred);
    return out;
}

int Program::max_rule_id() const {
    int m = 0;
    for (const auto& r : rules) m = std::max(m, r.id);
    return m;
}

const GroundTerm* Substitution::find(const std::string& var) const {
    auto it = map.find(var);
    return it == map.end() ? nullptr : &it->second;
}

bool Substitution::bind(const std::string& var, const GroundTerm& t) {
    auto [it, inserted] = map.emplace(var, t);
    return inserted || it->second == t;
}

std::optional<Substitution> unify(const Atom& atom, const Fact& fact,
                                  const Substitution& partial) {
    assert(atom.pred == fact.pred && atom.arity() == fact.arity());
    Substitution sub = partial;
    for (size_t i = 0; i < atom.args.size(); ++i) {
        const Term& t = atom.args[i];
        if (const auto* v = std::get_if<Variable>(&t)) {
            if (!sub.bind(v->name, fact.args[i])) return std::nullopt;
        } else if (const auto* c = std::get_if<Value>(&t)) {
            const auto* fc = std::get_if<Value>(&fact.args[i]);
            if (!fc || !(*fc == *c)) return std::nullopt;
        } else {
            const auto& n = std::get<LabeledNull>(t);
            const auto* fn = std::get_if<LabeledNull>(&fact.args[i]);
            if (!fn || !(*fn == n)) return std::nullopt;
        }
    }
    return sub;
}

std::vector<Fact> apply(const Rule& rule, const Substitution& sub,
                        NullFactory& nulls) {
    std::map<std::string, LabeledNull> fresh;
    std::vector<Fact> out;
    out.reserve(rule.head.size());
    for (const auto& h : rule.head) {
        Fact f;
        f.pred = h.pred;
        f.args.reserve(h.args.size());
        for (const auto& t : h.args) {
            if (const auto* v = std::get_if<Variable>(&t)) {
                if (const GroundTerm* g = sub.find(v->name)) {
                    f.args.push_back(*g);
                } else if (rule.existentials.count(v->name)) {
                    auto [it, ins] = fresh.emplace(v->name, LabeledNull{});
                    if (ins) it->second = nulls.fresh();
                    f.args.emplace_back(it->second);
                } else {
                    throw std::runtime_error("malformed rule " + std::to_string(rule.id) +
                                             ": unbound head variable " + v->name);
                }
            } else if (const auto* c = std::get_if<Value>(&t)) {
                f.args.emplace_back(*c);
            } else {
                f.args.emplace_back(std::get<LabeledNull>(t));
            }
        }
        out.push_back(std::move(f));
    }
    return out;
}

namespace {

double as_number(const Value& v, bool& ok) {
    if (const auto* i = std::get_if<int64_t>(&v)) return double(*i);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    ok = false;
    return 0;
}

}  // namespace

GroundTerm eval_expr(const ExprPtr& e, const Substitution& sub) {
    if (e->kind == Expr::Kind::Leaf) {
        if (const auto* v = std::get_if<Variable>(&e->leaf)) {
            const GroundTerm* g = sub.find(v->name);
            if (!g) throw std::runtime_error("unbound variable in expression: " + v->name);
            return *g;
        }
        if (const auto* n = std::get_if<LabeledNull>(&e->leaf)) return *n;
        return std::get<Value>(e->leaf);
    }
    GroundTerm lg = eval_expr(e->lhs, sub);
    GroundTerm rg = eval_expr(e->rhs, sub);
    const auto* lv = std::get_if<Value>(&lg);
    const auto* rv = std::get_if<Value>(&rg);
    if (!lv || !rv) throw std::runtime_error("arithmetic on labeled null");
    // Integer arithmetic stays integral except division.
    if (std::holds_alternative<int64_t>(*lv) && std::holds_alternative<int64_t>(*rv) &&
        e->kind != Expr::Kind::Div) {
        int64_t a = std::get<int64_t>(*lv), b = std::get<int64_t>(*rv);
        switch (e->kind) {
            case Expr::Kind::Add: return Value{a + b};
            case Expr::Kind::Sub: return Value{a - b};
            case Expr::Kind::Mul: return Value{a * b};
            default: break;
        }
    }
    bool ok = true;
    double a = as_number(*lv, ok), b = as_number(*rv, ok);
    if (!ok) throw std::runtime_error("non-numeric operand in arithmetic expression");
    switch (e->kind) {
        case Expr::Kind::Add: return Value{a + b};
        case Expr::Kind::Sub: return Value{a - b};
        case Expr::Kind::Mul: return Value{a * b};
        case Expr::Kind::Div: return Value{a / b};
        default: break;
    }
    return Value{0.0};
}

bool eval_conditions(const std::vector<Condition>& conds, const Substitution& sub) {
    for (const auto& c : conds) {
        GroundTerm lg = eval_expr(c.lhs, sub);
        GroundTerm rg = eval_expr(c.rhs, sub);

        int cmp;
        const auto* lv = std::get_if<Value>(&lg);
        const auto* rv = std::get_if<Value>(&rg);
        if (lv && rv) {
            // Numeric comparisons promote int to float; other cross-type
            // comparisons only support = and !=.
            const bool lnum = std::holds_alternative<int64_t>(*lv) ||
                              std::holds_alternative<double>(*lv);
            const bool rnum = std::holds_alternative<int64_t>(*rv) ||
                              std::holds_alternative<double>(*rv);
            if (lnum && rnum && lv->index() != rv->index()) {
                bool ok = true;
                double a = as_number(*lv, ok), b = as_number(*rv, ok);
                cmp = a < b ? -1 : (a == b ? 0 : 1);
            } else if (lv->index() != rv->index()) {
                if (c.op == CmpOp::Ne) continue;
                if (c.op == CmpOp::Eq) return false;
                throw std::runtime_error("cross-type comparison");
            } else {
                cmp = compare(*lv, *rv);
            }
        } else {
            // Null comparisons: identity only.
            bool eq = lg == rg;
            if (c.op == CmpOp::Eq) { if (!eq) return false; continue; }
            if (c.op == CmpOp::Ne) { if (eq) return false; continue; }
            throw std::runtime_error("ordered comparison on labeled null");
        }

        bool pass = false;
        switch (c.op) {
            case CmpOp::Lt: pass = cmp < 0; break;
            case CmpOp::Gt: pass = cmp > 0; break;
            case CmpOp::Le: pass = cmp <= 0; break;
            case CmpOp::Ge: pass = cmp >= 0; break;
            case CmpOp::Ne: pass = cmp != 0; break;
            case CmpOp::Eq: pass = cmp == 0; break;
        }
        if (!pass) return false;
    }
    return true;
}

}  // namespace warden
