#include "warden/rewrite.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <map>
#include <set>

#include "json.hpp"

namespace warden {

void RewriteTrace::add(std::string kind, std::vector<int> in, std::vector<int> out,
                       std::string note) {
    steps.push_back(RewriteStep{std::move(kind), std::move(in), std::move(out),
                                std::move(note)});
}

std::string RewriteTrace::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : steps) {
        nlohmann::json j;
        j["kind"] = s.kind;
        j["input_rules"] = s.input_rules;
        j["output_rules"] = s.output_rules;
        if (!s.note.empty()) j["note"] = s.note;
        arr.push_back(j);
    }
    return arr.dump(2);
}

namespace {

// Variables used anywhere in a rule.
std::set<std::string> all_vars(const Rule& r) {
    std::set<std::string> vars = r.body_variables();
    for (const auto& v : r.head_variables()) vars.insert(v);
    for (const auto& c : r.conditions) {
        collect_variables(c.lhs, vars);
        collect_variables(c.rhs, vars);
    }
    for (const auto& [t, sk] : r.skolems) {
        vars.insert(t);
        for (const auto& a : sk.args) vars.insert(a);
    }
    if (r.aggregation) {
        vars.insert(r.aggregation->target);
        vars.insert(r.aggregation->arg);
        for (const auto& c : r.aggregation->contributors) vars.insert(c);
    }
    return vars;
}

Term subst_term(const Term& t, const std::map<std::string, Term>& m) {
    if (const auto* v = std::get_if<Variable>(&t)) {
        auto it = m.find(v->name);
        if (it != m.end()) return it->second;
    }
    return t;
}

Atom subst_atom(const Atom& a, const std::map<std::string, Term>& m) {
    Atom out;
    out.pred = a.pred;
    out.args.reserve(a.args.size());
    for (const auto& t : a.args) out.args.push_back(subst_term(t, m));
    return out;
}

ExprPtr subst_expr(const ExprPtr& e, const std::map<std::string, Term>& m) {
    if (!e) return e;
    if (e->kind == Expr::Kind::Leaf) return Expr::make(subst_term(e->leaf, m));
    return Expr::make(e->kind, subst_expr(e->lhs, m), subst_expr(e->rhs, m));
}

std::string rename_of(const std::map<std::string, Term>& m, const std::string& v) {
    auto it = m.find(v);
    if (it == m.end()) return v;
    return std::get<Variable>(it->second).name;
}

// Renames every variable of `r` with a numeric suffix, returning the rule and
// the substitution used.
std::pair<Rule, std::map<std::string, Term>> rename_apart(const Rule& r, int salt) {
    std::map<std::string, Term> m;
    for (const auto& v : all_vars(r))
        m.emplace(v, Variable{v + "_r" + std::to_string(salt)});
    Rule out = r;
    for (auto& a : out.body) a = subst_atom(a, m);
    for (auto& a : out.head) a = subst_atom(a, m);
    for (auto& c : out.conditions) {
        c.lhs = subst_expr(c.lhs, m);
        c.rhs = subst_expr(c.rhs, m);
    }
    std::set<std::string> ex;
    for (const auto& v : out.existentials) ex.insert(rename_of(m, v));
    out.existentials = std::move(ex);
    std::map<std::string, SkolemSpec> sk;
    for (const auto& [t, spec] : out.skolems) {
        SkolemSpec s2 = spec;
        for (auto& a : s2.args) a = rename_of(m, a);
        sk.emplace(rename_of(m, t), std::move(s2));
    }
    out.skolems = std::move(sk);
    if (out.aggregation) {
        out.aggregation->target = rename_of(m, out.aggregation->target);
        out.aggregation->arg = rename_of(m, out.aggregation->arg);
        for (auto& c : out.aggregation->contributors) c = rename_of(m, c);
    }
    return {std::move(out), std::move(m)};
}

// Canonical signature modulo variable renaming, for duplicate removal.
std::string canon_sig(const Rule& r) {
    std::map<std::string, std::string> names;
    auto canon = [&](const std::string& v) {
        auto [it, ins] = names.emplace(v, "V" + std::to_string(names.size() + 1));
        (void)ins;
        return it->second;
    };
    std::map<std::string, Term> m;
    Rule c = r;
    std::function<void(const Term&)> visit = [&](const Term& t) {
        if (const auto* v = std::get_if<Variable>(&t)) m[v->name] = Variable{canon(v->name)};
    };
    for (const auto& a : r.body)
        for (const auto& t : a.args) visit(t);
    for (const auto& [tv, sk] : r.skolems) {
        visit(Variable{tv});
        for (const auto& a : sk.args) visit(Variable{a});
    }
    if (r.aggregation) {
        visit(Variable{r.aggregation->arg});
        for (const auto& cv : r.aggregation->contributors) visit(Variable{cv});
        visit(Variable{r.aggregation->target});
    }
    for (const auto& c2 : r.conditions) {
        std::set<std::string> vs;
        collect_variables(c2.lhs, vs);
        collect_variables(c2.rhs, vs);
        for (const auto& v : vs) visit(Variable{v});
    }
    for (const auto& a : r.head)
        for (const auto& t : a.args) visit(t);
    for (auto& a : c.body) a = subst_atom(a, m);
    for (auto& a : c.head) a = subst_atom(a, m);
    for (auto& cd : c.conditions) {
        cd.lhs = subst_expr(cd.lhs, m);
        cd.rhs = subst_expr(cd.rhs, m);
    }
    std::set<std::string> ex;
    for (const auto& v : c.existentials) ex.insert(rename_of(m, v));
    c.existentials = std::move(ex);
    std::map<std::string, SkolemSpec> sk;
    for (const auto& [t, spec] : c.skolems) {
        SkolemSpec s2 = spec;
        for (auto& a : s2.args) a = rename_of(m, a);
        sk.emplace(rename_of(m, t), std::move(s2));
    }
    c.skolems = std::move(sk);
    if (c.aggregation) {
        c.aggregation->target = rename_of(m, c.aggregation->target);
        c.aggregation->arg = rename_of(m, c.aggregation->arg);
        for (auto& cv : c.aggregation->contributors) cv = rename_of(m, cv);
    }
    return to_string(c);
}

std::vector<std::string> head_use_order(const Rule& r) {
    // Body variables used in heads, in order of first body occurrence, then
    // skolem/aggregation targets used in heads, then existentials.
    std::set<std::string> head_vars = r.head_variables();
    std::vector<std::string> cols;
    std::set<std::string> seen;
    for (const auto& a : r.body)
        for (const auto& t : a.args)
            if (const auto* v = std::get_if<Variable>(&t))
                if (head_vars.count(v->name) && seen.insert(v->name).second)
                    cols.push_back(v->name);
    for (const auto& [tv, sk] : r.skolems)
        if (head_vars.count(tv) && seen.insert(tv).second) cols.push_back(tv);
    if (r.aggregation && head_vars.count(r.aggregation->target) &&
        seen.insert(r.aggregation->target).second)
        cols.push_back(r.aggregation->target);
    for (const auto& a : r.head)
        for (const auto& t : a.args)
            if (const auto* v = std::get_if<Variable>(&t))
                if (r.existentials.count(v->name) && seen.insert(v->name).second)
                    cols.push_back(v->name);
    return cols;
}

}  // namespace

Program normalize(const Program& program, RewriteTrace* trace) {
    Program out = program;
    out.rules.clear();
    int next_id = program.max_rule_id() + 1;

    for (const Rule& r : program.rules) {
        if (r.head.size() <= 1) {
            out.rules.push_back(r);
            continue;
        }
        bool needs_aux = !r.existentials.empty();
        if (!needs_aux) {
            std::vector<int> out_ids;
            for (const auto& h : r.head) {
                Rule s = r;
                s.head = {h};
                s.existentials.clear();
                s.id = next_id++;
                out_ids.push_back(s.id);
                out.rules.push_back(std::move(s));
            }
            if (trace) trace->add("head-split", {r.id}, out_ids);
            continue;
        }
        // Route shared existentials through an auxiliary predicate.
        std::vector<std::string> cols = head_use_order(r);
        Atom aux;
        aux.pred = "#h" + std::to_string(r.id);
        for (const auto& c : cols) aux.args.emplace_back(Variable{c});

        Rule stage1 = r;
        stage1.head = {aux};
        stage1.id = next_id++;
        std::vector<int> out_ids{stage1.id};
        out.rules.push_back(stage1);

        for (const auto& h : r.head) {
            Rule proj;
            proj.id = next_id++;
            proj.body = {aux};
            proj.head = {h};
            out_ids.push_back(proj.id);
            out.rules.push_back(std::move(proj));
        }
        if (trace) trace->add("head-split", {r.id}, out_ids, "aux " + aux.pred);
    }

    // Remove syntactic duplicates (modulo variable renaming).
    std::set<std::string> seen;
    std::vector<Rule> dedup;
    for (auto& r : out.rules)
        if (seen.insert(canon_sig(r)).second) dedup.push_back(std::move(r));
    out.rules = std::move(dedup);
    return out;
}

Program confine_existentials(const Program& program, RewriteTrace* trace) {
    Program out = program;
    out.rules.clear();
    int next_id = program.max_rule_id() + 1;

    for (const Rule& r : program.rules) {
        if (r.existentials.empty() || r.is_linear()) {
            out.rules.push_back(r);
            continue;
        }
        std::vector<std::string> cols;
        {
            std::set<std::string> head_vars = r.head_variables();
            std::set<std::string> seen;
            for (const auto& a : r.body)
                for (const auto& t : a.args)
                    if (const auto* v = std::get_if<Variable>(&t))
                        if (head_vars.count(v->name) && !r.existentials.count(v->name) &&
                            seen.insert(v->name).second)
                            cols.push_back(v->name);
            for (const auto& [tv, sk] : r.skolems)
                if (head_vars.count(tv) && seen.insert(tv).second) cols.push_back(tv);
            if (r.aggregation && head_vars.count(r.aggregation->target) &&
                seen.insert(r.aggregation->target).second)
                cols.push_back(r.aggregation->target);
        }
        Atom aux;
        aux.pred = "#c" + std::to_string(r.id);
        for (const auto& c : cols) aux.args.emplace_back(Variable{c});

        Rule stage1 = r;
        stage1.head = {aux};
        stage1.existentials.clear();
        stage1.id = next_id++;

        Rule stage2;
        stage2.id = next_id++;
        stage2.body = {aux};
        stage2.head = r.head;
        stage2.existentials = r.existentials;

        if (trace)
            trace->add("existential-push", {r.id}, {stage1.id, stage2.id},
                       "aux " + aux.pred);
        out.rules.push_back(std::move(stage1));
        out.rules.push_back(std::move(stage2));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Harmful joins elimination

namespace {

struct Source {
    int rule_id = 0;
    std::string var;            // existential variable or skolem target
    bool user_skolem = false;
    std::vector<std::string> keys;  // frontier vars / skolem args, in rule naming

    std::string name() const {
        return (user_skolem ? "s" : "f") + std::to_string(rule_id) + "_" + var;
    }
    bool operator<(const Source& o) const {
        return std::tie(rule_id, var) < std::tie(o.rule_id, o.var);
    }
};

using PosSet = std::vector<size_t>;  // sorted 0-based arg positions

std::string posset_tag(const PosSet& s) {
    std::string out;
    for (size_t p : s) out += "_" + std::to_string(p + 1);
    return out;
}

// Generated names embed predicate names; '#' cannot nest inside a name.
std::string mangle(const std::string& pred) {
    std::string out;
    for (char c : pred) out += (c == '#') ? '_' : c;
    return out;
}

struct WitKey {
    std::string pred;
    PosSet positions;
    std::string source;
    bool operator<(const WitKey& o) const {
        return std::tie(pred, positions, source) <
               std::tie(o.pred, o.positions, o.source);
    }
};

struct WitInfo {
    std::string name;
    size_t key_arity = 0;
    std::vector<size_t> payload_positions;  // positions of the base pred kept
    std::vector<int> def_rules;
    // Per def rule: payload-variable occurrences in the cause's original body,
    // used by the origin-shift rederivation check.
    std::map<int, std::vector<Position>> carriers;
};

class Eliminator {
public:
    Eliminator(const Program& p) : prog_(p) { next_id_ = p.max_rule_id() + 1; }

    RewriteResult run() {
        size_t initial_harmful = 0;
        {
            WardednessReport rep = check_warded(prog_);
            if (!rep.warded()) {
                std::string why;
                for (const auto& v : rep.violations) why += v + "; ";
                throw NotWardedError(why);
            }
            for (const auto& [id, rr] : rep.per_rule)
                if (rr.kind == RuleKind::HarmfulJoin) ++initial_harmful;
        }
        size_t cap = std::max<size_t>(64, size_t(1) << std::min<size_t>(initial_harmful, 16));

        size_t iterations = 0;
        for (;;) {
            WardednessReport rep = check_warded(prog_);
            if (!rep.warded())
                throw NotWardedError("rewrite produced an unwarded program (bug)");
            int target = -1;
            std::string hvar;
            for (const auto& r : prog_.rules) {
                auto it = rep.per_rule.find(r.id);
                if (it != rep.per_rule.end() && it->second.kind == RuleKind::HarmfulJoin) {
                    target = r.id;
                    hvar = it->second.harmful_joins.front().first;
                    break;
                }
            }
            if (target < 0) break;
            if (++iterations > cap)
                throw std::runtime_error("harmful join elimination exceeded iteration cap");
            eliminate(target, hvar, rep);
        }
        simplify();
        return RewriteResult{std::move(prog_), std::move(trace_)};
    }

private:
    const Rule& rule_by_id(int id) const {
        for (const auto& r : prog_.rules)
            if (r.id == id) return r;
        throw std::logic_error("missing rule");
    }

    std::vector<Source> enumerate_sources() const {
        std::vector<Source> out;
        for (const auto& r : prog_.rules) {
            for (const auto& z : r.existentials) {
                Source s;
                s.rule_id = r.id;
                s.var = z;
                s.user_skolem = false;
                std::set<std::string> head_vars = r.head_variables();
                std::set<std::string> seen;
                for (const auto& a : r.body)
                    for (const auto& t : a.args)
                        if (const auto* v = std::get_if<Variable>(&t))
                            if (head_vars.count(v->name) && !r.existentials.count(v->name) &&
                                seen.insert(v->name).second)
                                s.keys.push_back(v->name);
                out.push_back(std::move(s));
            }
            for (const auto& [tv, sk] : r.skolems) {
                Source s;
                s.rule_id = r.id;
                s.var = tv;
                s.user_skolem = true;
                s.keys = sk.args;
                out.push_back(std::move(s));
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    // Null-flow fixpoint: which sources can place nulls at each position.
    std::map<Position, std::set<size_t>> compute_flows(
        const std::vector<Source>& sources, const WardednessReport& rep) const {
        std::map<Position, std::set<size_t>> flow;
        std::map<std::pair<int, std::string>, size_t> by_id;
        for (size_t i = 0; i < sources.size(); ++i)
            by_id[{sources[i].rule_id, sources[i].var}] = i;

        for (const auto& r : prog_.rules) {
            for (const auto& h : r.head)
                for (size_t i = 0; i < h.args.size(); ++i)
                    if (const auto* v = std::get_if<Variable>(&h.args[i])) {
                        auto it = by_id.find({r.id, v->name});
                        if (it != by_id.end() &&
                            (r.existentials.count(v->name) || r.skolems.count(v->name)))
                            flow[Position{h.pred, i + 1}].insert(it->second);
                    }
        }
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& r : prog_.rules) {
                auto rit = rep.per_rule.find(r.id);
                if (rit == rep.per_rule.end()) continue;
                for (const auto& [v, cls] : rit->second.variables) {
                    if (cls == VarClass::Harmless) continue;
                    std::set<size_t> acc;
                    for (const auto& a : r.body)
                        for (size_t i = 0; i < a.args.size(); ++i)
                            if (const auto* bv = std::get_if<Variable>(&a.args[i]))
                                if (bv->name == v) {
                                    auto f = flow.find(Position{a.pred, i + 1});
                                    if (f != flow.end())
                                        acc.insert(f->second.begin(), f->second.end());
                                }
                    if (acc.empty()) continue;
                    for (const auto& h : r.head)
                        for (size_t i = 0; i < h.args.size(); ++i)
                            if (const auto* hv = std::get_if<Variable>(&h.args[i]))
                                if (hv->name == v) {
                                    auto& cell = flow[Position{h.pred, i + 1}];
                                    size_t before = cell.size();
                                    cell.insert(acc.begin(), acc.end());
                                    changed |= cell.size() != before;
                                }
                }
            }
        }
        return flow;
    }

    // Positions (0-based) of variable v in atom a.
    static PosSet positions_of(const Atom& a, const std::string& v) {
        PosSet s;
        for (size_t i = 0; i < a.args.size(); ++i)
            if (const auto* var = std::get_if<Variable>(&a.args[i]))
                if (var->name == v) s.push_back(i);
        return s;
    }

    // Conditions referencing a harmful variable: a != comparison against a
    // null is vacuously true and can be dropped; anything else makes the
    // null branch unsatisfiable.
    static bool strip_null_conditions(std::vector<Condition>& conds,
                                      const std::string& h, bool& satisfiable) {
        std::vector<Condition> kept;
        satisfiable = true;
        bool touched = false;
        for (auto& c : conds) {
            std::set<std::string> vars;
            collect_variables(c.lhs, vars);
            collect_variables(c.rhs, vars);
            if (!vars.count(h)) {
                kept.push_back(c);
                continue;
            }
            touched = true;
            if (c.op == CmpOp::Ne) continue;  // null != ground value
            satisfiable = false;
        }
        conds = std::move(kept);
        return touched;
    }

    std::string ground_pred(const std::string& pred, const PosSet& s) {
        std::string name = "#g_" + mangle(pred) + posset_tag(s);
        if (ground_defined_.insert(name).second) {
            const auto arity = pred_arity(pred);
            Rule g;
            g.id = next_id_++;
            Atom src;
            src.pred = pred;
            Atom dst;
            dst.pred = name;
            for (size_t i = 0; i < arity; ++i) {
                Variable v{"X" + std::to_string(i + 1)};
                src.args.emplace_back(v);
                dst.args.emplace_back(v);
            }
            g.body.push_back(src);
            for (size_t p : s) {
                Atom guard;
                guard.pred = kDomPredicate;
                guard.args.push_back(src.args[p]);
                g.body.push_back(guard);
            }
            g.head.push_back(dst);
            trace_.add("grounding", {}, {g.id}, name);
            prog_.rules.push_back(std::move(g));
        }
        return name;
    }

    size_t pred_arity(const std::string& pred) const {
        for (const auto& r : prog_.rules) {
            for (const auto& a : r.body)
                if (a.pred == pred) return a.arity();
            for (const auto& a : r.head)
                if (a.pred == pred) return a.arity();
        }
        throw std::logic_error("unknown predicate " + pred);
    }

    const WitInfo& build_wit(const std::string& pred, const PosSet& s,
                             const Source& f, const std::vector<Source>& sources,
                             const WardednessReport& rep) {
        WitKey key{pred, s, f.name()};
        auto found = wits_.find(key);
        if (found != wits_.end()) return found->second;

        WitInfo& info = wits_[key];
        info.name = "#w_" + f.name() + "_" + mangle(pred) + posset_tag(s);
        info.key_arity = f.keys.size();
        for (size_t i = 0; i < pred_arity(pred); ++i)
            if (std::find(s.begin(), s.end(), i) == s.end())
                info.payload_positions.push_back(i);

        // Snapshot: causes are the current rules with this head predicate.
        std::vector<Rule> snapshot;
        for (const auto& r : prog_.rules)
            if (!r.head.empty() && r.head[0].pred == pred) snapshot.push_back(r);

        for (const Rule& gamma : snapshot) {
            const Atom& head = gamma.head[0];
            // The S positions must all hold one variable for a null to sit in
            // all of them... unless distinct harmful variables co-bind.
            std::vector<std::string> svars;
            bool viable = true;
            for (size_t p : s) {
                const auto* v = std::get_if<Variable>(&head.args[p]);
                if (!v) {
                    viable = false;  // constant can never equal a null (case a)
                    trace_.add("virtual-join-drop(a)", {gamma.id}, {},
                               info.name + ": ground head position");
                    break;
                }
                svars.push_back(v->name);
            }
            if (!viable) continue;
            bool all_same = std::all_of(svars.begin(), svars.end(),
                                        [&](const std::string& v) { return v == svars[0]; });

            if (all_same && (gamma.existentials.count(svars[0]) ||
                             gamma.skolems.count(svars[0]))) {
                Source g{gamma.id, svars[0], gamma.skolems.count(svars[0]) > 0, {}};
                if (!(g.rule_id == f.rule_id && g.var == f.var)) {
                    trace_.add("virtual-join-drop(b)", {gamma.id}, {},
                               info.name + ": distinct skolem function");
                    continue;
                }
                emit_base_def(info, gamma, s, f);
                continue;
            }
            // Indirect: every distinct variable at the S positions must be
            // able to carry nulls.
            std::set<std::string> uvars(svars.begin(), svars.end());
            auto rit = rep.per_rule.find(gamma.id);
            bool harmful_ok = rit != rep.per_rule.end();
            for (const auto& u : uvars) {
                if (gamma.existentials.count(u) || gamma.skolems.count(u)) {
                    harmful_ok = false;  // mixed existential/universal positions
                    break;
                }
                auto vit = rit->second.variables.find(u);
                if (vit == rit->second.variables.end() ||
                    vit->second == VarClass::Harmless) {
                    harmful_ok = false;  // ground-only flow, grounding covers it
                    break;
                }
            }
            if (!harmful_ok) continue;
            emit_indirect_def(info, gamma, s, uvars, f, sources, rep);
        }
        return wits_.at(key);
    }

    void emit_base_def(WitInfo& info, const Rule& gamma_in, const PosSet& s,
                       const Source& f) {
        auto [gamma, ren] = rename_apart(gamma_in, salt_++);
        const Atom& head = gamma.head[0];

        Rule def;
        def.id = next_id_++;
        def.body = gamma.body;
        def.conditions = gamma.conditions;

        Atom wh;
        wh.pred = info.name;
        for (const auto& k : f.keys) wh.args.push_back(Variable{rename_of(ren, k)});
        for (size_t p : info.payload_positions) wh.args.push_back(head.args[p]);
        def.head = {wh};

        std::string fvar = rename_of(ren, f.var);
        std::set<std::string> head_vars;
        for (const auto& t : wh.args)
            if (const auto* v = std::get_if<Variable>(&t)) head_vars.insert(v->name);
        for (const auto& z : gamma.existentials)
            if (z != fvar && head_vars.count(z)) def.existentials.insert(z);
        for (const auto& [tv, sk] : gamma.skolems) {
            // The source's own assignment stays only if its deterministic
            // value still shows in a payload column.
            if (tv == fvar && !head_vars.count(fvar)) continue;
            if (head_vars.count(tv)) def.skolems.emplace(tv, sk);
        }

        info.def_rules.push_back(def.id);
        trace_.add("direct", {gamma_in.id}, {def.id}, info.name);
        prog_.rules.push_back(std::move(def));
    }

    void emit_indirect_def(WitInfo& info, const Rule& gamma_in, const PosSet& s,
                           const std::set<std::string>& uvars_in, const Source& f,
                           const std::vector<Source>& sources,
                           const WardednessReport& rep) {
        auto [gamma, ren] = rename_apart(gamma_in, salt_++);
        std::set<std::string> uvars;
        for (const auto& u : uvars_in) uvars.insert(rename_of(ren, u));

        bool satisfiable = true;
        std::vector<Condition> conds = gamma.conditions;
        for (const auto& u : uvars) {
            strip_null_conditions(conds, u, satisfiable);
            if (!satisfiable) break;
        }
        if (!satisfiable) {
            trace_.add("virtual-join-drop(a)", {gamma_in.id}, {},
                       info.name + ": condition on null-bound variable");
            return;
        }
        for (const auto& [tv, sk] : gamma.skolems)
            for (const auto& a : sk.args)
                if (uvars.count(a)) {
                    trace_.add("virtual-join-drop(a)", {gamma_in.id}, {},
                               info.name + ": skolem argument on null-bound variable");
                    return;
                }
        if (gamma.aggregation) {
            const auto& g = *gamma.aggregation;
            bool touches = uvars.count(g.arg) > 0;
            for (const auto& cv : g.contributors) touches |= uvars.count(cv) > 0;
            if (touches) {
                trace_.add("virtual-join-drop(a)", {gamma_in.id}, {},
                           info.name + ": aggregation over null-bound variable");
                return;
            }
        }

        // Key variables shared by every inner witness atom.
        std::vector<Term> keyvars;
        for (size_t i = 0; i < f.keys.size(); ++i)
            keyvars.push_back(Variable{"K" + std::to_string(i + 1) + "_r" +
                                       std::to_string(salt_)});
        ++salt_;

        Rule def;
        def.id = next_id_++;
        std::vector<Position> carriers;
        for (const Atom& a : gamma.body) {
            // Which tracked variable(s) does this atom bind?
            std::set<std::string> here;
            for (const auto& u : uvars)
                if (!positions_of(a, u).empty()) here.insert(u);
            if (here.empty()) {
                def.body.push_back(a);
                continue;
            }
            if (here.size() > 1) {
                // Two distinct null-bound variables in one atom: both must be
                // the same source value; replace positions of both.
                PosSet ps;
                for (const auto& u : here)
                    for (size_t p : positions_of(a, u)) ps.push_back(p);
                std::sort(ps.begin(), ps.end());
                const WitInfo& inner = build_wit(a.pred, ps, f, sources, rep);
                Atom wa;
                wa.pred = inner.name;
                wa.args = keyvars;
                for (size_t p : inner.payload_positions) wa.args.push_back(a.args[p]);
                def.body.push_back(std::move(wa));
                continue;
            }
            const std::string& u = *here.begin();
            PosSet ps = positions_of(a, u);
            const WitInfo& inner = build_wit(a.pred, ps, f, sources, rep);
            Atom wa;
            wa.pred = inner.name;
            wa.args = keyvars;
            for (size_t p : inner.payload_positions) wa.args.push_back(a.args[p]);
            def.body.push_back(std::move(wa));
        }
        def.conditions = std::move(conds);

        const Atom& head = gamma.head[0];
        Atom wh;
        wh.pred = info.name;
        wh.args = keyvars;
        for (size_t p : info.payload_positions) {
            wh.args.push_back(head.args[p]);
            if (const auto* pv = std::get_if<Variable>(&head.args[p]))
                for (const Atom& a : gamma.body)
                    for (size_t i = 0; i < a.args.size(); ++i)
                        if (const auto* bv = std::get_if<Variable>(&a.args[i]))
                            if (bv->name == pv->name)
                                carriers.push_back(Position{a.pred, i + 1});
        }
        def.head = {wh};

        std::set<std::string> head_vars;
        for (const auto& t : wh.args)
            if (const auto* v = std::get_if<Variable>(&t)) head_vars.insert(v->name);
        for (const auto& z : gamma.existentials)
            if (head_vars.count(z)) def.existentials.insert(z);
        for (const auto& [tv, sk] : gamma.skolems)
            if (head_vars.count(tv)) def.skolems.emplace(tv, sk);
        if (gamma.aggregation) def.aggregation = gamma.aggregation;

        info.def_rules.push_back(def.id);
        info.carriers[def.id] = std::move(carriers);
        rule_carriers_[def.id] = info.carriers[def.id];
        trace_.add("indirect", {gamma_in.id}, {def.id}, info.name);
        prog_.rules.push_back(std::move(def));
    }

    void eliminate(int alpha_id, const std::string& h, const WardednessReport& rep) {
        Rule alpha = rule_by_id(alpha_id);

        std::vector<size_t> join_atoms;
        for (size_t i = 0; i < alpha.body.size(); ++i)
            if (!positions_of(alpha.body[i], h).empty()) join_atoms.push_back(i);
        assert(join_atoms.size() >= 2);

        // Grounded branch: Dom-guarded primed copies; when all join atoms
        // share predicate and positions, one primed copy replaces them all.
        {
            bool uniform = true;
            for (size_t j : join_atoms) {
                if (alpha.body[j].pred != alpha.body[join_atoms[0]].pred ||
                    positions_of(alpha.body[j], h) !=
                        positions_of(alpha.body[join_atoms[0]], h))
                    uniform = false;
            }
            Rule grounded = alpha;
            grounded.id = next_id_++;
            if (uniform) {
                for (size_t j : join_atoms) {
                    const Atom& a = alpha.body[j];
                    grounded.body[j].pred = ground_pred(a.pred, positions_of(a, h));
                }
            } else {
                const Atom& a = alpha.body[join_atoms[0]];
                grounded.body[join_atoms[0]].pred =
                    ground_pred(a.pred, positions_of(a, h));
            }
            trace_.add("grounding", {alpha.id}, {grounded.id}, "join on " + h);
            prog_.rules.push_back(std::move(grounded));
        }

        // Null branches: one harmless witness join per candidate source.
        std::vector<Source> sources = enumerate_sources();
        auto flows = compute_flows(sources, rep);
        std::set<size_t> cands;
        bool first = true;
        for (size_t j : join_atoms) {
            const Atom& a = alpha.body[j];
            for (size_t p : positions_of(a, h)) {
                std::set<size_t> here;
                auto it = flows.find(Position{a.pred, p + 1});
                if (it != flows.end()) here = it->second;
                if (first) {
                    cands = here;
                    first = false;
                } else {
                    std::set<size_t> inter;
                    std::set_intersection(cands.begin(), cands.end(), here.begin(),
                                          here.end(), std::inserter(inter, inter.begin()));
                    cands = std::move(inter);
                }
            }
        }

        bool agg_on_h = false;
        if (alpha.aggregation) {
            const auto& g = *alpha.aggregation;
            agg_on_h = g.arg == h || std::find(g.contributors.begin(),
                                               g.contributors.end(),
                                               h) != g.contributors.end();
        }
        for (const auto& [tv, sk] : alpha.skolems)
            if (std::find(sk.args.begin(), sk.args.end(), h) != sk.args.end())
                agg_on_h = true;

        for (size_t ci : cands) {
            const Source& f = sources[ci];
            if (agg_on_h) {
                // Aggregation or skolem arguments cannot range over the null
                // identity; only the grounded branch survives.
                trace_.add("virtual-join-drop(a)", {alpha.id}, {},
                           "aggregation/skolem over " + h + " with source " + f.name());
                continue;
            }
            std::vector<Condition> conds = alpha.conditions;
            bool satisfiable = true;
            strip_null_conditions(conds, h, satisfiable);
            if (!satisfiable) {
                trace_.add("virtual-join-drop(a)", {alpha.id}, {},
                           "condition on " + h + " with source " + f.name());
                continue;
            }

            std::vector<Term> keyvars;
            for (size_t i = 0; i < f.keys.size(); ++i)
                keyvars.push_back(Variable{"K" + std::to_string(i + 1) + "_r" +
                                           std::to_string(salt_)});
            ++salt_;

            Rule repl;
            repl.id = next_id_++;
            for (size_t i = 0; i < alpha.body.size(); ++i) {
                if (std::find(join_atoms.begin(), join_atoms.end(), i) != join_atoms.end()) {
                    const Atom& a = alpha.body[i];
                    const WitInfo& w = build_wit(a.pred, positions_of(a, h), f, sources, rep);
                    Atom wa;
                    wa.pred = w.name;
                    wa.args = keyvars;
                    for (size_t p : w.payload_positions) wa.args.push_back(a.args[p]);
                    repl.body.push_back(std::move(wa));
                } else {
                    repl.body.push_back(alpha.body[i]);
                }
            }
            repl.conditions = conds;
            repl.head = alpha.head;
            repl.existentials = alpha.existentials;
            repl.skolems = alpha.skolems;
            repl.aggregation = alpha.aggregation;
            trace_.add("linearization", {alpha.id}, {repl.id},
                       "join on " + h + " via " + f.name());
            prog_.rules.push_back(std::move(repl));
        }

        // Remove alpha.
        prog_.rules.erase(std::remove_if(prog_.rules.begin(), prog_.rules.end(),
                                         [&](const Rule& r) { return r.id == alpha_id; }),
                          prog_.rules.end());
    }

    // ------------------------------------------------------------------
    // Post passes: inline pass-through predicates, origin-shift, cleanup.

    bool is_internal(const std::string& pred) const {
        return !pred.empty() && pred[0] == '#';
    }

    void simplify() {
        for (int round = 0; round < 8; ++round) {
            size_t before = prog_.rules.size();
            std::string sig;
            for (const auto& r : prog_.rules) sig += to_string(r);
            inline_passthrough();
            drop_projectable_columns();
            inline_small_defs();
            std::string sig2;
            for (const auto& r : prog_.rules) sig2 += to_string(r);
            if (before == prog_.rules.size() && sig == sig2) break;
        }
        origin_shift();
        inline_passthrough();
        drop_unused();
        dedup_rules();
    }

    // Removes witness columns that are pure projections everywhere: defined
    // by a variable occurring nowhere else (an existential or a free local)
    // and never consulted at a use site.
    void drop_projectable_columns() {
        for (;;) {
            std::map<std::string, std::vector<size_t>> defs;
            std::map<std::string, std::vector<size_t>> uses;
            for (size_t i = 0; i < prog_.rules.size(); ++i) {
                const Rule& r = prog_.rules[i];
                if (r.head[0].pred.rfind("#w_", 0) == 0)
                    defs[r.head[0].pred].push_back(i);
                for (const auto& a : r.body)
                    if (a.pred.rfind("#w_", 0) == 0) uses[a.pred].push_back(i);
            }
            auto occurrences_in_rule = [](const Rule& r, const std::string& v) {
                size_t n = 0;
                for (const auto& a : r.body)
                    for (const auto& t : a.args)
                        if (const auto* var = std::get_if<Variable>(&t))
                            if (var->name == v) ++n;
                for (const auto& a : r.head)
                    for (const auto& t : a.args)
                        if (const auto* var = std::get_if<Variable>(&t))
                            if (var->name == v) ++n;
                std::set<std::string> cv;
                for (const auto& c : r.conditions) {
                    collect_variables(c.lhs, cv);
                    collect_variables(c.rhs, cv);
                }
                if (cv.count(v)) n += 2;  // consulted
                for (const auto& [tv, sk] : r.skolems) {
                    if (tv == v) n += 2;
                    for (const auto& a : sk.args)
                        if (a == v) n += 2;
                }
                if (r.aggregation) {
                    if (r.aggregation->arg == v || r.aggregation->target == v) n += 2;
                    for (const auto& c : r.aggregation->contributors)
                        if (c == v) n += 2;
                }
                return n;
            };

            std::string victim;
            size_t column = 0;
            for (const auto& [w, def_ix] : defs) {
                size_t arity = prog_.rules[def_ix[0]].head[0].args.size();
                for (size_t j = 0; j < arity && victim.empty(); ++j) {
                    bool ok = true;
                    for (size_t ix : def_ix) {
                        const Rule& d = prog_.rules[ix];
                        const auto* v = std::get_if<Variable>(&d.head[0].args[j]);
                        if (!v || occurrences_in_rule(d, v->name) != 1) {
                            ok = false;
                            break;
                        }
                    }
                    if (!ok) continue;
                    for (size_t ix : uses[w]) {
                        const Rule& u = prog_.rules[ix];
                        for (const auto& a : u.body) {
                            if (a.pred != w) continue;
                            const auto* v = std::get_if<Variable>(&a.args[j]);
                            if (!v || occurrences_in_rule(u, v->name) != 1) {
                                ok = false;
                                break;
                            }
                        }
                        if (!ok) break;
                    }
                    if (ok) {
                        victim = w;
                        column = j;
                    }
                }
                if (!victim.empty()) break;
            }
            if (victim.empty()) return;

            for (auto& r : prog_.rules) {
                if (r.head[0].pred == victim) {
                    const auto* v = std::get_if<Variable>(&r.head[0].args[column]);
                    if (v) r.existentials.erase(v->name);
                    r.head[0].args.erase(r.head[0].args.begin() + column);
                }
                for (auto& a : r.body)
                    if (a.pred == victim) a.args.erase(a.args.begin() + column);
            }
            trace_.add("inline", {}, {},
                       victim + ": dropped projected column " + std::to_string(column + 1));
        }
    }

    // Unfolds single-definition internal predicates with small bodies into
    // their use sites (conditions carried along, locals renamed fresh).
    void inline_small_defs() {
        for (;;) {
            std::map<std::string, std::vector<size_t>> defs;
            size_t use_count = 0;
            for (size_t i = 0; i < prog_.rules.size(); ++i)
                if (is_internal(prog_.rules[i].head[0].pred))
                    defs[prog_.rules[i].head[0].pred].push_back(i);

            std::string victim;
            size_t def_ix = 0;
            for (const auto& [pred, ixs] : defs) {
                if (ixs.size() != 1) continue;
                if (pred.rfind("#g_", 0) == 0) continue;  // keep grounded copies
                const Rule& d = prog_.rules[ixs[0]];
                if (d.body.size() > 3 || !d.skolems.empty() || d.aggregation ||
                    !d.existentials.empty())
                    continue;
                bool self = false;
                for (const auto& a : d.body) self |= a.pred == pred;
                if (self) continue;
                std::set<std::string> seen;
                bool ok = true;
                for (const auto& t : d.head[0].args) {
                    const auto* v = std::get_if<Variable>(&t);
                    if (!v || !seen.insert(v->name).second) {
                        ok = false;
                        break;
                    }
                }
                if (!ok || prog_.outputs.count(pred)) continue;
                use_count = 0;
                for (const auto& r : prog_.rules) {
                    size_t here = 0;
                    for (const auto& a : r.body) here += a.pred == pred;
                    use_count += here;
                    // Existential rules must stay linear.
                    if (here && !r.existentials.empty() &&
                        r.body.size() - 1 + d.body.size() > 1)
                        ok = false;
                }
                if (!ok || use_count > 32) continue;
                victim = pred;
                def_ix = ixs[0];
                break;
            }
            if (victim.empty()) return;

            Rule def = prog_.rules[def_ix];
            prog_.rules.erase(prog_.rules.begin() + def_ix);
            std::vector<int> touched;
            for (auto& r : prog_.rules) {
                bool any = false;
                for (bool hit = true; hit;) {
                    hit = false;
                    for (size_t b = 0; b < r.body.size(); ++b) {
                        if (r.body[b].pred != victim) continue;
                        hit = any = true;
                        Atom use = r.body[b];
                        r.body.erase(r.body.begin() + b);
                        std::map<std::string, Term> m;
                        for (size_t i = 0; i < def.head[0].args.size(); ++i)
                            m[std::get<Variable>(def.head[0].args[i]).name] = use.args[i];
                        for (const auto& bv : all_vars(def))
                            if (!m.count(bv))
                                m[bv] = Variable{bv + "_i" + std::to_string(salt_)};
                        ++salt_;
                        for (const auto& a : def.body)
                            r.body.insert(r.body.begin() + b, subst_atom(a, m));
                        for (const auto& c : def.conditions)
                            r.conditions.push_back(
                                Condition{subst_expr(c.lhs, m), c.op, subst_expr(c.rhs, m)});
                        break;
                    }
                }
                if (any) {
                    touched.push_back(r.id);
                    auto c = rule_carriers_.find(def.id);
                    if (c != rule_carriers_.end()) {
                        auto& mine = rule_carriers_[r.id];
                        mine.insert(mine.end(), c->second.begin(), c->second.end());
                    }
                }
            }
            trace_.add("inline", {def.id}, touched, victim);
        }
    }

    void inline_passthrough() {
        for (;;) {
            // Find an internal predicate defined by exactly one copy rule.
            std::map<std::string, std::vector<size_t>> defs;
            for (size_t i = 0; i < prog_.rules.size(); ++i)
                if (is_internal(prog_.rules[i].head[0].pred))
                    defs[prog_.rules[i].head[0].pred].push_back(i);

            std::string victim;
            size_t def_ix = 0;
            for (const auto& [pred, ixs] : defs) {
                if (ixs.size() != 1) continue;
                if (pred.rfind("#g_", 0) == 0) continue;  // keep grounded copies
                const Rule& d = prog_.rules[ixs[0]];
                if (d.body.size() != 1 || !d.conditions.empty() || !d.skolems.empty() ||
                    d.aggregation || !d.existentials.empty())
                    continue;
                // Head must be variables only, no repeats, all bound in body.
                std::set<std::string> seen;
                bool ok = true;
                for (const auto& t : d.head[0].args) {
                    const auto* v = std::get_if<Variable>(&t);
                    if (!v || !seen.insert(v->name).second) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) continue;
                std::set<std::string> body_vars = d.body_variables();
                for (const auto& s : seen)
                    if (!body_vars.count(s)) ok = false;
                if (!ok) continue;
                if (d.body[0].pred == pred) continue;  // self-recursive
                if (prog_.outputs.count(pred)) continue;
                victim = pred;
                def_ix = ixs[0];
                break;
            }
            if (victim.empty()) return;

            Rule def = prog_.rules[def_ix];
            prog_.rules.erase(prog_.rules.begin() + def_ix);
            std::vector<int> touched;
            for (auto& r : prog_.rules) {
                bool hit = false;
                std::vector<Atom> new_body;
                for (const auto& a : r.body) {
                    if (a.pred != victim) {
                        new_body.push_back(a);
                        continue;
                    }
                    hit = true;
                    // def.head args are distinct variables; map them to the
                    // use-site terms, renaming leftover body vars fresh.
                    std::map<std::string, Term> m;
                    for (size_t i = 0; i < def.head[0].args.size(); ++i)
                        m[std::get<Variable>(def.head[0].args[i]).name] = a.args[i];
                    for (const auto& bv : def.body_variables())
                        if (!m.count(bv))
                            m[bv] = Variable{bv + "_i" + std::to_string(salt_)};
                    ++salt_;
                    new_body.push_back(subst_atom(def.body[0], m));
                }
                if (hit) {
                    r.body = std::move(new_body);
                    touched.push_back(r.id);
                    // Merge rederivation carriers through the inlined hop.
                    auto c = rule_carriers_.find(def.id);
                    if (c != rule_carriers_.end()) {
                        auto& mine = rule_carriers_[r.id];
                        mine.insert(mine.end(), c->second.begin(), c->second.end());
                    }
                }
            }
            trace_.add("inline", {def.id}, touched, victim);
        }
    }

    // Linear-rule rederivation search: can a chain fact re-derive the seed?
    bool rederives(const std::vector<Position>& starts, const std::string& goal_pred,
                   size_t goal_pos) const {
        std::set<Position> seen(starts.begin(), starts.end());
        std::vector<Position> queue(starts.begin(), starts.end());
        while (!queue.empty()) {
            Position cur = queue.back();
            queue.pop_back();
            if (cur.pred == goal_pred && cur.index == goal_pos) return true;
            for (const auto& r : prog_.rules) {
                if (r.body.size() != 1 || r.body[0].pred != cur.pred) continue;
                if (cur.index - 1 >= r.body[0].args.size()) continue;
                const auto* v = std::get_if<Variable>(&r.body[0].args[cur.index - 1]);
                if (!v) continue;
                for (const auto& h : r.head)
                    for (size_t i = 0; i < h.args.size(); ++i)
                        if (const auto* hv = std::get_if<Variable>(&h.args[i]))
                            if (hv->name == v->name) {
                                Position nxt{h.pred, i + 1};
                                if (seen.insert(nxt).second) queue.push_back(nxt);
                            }
            }
        }
        return false;
    }

    void origin_shift() {
        // Collect witness predicates and their defs.
        std::map<std::string, std::vector<size_t>> defs;
        for (size_t i = 0; i < prog_.rules.size(); ++i) {
            const std::string& hp = prog_.rules[i].head[0].pred;
            if (hp.rfind("#w_", 0) == 0) defs[hp].push_back(i);
        }
        for (const auto& [w, ixs] : defs) {
            // Classify defs into diagonal base and self-recursive steps.
            int base_ix = -1;
            std::vector<size_t> step_ixs;
            bool ok = true;
            for (size_t ix : ixs) {
                const Rule& d = prog_.rules[ix];
                bool recursive = false;
                for (const auto& a : d.body) recursive |= a.pred == w;
                if (recursive)
                    step_ixs.push_back(ix);
                else if (base_ix < 0)
                    base_ix = int(ix);
                else
                    ok = false;  // multiple bases: keep origin-carrying form
            }
            if (!ok || base_ix < 0 || step_ixs.empty()) continue;

            const Rule& base = prog_.rules[base_ix];
            // Diagonal base: W(K,K) <- seed(,K,) with a single body atom.
            if (base.head[0].args.size() != 2 || base.body.size() != 1 ||
                !base.conditions.empty() || !base.existentials.empty() ||
                !base.skolems.empty())
                continue;
            const auto* k0 = std::get_if<Variable>(&base.head[0].args[0]);
            const auto* k1 = std::get_if<Variable>(&base.head[0].args[1]);
            if (!k0 || !k1 || k0->name != k1->name) continue;
            const Atom seed = base.body[0];
            // The key variable's position in the seed atom.
            std::optional<size_t> seed_pos;
            for (size_t i = 0; i < seed.args.size(); ++i)
                if (const auto* v = std::get_if<Variable>(&seed.args[i]))
                    if (v->name == k0->name) seed_pos = i;
            if (!seed_pos) continue;

            // Steps: W(K,V) <- W(K,U), Δ(U,V); K only in the witness atoms.
            bool steps_ok = true;
            for (size_t ix : step_ixs) {
                const Rule& st = prog_.rules[ix];
                if (st.head[0].args.size() != 2 || !st.conditions.empty() ||
                    !st.existentials.empty() || !st.skolems.empty() || st.aggregation) {
                    steps_ok = false;
                    break;
                }
                size_t wcount = 0;
                for (const auto& a : st.body) wcount += a.pred == w;
                if (wcount != 1) {
                    steps_ok = false;
                    break;
                }
                const auto* kk = std::get_if<Variable>(&st.head[0].args[0]);
                if (!kk) {
                    steps_ok = false;
                    break;
                }
                for (const auto& a : st.body) {
                    if (a.pred == w) {
                        const auto* ak = std::get_if<Variable>(&a.args[0]);
                        if (!ak || ak->name != kk->name) steps_ok = false;
                    } else {
                        for (const auto& t : a.args)
                            if (const auto* v = std::get_if<Variable>(&t))
                                if (v->name == kk->name) steps_ok = false;
                    }
                }
                // Rederivation: the chain can rebuild the seed at the new node.
                auto c = rule_carriers_.find(st.id);
                if (c == rule_carriers_.end() ||
                    !rederives(c->second, seed.pred, *seed_pos + 1)) {
                    steps_ok = false;
                    break;
                }
            }
            if (!steps_ok) continue;

            // Rewrite the block: drop the diagonal base; shift each step.
            // Before: W(K,V) <- W(K,U), Δ(U,..,V).
            // After:  W(K,V) <- seed(K@pos), Δ(K,..,V)          (base')
            //         W(K,V) <- seed(K@pos), Δ(K,..,Z), W(Z,V)  (step')
            std::vector<int> in_ids{base.id}, out_ids;
            std::vector<Rule> new_rules;
            for (size_t ix : step_ixs) {
                const Rule& st = prog_.rules[ix];
                in_ids.push_back(st.id);
                const std::string kvar =
                    std::get<Variable>(st.head[0].args[0]).name;
                const auto* vv = std::get_if<Variable>(&st.head[0].args[1]);
                std::string uvar;
                for (const auto& a : st.body)
                    if (a.pred == w) uvar = std::get<Variable>(a.args[1]).name;

                Atom seed_at;
                seed_at.pred = seed.pred;
                for (size_t i = 0; i < seed.args.size(); ++i)
                    seed_at.args.push_back(i == *seed_pos ? Term{Variable{kvar}}
                                                          : seed.args[i]);

                Rule b2;
                b2.id = next_id_++;
                b2.body.push_back(seed_at);
                for (const auto& a : st.body)
                    if (a.pred != w)
                        b2.body.push_back(subst_atom(a, {{uvar, Variable{kvar}}}));
                b2.head = st.head;
                out_ids.push_back(b2.id);
                new_rules.push_back(std::move(b2));

                if (!vv) continue;  // constant payload: base' already covers it
                Rule s2;
                s2.id = next_id_++;
                std::string zvar = "Z_r" + std::to_string(salt_++);
                s2.body.push_back(seed_at);
                for (const auto& a : st.body)
                    if (a.pred != w)
                        s2.body.push_back(subst_atom(a, {{uvar, Variable{kvar}},
                                                         {vv->name, Variable{zvar}}}));
                Atom wrec;
                wrec.pred = w;
                wrec.args = {Variable{zvar}, st.head[0].args[1]};
                s2.body.push_back(wrec);
                s2.head = st.head;
                out_ids.push_back(s2.id);
                new_rules.push_back(std::move(s2));
            }

            // Expand uses of W for the lost diagonal member.
            std::vector<Rule> expanded;
            std::vector<size_t> drop;
            for (size_t i = 0; i < prog_.rules.size(); ++i) {
                const Rule& r = prog_.rules[i];
                bool is_def = int(i) == base_ix ||
                              std::find(step_ixs.begin(), step_ixs.end(), i) != step_ixs.end();
                if (is_def) {
                    drop.push_back(i);
                    continue;
                }
                std::vector<size_t> uses;
                for (size_t b = 0; b < r.body.size(); ++b)
                    if (r.body[b].pred == w) uses.push_back(b);
                if (uses.empty()) continue;
                drop.push_back(i);
                in_ids.push_back(r.id);
                // Each use atom is either the diagonal member (payload = key,
                // seed holds) or a proper chain member.
                size_t combos = size_t(1) << uses.size();
                for (size_t mask = 0; mask < combos; ++mask) {
                    Rule v = r;
                    v.id = next_id_++;
                    std::map<std::string, Term> unify_map;
                    std::vector<Atom> body2;
                    bool keeps_w = false;
                    std::vector<Term> diag_keys;
                    for (size_t b = 0; b < v.body.size(); ++b) {
                        bool diag = false;
                        for (size_t uix = 0; uix < uses.size(); ++uix)
                            if (uses[uix] == b && (mask >> uix) & 1) diag = true;
                        if (v.body[b].pred != w) {
                            body2.push_back(v.body[b]);
                        } else if (!diag) {
                            keeps_w = true;
                            body2.push_back(v.body[b]);
                        } else {
                            const Atom& a = v.body[b];
                            // payload := key
                            if (const auto* pv = std::get_if<Variable>(&a.args[1]))
                                unify_map[pv->name] = a.args[0];
                            else if (const auto* kv = std::get_if<Variable>(&a.args[0]))
                                unify_map[kv->name] = a.args[1];
                            diag_keys.push_back(a.args[0]);
                        }
                    }
                    v.body = body2;
                    for (auto& a : v.body) a = subst_atom(a, unify_map);
                    for (auto& c : v.conditions) {
                        c.lhs = subst_expr(c.lhs, unify_map);
                        c.rhs = subst_expr(c.rhs, unify_map);
                    }
                    for (auto& a : v.head) a = subst_atom(a, unify_map);
                    // Seed atoms witness the diagonal members, unless a kept
                    // chain atom with the same key already implies the seed.
                    (void)keeps_w;
                    std::set<std::string> added;
                    for (auto& kt : diag_keys) {
                        Term key = subst_term(kt, unify_map);
                        bool implied = false;
                        for (const auto& a : v.body)
                            if (a.pred == w && to_string(a.args[0]) == to_string(key))
                                implied = true;
                        if (implied) continue;
                        Atom sa;
                        sa.pred = seed.pred;
                        for (size_t si = 0; si < seed.args.size(); ++si)
                            sa.args.push_back(si == *seed_pos ? key : seed.args[si]);
                        if (added.insert(to_string(sa)).second) v.body.push_back(sa);
                    }
                    // Drop exact duplicate atoms.
                    std::vector<Atom> dedup;
                    std::set<std::string> seen_atoms;
                    for (auto& a : v.body)
                        if (seen_atoms.insert(to_string(a)).second) dedup.push_back(a);
                    v.body = std::move(dedup);
                    out_ids.push_back(v.id);
                    expanded.push_back(std::move(v));
                }
            }

            std::sort(drop.begin(), drop.end(), std::greater<size_t>());
            for (size_t ix : drop) prog_.rules.erase(prog_.rules.begin() + ix);
            for (auto& r : new_rules) prog_.rules.push_back(std::move(r));
            for (auto& r : expanded) prog_.rules.push_back(std::move(r));
            trace_.add("origin-shift", in_ids, out_ids, w);
            // Only one block per pass; rerun for the rest.
            origin_shift();
            return;
        }
    }

    void drop_unused() {
        for (;;) {
            std::set<std::string> used;
            for (const auto& r : prog_.rules)
                for (const auto& a : r.body) used.insert(a.pred);
            for (const auto& o : prog_.outputs) used.insert(o);
            size_t before = prog_.rules.size();
            prog_.rules.erase(
                std::remove_if(prog_.rules.begin(), prog_.rules.end(),
                               [&](const Rule& r) {
                                   const std::string& hp = r.head[0].pred;
                                   return is_internal(hp) && !used.count(hp);
                               }),
                prog_.rules.end());
            if (prog_.rules.size() == before) return;
        }
    }

    void dedup_rules() {
        std::set<std::string> seen;
        std::vector<Rule> dedup;
        for (auto& r : prog_.rules)
            if (seen.insert(canon_sig(r)).second) dedup.push_back(std::move(r));
        prog_.rules = std::move(dedup);
    }

    Program prog_;
    RewriteTrace trace_;
    int next_id_ = 1;
    int salt_ = 1;
    std::map<WitKey, WitInfo> wits_;
    std::set<std::string> ground_defined_;
    std::map<int, std::vector<Position>> rule_carriers_;
};

}  // namespace

RewriteResult eliminate_harmful_joins(const Program& program) {
    return Eliminator(program).run();
}

RewriteResult rewrite_program(const Program& program) {
    RewriteTrace trace;
    Program p = normalize(program, &trace);
    p = confine_existentials(p, &trace);
    RewriteResult res = eliminate_harmful_joins(p);
    // Prepend the normalization steps.
    RewriteTrace merged = std::move(trace);
    for (auto& s : res.trace.steps) merged.steps.push_back(std::move(s));
    res.trace = std::move(merged);
    return res;
}

}  // namespace warden
