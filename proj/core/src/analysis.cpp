#include "warden/analysis.hpp"

#include <algorithm>
#include <functional>

#include "json.hpp"

namespace warden {

std::string to_string(const Position& p) {
    return p.pred + "[" + std::to_string(p.index) + "]";
}

std::string to_string(VarClass c) {
    switch (c) {
        case VarClass::Harmless: return "harmless";
        case VarClass::Harmful: return "harmful";
        case VarClass::Dangerous: return "dangerous";
    }
    return "?";
}

std::string to_string(RuleKind k) {
    switch (k) {
        case RuleKind::Linear: return "linear";
        case RuleKind::WardedJoin: return "warded-join";
        case RuleKind::HarmlessJoin: return "harmless-join";
        case RuleKind::HarmfulJoin: return "harmful-join";
    }
    return "?";
}

namespace {

// Positions of `var` in the given atoms.
std::vector<Position> occurrences(const std::vector<Atom>& atoms,
                                  const std::string& var) {
    std::vector<Position> out;
    for (const auto& a : atoms)
        for (size_t i = 0; i < a.args.size(); ++i)
            if (const auto* v = std::get_if<Variable>(&a.args[i]);
                v && v->name == var)
                out.push_back(Position{a.pred, i + 1});
    return out;
}

}  // namespace

std::set<Position> affected_positions(const Program& program) {
    std::set<Position> affected;
    // Base: positions of existentially quantified head variables.
    for (const auto& r : program.rules)
        for (const auto& h : r.head)
            for (size_t i = 0; i < h.args.size(); ++i)
                if (const auto* v = std::get_if<Variable>(&h.args[i]))
                    if (r.existentials.count(v->name) || r.skolems.count(v->name))
                        affected.insert(Position{h.pred, i + 1});

    // Induction: a head position of v is affected when every body occurrence
    // of v is affected. Worklist over the whole rule set until fixpoint.
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& r : program.rules) {
            for (const auto& v : r.body_variables()) {
                auto occ = occurrences(r.body, v);
                bool all_affected = !occ.empty();
                for (const auto& p : occ)
                    if (!affected.count(p)) {
                        all_affected = false;
                        break;
                    }
                if (!all_affected) continue;
                for (const auto& h : r.head)
                    for (size_t i = 0; i < h.args.size(); ++i)
                        if (const auto* hv = std::get_if<Variable>(&h.args[i]);
                            hv && hv->name == v)
                            changed |= affected.insert(Position{h.pred, i + 1}).second;
            }
        }
    }
    return affected;
}

std::map<std::string, VarClass> classify_variables(const Rule& rule,
                                                   const std::set<Position>& affected) {
    std::map<std::string, VarClass> out;
    std::set<std::string> head_vars = rule.head_variables();
    for (const auto& v : rule.body_variables()) {
        auto occ = occurrences(rule.body, v);
        bool any_nonaffected = false;
        for (const auto& p : occ)
            if (!affected.count(p)) {
                any_nonaffected = true;
                break;
            }
        if (any_nonaffected) {
            out[v] = VarClass::Harmless;
        } else if (head_vars.count(v)) {
            out[v] = VarClass::Dangerous;
        } else {
            out[v] = VarClass::Harmful;
        }
    }
    return out;
}

WardednessReport check_warded(const Program& program) {
    WardednessReport rep;
    rep.affected = affected_positions(program);

    bool warded = true;
    bool any_harmful_join = false;

    for (const auto& r : program.rules) {
        RuleReport rr;
        rr.variables = classify_variables(r, rep.affected);

        // Variables joined across body atoms while harmful.
        std::map<std::string, std::set<size_t>> harmful_atoms;
        for (const auto& [v, c] : rr.variables) {
            if (c == VarClass::Harmless) continue;
            std::set<size_t> atoms;
            for (size_t i = 0; i < r.body.size(); ++i)
                for (const auto& t : r.body[i].args)
                    if (const auto* var = std::get_if<Variable>(&t);
                        var && var->name == v)
                        atoms.insert(i);
            if (atoms.size() > 1) harmful_atoms[v] = std::move(atoms);
        }
        for (const auto& [v, atoms] : harmful_atoms)
            rr.harmful_joins.emplace_back(
                v, std::vector<size_t>(atoms.begin(), atoms.end()));

        std::set<std::string> dangerous;
        for (const auto& [v, c] : rr.variables)
            if (c == VarClass::Dangerous) dangerous.insert(v);

        if (!dangerous.empty()) {
            // Condition 1: all dangerous variables within a single atom; the
            // leftmost qualifying atom that also satisfies condition 2 wins.
            for (size_t i = 0; i < r.body.size() && !rr.ward; ++i) {
                bool contains_all = true;
                for (const auto& v : dangerous) {
                    bool in_atom = false;
                    for (const auto& t : r.body[i].args)
                        if (const auto* var = std::get_if<Variable>(&t);
                            var && var->name == v)
                            in_atom = true;
                    if (!in_atom) {
                        contains_all = false;
                        break;
                    }
                }
                if (!contains_all) continue;
                // No dangerous variable may occur outside this atom, and the
                // atom shares only harmless variables with the rest.
                bool ok = true;
                for (size_t j = 0; j < r.body.size() && ok; ++j) {
                    if (j == i) continue;
                    for (const auto& t : r.body[j].args) {
                        const auto* var = std::get_if<Variable>(&t);
                        if (!var) continue;
                        if (dangerous.count(var->name)) {
                            ok = false;
                            break;
                        }
                        bool in_ward = false;
                        for (const auto& wt : r.body[i].args)
                            if (const auto* wv = std::get_if<Variable>(&wt);
                                wv && wv->name == var->name)
                                in_ward = true;
                        if (in_ward && rr.variables.at(var->name) != VarClass::Harmless) {
                            ok = false;
                            break;
                        }
                    }
                }
                if (ok) rr.ward = i;
            }
            if (!rr.ward) {
                warded = false;
                rep.violations.push_back("rule " + std::to_string(r.id) +
                                         ": dangerous variables lack a ward");
            }
        }

        if (r.is_linear()) {
            rr.kind = RuleKind::Linear;
        } else if (!rr.harmful_joins.empty()) {
            rr.kind = RuleKind::HarmfulJoin;
            any_harmful_join = true;
        } else if (rr.ward && !dangerous.empty()) {
            rr.kind = RuleKind::WardedJoin;
        } else {
            rr.kind = RuleKind::HarmlessJoin;
        }

        rep.per_rule[r.id] = std::move(rr);
    }

    rep.verdict = !warded              ? Verdict::NotWarded
                  : any_harmful_join   ? Verdict::Warded
                                       : Verdict::HarmlessWarded;
    return rep;
}

std::string WardednessReport::to_json() const {
    nlohmann::json j;
    j["verdict"] = verdict == Verdict::NotWarded      ? "not_warded"
                   : verdict == Verdict::HarmlessWarded ? "harmless_warded"
                                                        : "warded";
    j["affected"] = nlohmann::json::array();
    for (const auto& p : affected) j["affected"].push_back(to_string(p));
    j["violations"] = violations;
    nlohmann::json rules = nlohmann::json::object();
    for (const auto& [id, rr] : per_rule) {
        nlohmann::json r;
        r["kind"] = to_string(rr.kind);
        if (rr.ward) r["ward_atom"] = *rr.ward;
        nlohmann::json vars = nlohmann::json::object();
        for (const auto& [v, c] : rr.variables) vars[v] = to_string(c);
        r["variables"] = vars;
        if (!rr.harmful_joins.empty()) {
            nlohmann::json hj = nlohmann::json::array();
            for (const auto& [v, atoms] : rr.harmful_joins) {
                nlohmann::json e;
                e["variable"] = v;
                e["atoms"] = atoms;
                hj.push_back(e);
            }
            r["harmful_joins"] = hj;
        }
        rules[std::to_string(id)] = r;
    }
    j["rules"] = rules;
    return j.dump(2);
}

DependencyGraph dependency_graph(const Program& program) {
    DependencyGraph g;
    std::map<std::string, std::vector<int>> consumers;  // body pred -> rule ids
    for (const auto& r : program.rules) {
        g.edges[r.id];  // ensure node
        for (const auto& b : r.body) consumers[b.pred].push_back(r.id);
    }
    for (const auto& producer : program.rules)
        for (const auto& h : producer.head)
            if (auto it = consumers.find(h.pred); it != consumers.end())
                for (int c : it->second) g.edges[producer.id].insert(c);

    // Tarjan SCC, iterative for safety on large generated programs.
    std::map<int, int> index, low;
    std::map<int, bool> on_stack;
    std::vector<int> stack;
    int counter = 0;

    std::function<void(int)> strongconnect = [&](int v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (int w : g.edges[v]) {
            if (!index.count(w)) {
                strongconnect(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::vector<int> comp;
            for (;;) {
                int w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp.push_back(w);
                if (w == v) break;
            }
            std::sort(comp.begin(), comp.end());
            g.sccs.push_back(std::move(comp));
        }
    };
    for (const auto& [v, _] : g.edges)
        if (!index.count(v)) strongconnect(v);

    for (const auto& comp : g.sccs) {
        if (comp.size() > 1) {
            for (int v : comp) g.recursive_rules.insert(v);
        } else if (g.edges.at(comp[0]).count(comp[0])) {
            g.recursive_rules.insert(comp[0]);
        }
    }
    return g;
}

}  // namespace warden
