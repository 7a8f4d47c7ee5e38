#include "warden/chase.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>

namespace warden {

// ---------------------------------------------------------------------------
// Isomorphism and patterns

bool isomorphic(const Fact& a, const Fact& b) {
    if (a.pred != b.pred || a.args.size() != b.args.size()) return false;
    std::map<int64_t, int64_t> fwd, bwd;
    for (size_t i = 0; i < a.args.size(); ++i) {
        const auto* an = std::get_if<LabeledNull>(&a.args[i]);
        const auto* bn = std::get_if<LabeledNull>(&b.args[i]);
        if ((an == nullptr) != (bn == nullptr)) return false;
        if (an) {
            auto [f, fi] = fwd.emplace(an->id, bn->id);
            if (!fi && f->second != bn->id) return false;
            auto [g, gi] = bwd.emplace(bn->id, an->id);
            if (!gi && g->second != an->id) return false;
        } else {
            if (!(std::get<Value>(a.args[i]) == std::get<Value>(b.args[i])))
                return false;
        }
    }
    return true;
}

Fact iso_canonical(const Fact& f) {
    Fact c;
    c.pred = f.pred;
    c.args.reserve(f.args.size());
    std::map<int64_t, int64_t> renum;
    for (const auto& t : f.args) {
        if (const auto* n = std::get_if<LabeledNull>(&t)) {
            auto [it, ins] = renum.emplace(n->id, int64_t(renum.size()) + 1);
            (void)ins;
            c.args.emplace_back(LabeledNull{it->second});
        } else {
            c.args.push_back(t);
        }
    }
    return c;
}

namespace {

void mix(size_t& h, size_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
}

size_t value_hash(const Value& v) {
    size_t h = v.index();
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Date>)
                mix(h, std::hash<int64_t>{}((int64_t(x.year) << 16) ^ (x.month << 8) ^
                                            x.day));
            else
                mix(h, std::hash<T>{}(x));
        },
        v);
    return h;
}

}  // namespace

size_t iso_hash(const Fact& f) {
    size_t h = std::hash<std::string>{}(f.pred);
    std::map<int64_t, int64_t> renum;
    for (const auto& t : f.args) {
        if (const auto* n = std::get_if<LabeledNull>(&t)) {
            auto [it, ins] = renum.emplace(n->id, int64_t(renum.size()) + 1);
            (void)ins;
            mix(h, std::hash<int64_t>{}(~it->second));
        } else {
            mix(h, value_hash(std::get<Value>(t)));
        }
    }
    return h;
}

Pattern pattern(const Fact& f) {
    std::string s = f.pred + "(";
    std::map<std::string, int> consts;
    std::map<int64_t, int> nulls;
    for (size_t i = 0; i < f.args.size(); ++i) {
        if (i) s += ",";
        if (const auto* n = std::get_if<LabeledNull>(&f.args[i])) {
            auto [it, ins] = nulls.emplace(n->id, int(nulls.size()) + 1);
            (void)ins;
            s += "N" + std::to_string(it->second);
        } else {
            // Type-tagged so int 1 and string "1" stay distinct.
            const Value& v = std::get<Value>(f.args[i]);
            std::string key = std::to_string(v.index()) + ":" + to_string(v);
            auto [it, ins] = consts.emplace(key, int(consts.size()) + 1);
            (void)ins;
            s += "C" + std::to_string(it->second);
        }
    }
    return Pattern{s + ")"};
}

std::string pattern_key(const Fact& f, const std::set<Value>& pinned) {
    std::string s = f.pred + "(";
    std::map<std::string, int> consts;
    std::map<int64_t, int> nulls;
    for (size_t i = 0; i < f.args.size(); ++i) {
        if (i) s += ",";
        if (const auto* n = std::get_if<LabeledNull>(&f.args[i])) {
            auto [it, ins] = nulls.emplace(n->id, int(nulls.size()) + 1);
            (void)ins;
            s += "N" + std::to_string(it->second);
        } else {
            const Value& v = std::get<Value>(f.args[i]);
            if (pinned.count(v)) {
                s += "=" + std::to_string(v.index()) + ":" + to_string(v);
            } else {
                std::string key = std::to_string(v.index()) + ":" + to_string(v);
                auto [it, ins] = consts.emplace(key, int(consts.size()) + 1);
                (void)ins;
                s += "C" + std::to_string(it->second);
            }
        }
    }
    return s + ")";
}

std::string to_string(GenKind k) {
    switch (k) {
        case GenKind::Linear: return "linear";
        case GenKind::Warded: return "warded";
        case GenKind::NonLinear: return "nonlinear";
        case GenKind::Root: return "root";
    }
    return "?";
}

bool provenance_prefix(const std::vector<int>& shorter, const std::vector<int>& longer) {
    if (shorter.size() > longer.size()) return false;
    return std::equal(shorter.begin(), shorter.end(), longer.begin());
}

// ---------------------------------------------------------------------------
// Ground structure

int32_t GroundStructure::find_isomorphic(int32_t w_root, const Fact& f,
                                         const Resolver& resolve,
                                         ChaseStats& stats) const {
    auto it = buckets_.find(w_root);
    if (it == buckets_.end()) return -1;
    auto cell = it->second.rows_by_hash.find(iso_hash(f));
    if (cell == it->second.rows_by_hash.end()) return -1;
    for (int32_t rec : cell->second) {
        ++stats.iso_checks;
        if (isomorphic(f, resolve(rec))) return rec;
    }
    return -1;
}

void GroundStructure::append(int32_t w_root, int32_t rec, const Fact& f) {
    Bucket& b = buckets_[w_root];
    b.rows.push_back(rec);
    b.rows_by_hash[iso_hash(f)].push_back(rec);
}

bool GroundStructure::contains_exact(const Fact& f) const { return exact_.count(f) > 0; }

void GroundStructure::index_exact(const Fact& f) { exact_.insert(f); }

const std::vector<int32_t>* GroundStructure::bucket(int32_t w_root) const {
    auto it = buckets_.find(w_root);
    return it == buckets_.end() ? nullptr : &it->second.rows;
}

// ---------------------------------------------------------------------------
// Summary structure

void SummaryStructure::insert(const std::string& root_pattern,
                              const std::vector<int>& prov) {
    auto& set = entries_[root_pattern];
    for (auto it = set.begin(); it != set.end();) {
        if (provenance_prefix(*it, prov) || provenance_prefix(prov, *it))
            it = set.erase(it);
        else
            ++it;
    }
    set.push_back(prov);
}

const std::vector<std::vector<int>>* SummaryStructure::find(
    const std::string& root_pattern) const {
    auto it = entries_.find(root_pattern);
    return it == entries_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Warded strategy (the termination wrapper core)

bool WardedStrategy::check_termination(const FactRecord& rec) {
    ++stats.facts_generated;
    last_via_prefix = false;
    if (rec.kind == GenKind::Linear || rec.kind == GenKind::Warded) {
        // Warded-generated facts are their own linear roots with empty
        // provenance; the prefix tests are vacuous for them by design.
        if (!rec.provenance.empty()) {
            const FactRecord& root = resolve(rec.l_root);
            if (const auto* provs = summary_.find(pattern_key(root.fact, pinned_))) {
                for (const auto& stop : *provs) {
                    if (provenance_prefix(stop, rec.provenance)) {
                        ++stats.prefix_rejects;
                        ++stats.facts_rejected;
                        last_via_prefix = true;
                        return false;  // beyond a stop provenance
                    }
                }
                for (const auto& stop : *provs) {
                    if (rec.provenance.size() < stop.size() &&
                        provenance_prefix(rec.provenance, stop)) {
                        ++stats.prefix_admits;
                        ++stats.facts_admitted;
                        last_via_prefix = true;
                        return true;  // within a stop provenance, no check
                    }
                }
            }
        }
        int32_t hit = ground_.find_isomorphic(rec.w_root, rec.fact, fact_resolver, stats);
        if (hit >= 0) {
            if (!rec.provenance.empty()) {
                const FactRecord& root = resolve(rec.l_root);
                summary_.insert(pattern_key(root.fact, pinned_), rec.provenance);
            }
            ++stats.facts_rejected;
            return false;  // isomorphism found
        }
        ground_.append(rec.w_root, rec.id, rec.fact);
        ground_.index_exact(rec.fact);
        ++stats.facts_admitted;
        return true;
    }

    // Non-linear generating rules root new warded trees; membership over the
    // stored facts suffices since their outputs carry no fresh nulls.
    ++stats.iso_checks;
    if (ground_.contains_exact(rec.fact)) {
        ++stats.facts_rejected;
        return false;  // the new tree is redundant
    }
    ground_.append(rec.w_root, rec.id, rec.fact);
    ground_.index_exact(rec.fact);
    ++stats.facts_admitted;
    return true;
}

void WardedStrategy::register_root(const FactRecord& rec) {
    ground_.append(rec.w_root, rec.id, rec.fact);
    ground_.index_exact(rec.fact);
}

// ---------------------------------------------------------------------------
// Trivial strategy (§ "trivial technique": exhaustive store, pure iso check)

bool TrivialStrategy::check_termination(const FactRecord& rec) {
    ++stats.facts_generated;
    auto& rows = store_[rec.fact.pred];
    for (const Fact& g : rows) {
        ++stats.iso_checks;
        if (isomorphic(rec.fact, g)) {
            ++stats.facts_rejected;
            return false;
        }
    }
    rows.push_back(rec.fact);
    ++stats.facts_admitted;
    return true;
}

void TrivialStrategy::register_root(const FactRecord& rec) {
    store_[rec.fact.pred].push_back(rec.fact);
}

// ---------------------------------------------------------------------------
// Skolems

LabeledNull SkolemTable::eval(const std::string& func,
                              const std::vector<GroundTerm>& args) {
    Fact key;
    key.args = args;
    auto it = memo_.find({func, key});
    if (it != memo_.end()) return it->second;
    LabeledNull n = nulls_->fresh();
    memo_.emplace(std::make_pair(func, key), n);
    return n;
}

// ---------------------------------------------------------------------------
// Naive oracle chase

namespace {

struct OracleStore {
    std::vector<Fact> facts;
    std::unordered_map<Fact, int32_t, FactHash> exact;
    std::unordered_set<Fact, FactHash> iso_seen;  // canonical forms
    std::map<std::string, std::vector<int32_t>> by_pred;

    bool known(const Fact& f, ChaseMode mode) const {
        if (mode == ChaseMode::Full) return exact.count(f) > 0;
        return iso_seen.count(iso_canonical(f)) > 0;
    }
    int32_t add(const Fact& f) {
        int32_t id = int32_t(facts.size());
        facts.push_back(f);
        exact.emplace(f, id);
        iso_seen.insert(iso_canonical(f));
        by_pred[f.pred].push_back(id);
        return id;
    }
};

struct AggState {
    // group key -> (contributor key -> extremal contribution)
    std::map<std::vector<GroundTerm>, std::map<std::vector<GroundTerm>, Value>> slots;
    std::set<std::vector<GroundTerm>> seen_bindings;
};

double num_of(const Value& v) {
    if (const auto* i = std::get_if<int64_t>(&v)) return double(*i);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    throw std::runtime_error("aggregation over non-numeric value");
}

}  // namespace

// Shared by the oracle and the streaming aggregate filter: folds one
// contribution into the group state and returns the updated aggregate.
Value aggregate_update(AggFunc func,
                       std::map<std::vector<GroundTerm>, Value>& group,
                       const std::vector<GroundTerm>& contributor,
                       const Value& contribution) {
    auto it = group.find(contributor);
    if (it == group.end()) {
        group.emplace(contributor, contribution);
    } else {
        // Keep the extremal contribution per contributor tuple: max for the
        // increasing functions, min for mmin.
        double old_v = num_of(it->second), new_v = num_of(contribution);
        if (func == AggFunc::MMin ? new_v < old_v : new_v > old_v)
            it->second = contribution;
    }
    switch (func) {
        case AggFunc::MCount:
            return Value{int64_t(group.size())};
        case AggFunc::MSum: {
            bool all_int = true;
            double sum = 0;
            for (const auto& [c, v] : group) {
                sum += num_of(v);
                all_int &= std::holds_alternative<int64_t>(v);
            }
            if (all_int) return Value{int64_t(std::llround(sum))};
            return Value{sum};
        }
        case AggFunc::MMax: {
            const Value* best = nullptr;
            for (const auto& [c, v] : group)
                if (!best || num_of(v) > num_of(*best)) best = &v;
            return *best;
        }
        case AggFunc::MMin: {
            const Value* best = nullptr;
            for (const auto& [c, v] : group)
                if (!best || num_of(v) < num_of(*best)) best = &v;
            return *best;
        }
    }
    return Value{int64_t(0)};
}

NaiveChaseResult naive_chase(const ReasoningTask& task, size_t cap, ChaseMode mode,
                             bool throw_on_cap) {
    const Program& prog = task.program;
    NaiveChaseResult res;
    OracleStore store;
    NullFactory nulls;
    SkolemTable skolems(nulls);
    std::map<int, AggState> agg_states;
    WardednessReport report = check_warded(prog);

    auto make_record = [&](int32_t id, const Fact& f, const Rule* rule,
                           const std::vector<int32_t>& premises) {
        FactRecord rec;
        rec.fact = f;
        rec.id = id;
        if (!rule) {
            rec.kind = GenKind::Root;
            rec.l_root = rec.w_root = id;
            res.records.push_back(std::move(rec));
            return;
        }
        const RuleReport& rr = report.per_rule.at(rule->id);
        GenKind kind;
        if (rule->aggregation) {
            kind = GenKind::NonLinear;
        } else {
            switch (rr.kind) {
                case RuleKind::Linear: kind = GenKind::Linear; break;
                case RuleKind::WardedJoin: kind = GenKind::Warded; break;
                default: kind = GenKind::NonLinear; break;
            }
        }
        rec.kind = kind;
        if (kind == GenKind::Linear && !premises.empty()) {
            rec.parent = premises[0];
            rec.l_root = res.records[rec.parent].l_root;
            rec.w_root = res.records[rec.parent].w_root;
            rec.provenance = res.records[rec.parent].provenance;
            rec.provenance.push_back(rule->id);
        } else if (kind == GenKind::Warded && rr.ward &&
                   *rr.ward < premises.size()) {
            rec.parent = premises[*rr.ward];
            rec.l_root = id;
            rec.w_root = res.records[rec.parent].w_root;
        } else {
            rec.l_root = rec.w_root = id;
        }
        res.records.push_back(std::move(rec));
    };

    for (const auto& [pred, facts] : task.database)
        for (const auto& f : facts)
            if (!store.known(f, ChaseMode::Full)) {
                int32_t id = store.add(f);
                make_record(id, f, nullptr, {});
            }

    // Conditions usable before aggregation: those not mentioning the target.
    auto splits = [&](const Rule& r) {
        std::pair<std::vector<Condition>, std::vector<Condition>> out;
        for (const auto& c : r.conditions) {
            std::set<std::string> vars;
            collect_variables(c.lhs, vars);
            collect_variables(c.rhs, vars);
            bool post = false;
            if (r.aggregation && vars.count(r.aggregation->target)) post = true;
            for (const auto& [sv, sk] : r.skolems)
                if (vars.count(sv)) post = true;
            (post ? out.second : out.first).push_back(c);
        }
        return out;
    };

    size_t frontier_begin = 0;
    bool first_round = true;
    while (true) {
        size_t frontier_end = store.facts.size();
        if (!first_round && frontier_begin == frontier_end) break;

        std::vector<std::tuple<Fact, std::vector<int32_t>, int>> pending;

        for (const Rule& rule : prog.rules) {
            auto [pre_conds, post_conds] = splits(rule);
            size_t natoms = rule.body.size();
            // One pass per delta slot; older slots range over pre-frontier
            // facts to avoid re-deriving the same joins.
            for (size_t slot = 0; slot < natoms; ++slot) {
                std::vector<int32_t> chosen(natoms, -1);
                std::function<void(size_t, Substitution)> descend =
                    [&](size_t k, Substitution sub) {
                        if (k == natoms) {
                            ++res.candidates;
                            if (!eval_conditions(pre_conds, sub)) return;
                            Substitution full = sub;
                            if (rule.aggregation) {
                                const auto& g = *rule.aggregation;
                                AggState& st = agg_states[rule.id];
                                std::vector<GroundTerm> group_key;
                                for (const auto& hv : rule.head_variables())
                                    if (hv != g.target)
                                        if (const auto* gt = full.find(hv))
                                            group_key.push_back(*gt);
                                std::vector<GroundTerm> contrib;
                                for (const auto& cv : g.contributors) {
                                    const auto* gt = full.find(cv);
                                    if (!gt) throw std::runtime_error("unbound contributor");
                                    if (std::holds_alternative<LabeledNull>(*gt))
                                        throw std::runtime_error(
                                            "labeled null in aggregation contributor");
                                    contrib.push_back(*gt);
                                }
                                for (const auto& gk : group_key)
                                    if (std::holds_alternative<LabeledNull>(gk))
                                        throw std::runtime_error(
                                            "labeled null in aggregation group key");
                                const auto* av = full.find(g.arg);
                                if (!av || !std::holds_alternative<Value>(*av))
                                    throw std::runtime_error("bad aggregation argument");
                                // Each distinct body binding contributes once.
                                std::vector<GroundTerm> binding_key = group_key;
                                binding_key.insert(binding_key.end(), contrib.begin(),
                                                   contrib.end());
                                binding_key.push_back(*av);
                                if (g.contributors.empty()) {
                                    for (const auto& [v, t] : sub.map)
                                        binding_key.push_back(t);
                                }
                                if (!st.seen_bindings.insert(binding_key).second) return;
                                Value updated = aggregate_update(
                                    g.func, st.slots[group_key], contrib,
                                    std::get<Value>(*av));
                                full.map[g.target] = updated;
                            }
                            for (const auto& [var, sk] : rule.skolems) {
                                std::vector<GroundTerm> args;
                                for (const auto& an : sk.args) {
                                    const auto* gt = full.find(an);
                                    if (!gt) throw std::runtime_error("unbound skolem arg");
                                    args.push_back(*gt);
                                }
                                full.map[var] = skolems.eval(sk.func, args);
                            }
                            if (!eval_conditions(post_conds, full)) return;
                            for (Fact& f : apply(rule, full, nulls)) {
                                std::vector<int32_t> premises;
                                for (int32_t c : chosen)
                                    if (c >= 0) premises.push_back(c);
                                pending.emplace_back(std::move(f), premises, rule.id);
                            }
                            return;
                        }
                        const Atom& atom = rule.body[k];
                        auto it = store.by_pred.find(atom.pred);
                        if (it == store.by_pred.end()) return;
                        const auto& rows = it->second;
                        size_t lo = 0, hi = rows.size();
                        // Slot discipline: the slot atom ranges over the
                        // frontier, earlier atoms over pre-frontier facts.
                        for (size_t ri = lo; ri < hi; ++ri) {
                            int32_t fid = rows[ri];
                            bool in_frontier =
                                fid >= int32_t(frontier_begin) && fid < int32_t(frontier_end);
                            if (first_round) {
                                if (k == slot && !in_frontier) continue;
                            } else {
                                if (k == slot && !in_frontier) continue;
                                if (k < slot && in_frontier) continue;
                            }
                            if (fid >= int32_t(frontier_end)) continue;
                            const Fact& f = store.facts[fid];
                            if (f.args.size() != atom.args.size()) continue;
                            auto sub2 = unify(atom, f, sub);
                            if (!sub2) continue;
                            chosen[k] = fid;
                            descend(k + 1, *sub2);
                            chosen[k] = -1;
                        }
                    };
                descend(0, Substitution{});
                if (first_round) break;  // one pass suffices when all is new
            }
        }

        frontier_begin = frontier_end;
        first_round = false;

        auto edge_flavors = [&](const Rule& rule) {
            std::vector<EdgeFlavor> flavors(rule.body.size(), EdgeFlavor::Other);
            const RuleReport& rr = report.per_rule.at(rule.id);
            if (rule.is_linear() && !rule.aggregation) {
                flavors[0] = EdgeFlavor::Linear;
            } else if (rr.kind == RuleKind::WardedJoin && rr.ward && !rule.aggregation) {
                flavors[*rr.ward] = EdgeFlavor::Ward;
            }
            return flavors;
        };
        std::set<std::tuple<int32_t, int32_t, int>> edge_seen;
        for (const auto& e : res.edges) edge_seen.insert({e.from, e.to, e.rule});
        for (auto& [f, premises, rid] : pending) {
            const Rule* rule = nullptr;
            for (const Rule& r : prog.rules)
                if (r.id == rid) rule = &r;
            int32_t id = -1;
            if (store.known(f, mode)) {
                // In full mode the fact exists as a node; keep the extra
                // derivation edges so the chase graph is complete.
                if (mode != ChaseMode::Full) continue;
                auto it = store.exact.find(f);
                if (it == store.exact.end()) continue;
                id = it->second;
            } else {
                if (store.facts.size() >= cap) {
                    res.capped = true;
                    if (throw_on_cap) throw CapExceeded(cap);
                    break;
                }
                id = store.add(f);
                make_record(id, f, rule, premises);
            }
            auto flavors = edge_flavors(*rule);
            for (size_t k = 0; k < premises.size(); ++k) {
                if (edge_seen.insert({premises[k], id, rid}).second)
                    res.edges.push_back(
                        {premises[k], id, rid,
                         k < flavors.size() ? flavors[k] : EdgeFlavor::Other});
            }
        }
        if (res.capped) break;
    }

    res.facts = store.facts;
    for (const auto& out : prog.outputs) {
        auto it = store.by_pred.find(out);
        std::vector<Fact> rows;
        if (it != store.by_pred.end())
            for (int32_t id : it->second) rows.push_back(store.facts[id]);
        res.outputs[out] = std::move(rows);
    }
    return res;
}

std::vector<Fact> NaiveChaseResult::output_union() const {
    std::vector<Fact> all;
    for (const auto& [pred, rows] : outputs)
        all.insert(all.end(), rows.begin(), rows.end());
    return all;
}

// ---------------------------------------------------------------------------
// Forest snapshot

ForestSnapshot forest_snapshot(const std::vector<FactRecord>& records,
                               const std::set<Value>& pinned_constants) {
    ForestSnapshot s;
    s.records.reserve(records.size());
    for (const auto& r : records) s.records.push_back(&r);

    for (const auto& r : records) {
        if (r.parent < 0) continue;
        if (r.kind == GenKind::Linear)
            s.linear_edges.emplace_back(r.parent, r.id);
        else if (r.kind == GenKind::Warded)
            s.ward_edges.emplace_back(r.parent, r.id);
    }

    // Lifted linear forest: collapse by (root pattern, provenance).
    std::map<std::pair<std::string, std::vector<int>>, size_t> node_ix;
    for (const auto& r : records) {
        if (r.l_root < 0) continue;
        const FactRecord& root = records[r.l_root];
        auto key = std::make_pair(pattern_key(root.fact, pinned_constants),
                                  r.provenance);
        auto it = node_ix.find(key);
        if (it == node_ix.end()) {
            ForestSnapshot::LiftedNode n;
            n.root_pattern = key.first;
            n.provenance = key.second;
            n.member_pattern = pattern(r.fact);
            n.members.push_back(r.id);
            node_ix.emplace(key, s.lifted_nodes.size());
            s.lifted_nodes.push_back(std::move(n));
        } else {
            auto& n = s.lifted_nodes[it->second];
            n.members.push_back(r.id);
            if (!(pattern(r.fact) == n.member_pattern)) n.uniform = false;
        }
    }
    for (const auto& [key, ix] : node_ix) {
        if (key.second.empty()) continue;
        auto parent_key = key;
        parent_key.second.pop_back();
        auto it = node_ix.find(parent_key);
        if (it != node_ix.end()) s.lifted_edges.emplace_back(it->second, ix);
    }
    return s;
}

namespace {

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

}  // namespace

std::string ForestSnapshot::warded_dot() const {
    std::ostringstream os;
    os << "digraph warded_forest {\n  node [shape=box,fontsize=10];\n";
    // Cluster per warded tree.
    std::map<int32_t, std::vector<const FactRecord*>> trees;
    for (const auto* r : records) trees[r->w_root].push_back(r);
    size_t ci = 0;
    for (const auto& [root, members] : trees) {
        os << "  subgraph cluster_" << ci++ << " {\n    style=dotted;\n";
        for (const auto* r : members)
            os << "    n" << r->id << " [label=\"" << dot_escape(to_string(r->fact))
               << "\"];\n";
        os << "  }\n";
    }
    for (const auto& [a, b] : linear_edges) os << "  n" << a << " -> n" << b << ";\n";
    for (const auto& [a, b] : ward_edges)
        os << "  n" << a << " -> n" << b << " [style=dashed];\n";
    os << "}\n";
    return os.str();
}

std::string ForestSnapshot::lifted_dot() const {
    std::ostringstream os;
    os << "digraph lifted_linear_forest {\n  node [shape=box,fontsize=10];\n";
    for (size_t i = 0; i < lifted_nodes.size(); ++i) {
        const auto& n = lifted_nodes[i];
        os << "  p" << i << " [label=\"" << dot_escape(n.member_pattern.repr)
           << "\\nx" << n.members.size() << "\"];\n";
    }
    for (const auto& [a, b] : lifted_edges) os << "  p" << a << " -> p" << b << ";\n";
    os << "}\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Answer comparison up to null homomorphism

namespace {

struct HomProblem {
    const std::vector<Fact>* B;
    std::map<std::string, std::vector<const Fact*>> b_by_pred;
    std::unordered_set<Fact, FactHash> b_exact;
};

bool match_fact(const Fact& a, const Fact& b, std::map<int64_t, GroundTerm>& binding) {
    if (a.pred != b.pred || a.args.size() != b.args.size()) return false;
    std::vector<std::pair<int64_t, GroundTerm>> added;
    for (size_t i = 0; i < a.args.size(); ++i) {
        if (const auto* n = std::get_if<LabeledNull>(&a.args[i])) {
            auto it = binding.find(n->id);
            if (it != binding.end()) {
                if (!(it->second == b.args[i])) {
                    for (auto& [k, v] : added) binding.erase(k);
                    return false;
                }
            } else {
                binding.emplace(n->id, b.args[i]);
                added.emplace_back(n->id, b.args[i]);
            }
        } else if (!(a.args[i] == b.args[i])) {
            for (auto& [k, v] : added) binding.erase(k);
            return false;
        }
    }
    return true;
}

bool embed(const std::vector<const Fact*>& group, size_t k, const HomProblem& hp,
           std::map<int64_t, GroundTerm>& binding) {
    if (k == group.size()) return true;
    const Fact& a = *group[k];
    auto it = hp.b_by_pred.find(a.pred);
    if (it == hp.b_by_pred.end()) return false;
    for (const Fact* b : it->second) {
        std::map<int64_t, GroundTerm> saved = binding;
        if (match_fact(a, *b, binding)) {
            if (embed(group, k + 1, hp, binding)) return true;
        }
        binding = std::move(saved);
    }
    return false;
}

}  // namespace

bool hom_subsumed(const std::vector<Fact>& A, const std::vector<Fact>& B) {
    HomProblem hp;
    hp.B = &B;
    for (const auto& b : B) {
        hp.b_by_pred[b.pred].push_back(&b);
        hp.b_exact.insert(b);
    }

    // Ground facts need exact matches; null facts get grouped by connected
    // nulls and embedded per group.
    std::map<int64_t, int64_t> uf;  // union-find over null ids
    std::function<int64_t(int64_t)> find = [&](int64_t x) {
        auto it = uf.find(x);
        if (it == uf.end() || it->second == x) return x;
        return it->second = find(it->second);
    };
    auto unite = [&](int64_t a, int64_t b) {
        a = find(a);
        b = find(b);
        if (a != b) uf[a] = b;
    };

    std::vector<const Fact*> nullfacts;
    for (const auto& a : A) {
        std::vector<int64_t> ns;
        for (const auto& t : a.args)
            if (const auto* n = std::get_if<LabeledNull>(&t)) ns.push_back(n->id);
        if (ns.empty()) {
            if (!hp.b_exact.count(a)) return false;
            continue;
        }
        nullfacts.push_back(&a);
        uf.emplace(ns[0], ns[0]);
        for (size_t i = 1; i < ns.size(); ++i) {
            uf.emplace(ns[i], ns[i]);
            unite(ns[0], ns[i]);
        }
    }

    std::map<int64_t, std::vector<const Fact*>> groups;
    for (const Fact* a : nullfacts) {
        int64_t rep = -1;
        for (const auto& t : a->args)
            if (const auto* n = std::get_if<LabeledNull>(&t)) {
                rep = find(n->id);
                break;
            }
        groups[rep].push_back(a);
    }
    // Facts in different groups share no nulls only if groups were computed
    // transitively; facts can bridge groups, so merge via fixpoint.
    // (unite above already links all nulls within one fact; transitivity is
    // handled by union-find.)
    for (auto& [rep, group] : groups) {
        std::map<int64_t, GroundTerm> binding;
        if (!embed(group, 0, hp, binding)) return false;
    }
    return true;
}

bool hom_equivalent(const std::vector<Fact>& A, const std::vector<Fact>& B) {
    return hom_subsumed(A, B) && hom_subsumed(B, A);
}

bool answers_match(const std::vector<Fact>& A, const std::vector<Fact>& B) {
    std::set<Fact> ga, gb;
    std::vector<Fact> na, nb;
    auto split = [](const std::vector<Fact>& xs, std::set<Fact>& ground,
                    std::vector<Fact>& with_nulls) {
        for (const auto& f : xs) {
            bool has_null = false;
            for (const auto& t : f.args)
                if (std::holds_alternative<LabeledNull>(t)) has_null = true;
            if (has_null)
                with_nulls.push_back(f);
            else
                ground.insert(f);
        }
    };
    split(A, ga, na);
    split(B, gb, nb);
    if (ga != gb) return false;
    std::vector<Fact> b_all(B.begin(), B.end()), a_all(A.begin(), A.end());
    for (const auto& f : na)
        if (!hom_subsumed({f}, b_all)) return false;
    for (const auto& f : nb)
        if (!hom_subsumed({f}, a_all)) return false;
    return true;
}

}  // namespace warden
