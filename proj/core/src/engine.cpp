#include "warden/engine.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <deque>
#include <sstream>

#include "json.hpp"
#include "warden/rewrite.hpp"

namespace warden {

// ---------------------------------------------------------------------------
// Compilation

namespace {

std::vector<std::vector<Condition>> place_conditions(const Rule& r,
                                                     const std::vector<size_t>& order,
                                                     std::vector<Condition>& post) {
    // A condition runs at the first stage where all its variables are bound;
    // conditions over aggregate or skolem targets run after the head values
    // are computed.
    std::vector<std::vector<Condition>> at(order.size());
    std::set<std::string> late;
    if (r.aggregation) late.insert(r.aggregation->target);
    for (const auto& [tv, sk] : r.skolems) late.insert(tv);

    for (const auto& c : r.conditions) {
        std::set<std::string> vars;
        collect_variables(c.lhs, vars);
        collect_variables(c.rhs, vars);
        bool is_late = false;
        for (const auto& v : vars)
            if (late.count(v)) is_late = true;
        if (is_late) {
            post.push_back(c);
            continue;
        }
        std::set<std::string> bound;
        bool placed = false;
        for (size_t i = 0; i < order.size() && !placed; ++i) {
            for (const auto& t : r.body[order[i]].args)
                if (const auto* v = std::get_if<Variable>(&t)) bound.insert(v->name);
            bool all = true;
            for (const auto& v : vars)
                if (!bound.count(v)) all = false;
            if (all) {
                at[i].push_back(c);
                placed = true;
            }
        }
        if (!placed) post.push_back(c);  // e.g. constant-only conditions
    }
    return at;
}

FilterChain make_chain(const Rule& r, const RuleReport& rr,
                       const std::vector<size_t>& order) {
    FilterChain c;
    c.rule_id = r.id;
    c.kind = rr.kind;
    if (r.aggregation) {
        // Aggregate emissions are ground and order-sensitive; they root new
        // warded trees and deduplicate by value.
        c.gen_kind = GenKind::NonLinear;
    } else {
        switch (rr.kind) {
            case RuleKind::Linear: c.gen_kind = GenKind::Linear; break;
            case RuleKind::WardedJoin: c.gen_kind = GenKind::Warded; break;
            default: c.gen_kind = GenKind::NonLinear; break;
        }
    }
    c.atom_order = order;
    c.ward_atom = rr.ward;
    c.conditions_at = place_conditions(r, order, c.post_conditions);
    return c;
}

}  // namespace

Pipeline compile(const Program& program) {
    Pipeline p;
    p.program = program;
    p.report = check_warded(program);

    if (!p.report.warded()) {
        std::string why;
        for (const auto& v : p.report.violations) why += v + "; ";
        throw NotHarmlessWarded("not warded: " + why);
    }
    if (!p.report.harmless_warded())
        throw NotHarmlessWarded("harmful joins present; run the rewrite first");
    for (const auto& r : program.rules)
        if (!r.existentials.empty() && !r.is_linear())
            throw NotHarmlessWarded("existential quantification in non-linear rule " +
                                    std::to_string(r.id) + "; run the rewrite first");

    std::set<std::string> derived = program.head_predicates();
    for (const auto& r : program.rules) {
        std::vector<size_t> order(r.body.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        p.chains.push_back(make_chain(r, p.report.per_rule.at(r.id), order));
        for (const auto& a : r.body)
            if (!derived.count(a.pred)) p.scans.insert(a.pred);
    }
    DependencyGraph g = dependency_graph(program);
    for (const auto& [from, tos] : g.edges)
        for (int to : tos) p.pipes.emplace_back(from, to);
    p.sinks = program.outputs;
    return p;
}

Pipeline optimize(const Pipeline& pipeline, const Database& database) {
    Pipeline p = pipeline;
    p.optimized = true;
    std::set<std::string> derived = p.program.head_predicates();
    DependencyGraph g = dependency_graph(p.program);

    std::map<int, const Rule*> rules;
    for (const auto& r : p.program.rules) rules[r.id] = &r;

    for (auto& c : p.chains) {
        const Rule& r = *rules.at(c.rule_id);
        // Rank: EDB atoms by ascending fact count, then derived non-recursive,
        // then recursive inputs last; stable on the original order.
        auto rank = [&](size_t ix) -> std::tuple<int, int64_t, size_t> {
            const Atom& a = r.body[ix];
            if (!derived.count(a.pred)) {
                auto it = database.find(a.pred);
                int64_t n = it == database.end() ? 0 : int64_t(it->second.size());
                return {0, n, ix};
            }
            bool recursive = false;
            for (const auto& [from, tos] : g.edges) {
                const Rule* fr = rules.count(from) ? rules.at(from) : nullptr;
                if (!fr) continue;
                if (!fr->head.empty() && fr->head[0].pred == a.pred &&
                    g.recursive_rules.count(from))
                    recursive = true;
            }
            return {recursive ? 2 : 1, 0, ix};
        };
        std::sort(c.atom_order.begin(), c.atom_order.end(),
                  [&](size_t x, size_t y) { return rank(x) < rank(y); });
        c.post_conditions.clear();
        c.conditions_at = place_conditions(r, c.atom_order, c.post_conditions);
    }
    return p;
}

std::string Pipeline::describe() const {
    std::ostringstream os;
    std::map<int, const Rule*> rules;
    for (const auto& r : program.rules) rules[r.id] = &r;
    for (const auto& c : chains) {
        const Rule& r = *rules.at(c.rule_id);
        os << "rule " << c.rule_id << " [" << to_string(c.kind) << "/"
           << to_string(c.gen_kind) << "]: ";
        for (size_t i = 0; i < c.atom_order.size(); ++i) {
            if (i) os << " join ";
            os << to_string(r.body[c.atom_order[i]]);
            for (const auto& cond : c.conditions_at[i])
                os << " where " << to_string(cond.lhs) << to_string(cond.op)
                   << to_string(cond.rhs);
        }
        os << " -> " << to_string(r.head[0]) << "\n";
    }
    for (const auto& [a, b] : pipes) os << "pipe " << a << " -> " << b << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Dynamic index and standalone slot join

DynamicIndex::DynamicIndex(const std::vector<Fact>* rows,
                           std::vector<size_t> key_positions)
    : rows_(rows), key_positions_(std::move(key_positions)) {}

const std::vector<int32_t>& DynamicIndex::probe(const std::vector<GroundTerm>& key) {
    ++probes;
    // Index miss while incomplete: scan the unindexed suffix, extending the
    // index as we go.
    while (watermark_ < rows_->size()) {
        const Fact& f = (*rows_)[watermark_];
        std::vector<GroundTerm> k;
        k.reserve(key_positions_.size());
        for (size_t p : key_positions_) k.push_back(f.args[p]);
        index_[std::move(k)].push_back(int32_t(watermark_));
        ++watermark_;
        ++scans;
    }
    auto it = index_.find(key);
    return it == index_.end() ? empty_ : it->second;
}

std::vector<std::pair<int32_t, int32_t>> slot_join(
    const std::vector<Fact>& left, const std::vector<Fact>& right,
    const std::vector<size_t>& left_keys, const std::vector<size_t>& right_keys) {
    DynamicIndex index(&right, right_keys);
    std::vector<std::pair<int32_t, int32_t>> out;
    for (size_t i = 0; i < left.size(); ++i) {
        std::vector<GroundTerm> key;
        key.reserve(left_keys.size());
        for (size_t p : left_keys) key.push_back(left[i].args[p]);
        for (int32_t r : index.probe(key)) out.emplace_back(int32_t(i), r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

struct Candidate {
    Fact fact;
    int32_t parent = -1;  // linear parent or ward parent record id
};

class Execution;

// Incremental hash index over a hub's record rows.
struct HubIndex {
    std::vector<size_t> positions;
    std::map<std::vector<GroundTerm>, std::vector<int32_t>> cells;
    size_t watermark = 0;
};

struct Hub {
    std::string pred;
    std::vector<int32_t> rows;          // record ids in admission order
    std::vector<int> producers;         // chain indices
    size_t rr = 0;
    bool in_flight = false;
    std::map<std::vector<size_t>, HubIndex> indexes;

    Signal pull_new(Execution& ex);
};

struct ChainState {
    const FilterChain* chain = nullptr;
    const Rule* rule = nullptr;
    std::vector<size_t> cursors;        // per body atom, delta consumption
    size_t rr = 0;
    std::deque<Candidate> pending;
    bool in_flight = false;
    // Aggregation state.
    std::map<std::vector<GroundTerm>, std::map<std::vector<GroundTerm>, Value>> agg;
    std::set<std::vector<GroundTerm>> agg_seen;
    std::vector<int64_t> slot_polls;

    Signal next(Execution& ex);
    void expand(Execution& ex, size_t slot, int32_t row);
    void finish_binding(Execution& ex, const Substitution& sub,
                        const std::vector<int32_t>& premises);
};

class Execution {
public:
    Execution(const Pipeline& p, const Database& db, const EngineConfig& cfg)
        : pipeline_(p), config_(cfg), skolems_(nulls_) {
        for (const auto& r : p.program.rules) rules_[r.id] = &r;

        if (cfg.trivial_strategy) {
            strategy_ = std::make_unique<TrivialStrategy>();
        } else {
            auto ws = std::make_unique<WardedStrategy>(collect_pinned(p.program));
            ws->resolve = [this](int32_t id) -> const FactRecord& {
                return records_[id];
            };
            ws->fact_resolver = [this](int32_t id) -> const Fact& {
                return records_[id].fact;
            };
            warded_ = ws.get();
            strategy_ = std::move(ws);
        }

        // One chain state per rule, textual order.
        chains_.resize(p.chains.size());
        for (size_t i = 0; i < p.chains.size(); ++i) {
            chains_[i].chain = &p.chains[i];
            chains_[i].rule = rules_.at(p.chains[i].rule_id);
            chains_[i].cursors.assign(chains_[i].rule->body.size(), 0);
            chains_[i].slot_polls.assign(chains_[i].rule->body.size(), 0);
        }

        // Hubs for every predicate mentioned.
        for (const auto& [pred, arity] : p.program.predicates()) (void)arity, hub(pred);
        hub(kDomPredicate);
        for (size_t i = 0; i < p.chains.size(); ++i) {
            const Rule* r = chains_[i].rule;
            hub(r->head[0].pred).producers.push_back(int(i));
        }

        load_edb(db);
    }

    RunResult run() {
        auto t0 = std::chrono::steady_clock::now();
        std::map<std::string, std::vector<Fact>> outputs;
        std::map<std::string, std::set<Fact>> seen_out;
        std::map<std::string, size_t> sink_cursors;
        for (const auto& out : pipeline_.program.outputs) outputs[out];

        bool quiesced = false;
        while (!quiesced) {
            ++stats_.rounds;
            int64_t before = strategy_->stats.facts_admitted;
            bool any_ready = false;
            for (const auto& out : pipeline_.program.outputs) {
                Hub& h = hub(out);
                for (;;) {
                    Signal s = consume(h, sink_cursors[out]);
                    ++stats_.filter_pulls["sink:" + out];
                    if (s == Signal::FactReady) {
                        const Fact& f = records_[h.rows[sink_cursors[out] - 1]].fact;
                        if (seen_out[out].insert(f).second) outputs[out].push_back(f);
                        any_ready = true;
                        protocol_.emplace_back("sink:" + out, Signal::FactReady);
                        continue;
                    }
                    protocol_.emplace_back("sink:" + out, s);
                    break;
                }
            }
            if (!any_ready && strategy_->stats.facts_admitted == before) quiesced = true;
        }
        // After global quiescence every further pull is a permanent real miss.
        for (const auto& out : pipeline_.program.outputs)
            protocol_.emplace_back("sink:" + out, Signal::RealMiss);

        auto t1 = std::chrono::steady_clock::now();
        RunResult res;
        res.outputs = std::move(outputs);
        res.stats = stats_;
        res.stats.chase = strategy_->stats;
        res.stats.wall_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
        for (auto& [pred, rows] : res.outputs)
            res.stats.output_counts[pred] = int64_t(rows.size());
        for (size_t i = 0; i < chains_.size(); ++i)
            for (size_t j = 0; j < chains_[i].slot_polls.size(); ++j)
                res.stats.filter_pulls["rule:" + std::to_string(chains_[i].chain->rule_id) +
                                       ":slot" + std::to_string(j)] =
                    chains_[i].slot_polls[j];
        if (config_.collect_records) res.records = std::move(records_);
        res.pinned_constants = collect_pinned(pipeline_.program);
        res.protocol = std::move(protocol_);
        res.aggregate_emissions = std::move(agg_emissions_);
        res.decisions = std::move(decisions_);
        return res;
    }

    // Consumes one row from a hub on behalf of a consumer cursor.
    Signal consume(Hub& h, size_t& cursor) {
        for (;;) {
            if (cursor < h.rows.size()) {
                ++cursor;
                return Signal::FactReady;
            }
            Signal s = h.pull_new(*this);
            if (s == Signal::FactReady) continue;
            return s;
        }
    }

    Hub& hub(const std::string& pred) {
        auto it = hubs_.find(pred);
        if (it != hubs_.end()) return it->second;
        Hub& h = hubs_[pred];
        h.pred = pred;
        return h;
    }

    // Probes a hub's dynamic index; builds/extends it on demand.
    const std::vector<int32_t>& probe(Hub& h, const std::vector<size_t>& positions,
                                      const std::vector<GroundTerm>& key) {
        HubIndex& ix = h.indexes[positions];
        ix.positions = positions;
        while (ix.watermark < h.rows.size()) {
            const Fact& f = records_[h.rows[ix.watermark]].fact;
            std::vector<GroundTerm> k;
            k.reserve(positions.size());
            for (size_t p : positions) k.push_back(f.args[p]);
            ix.cells[std::move(k)].push_back(h.rows[ix.watermark]);
            ++ix.watermark;
        }
        auto it = ix.cells.find(key);
        return it == ix.cells.end() ? empty_rows_ : it->second;
    }

    int32_t new_record(Fact f, GenKind kind, int32_t parent, int rule_id) {
        FactRecord rec;
        rec.fact = std::move(f);
        rec.kind = kind;
        rec.id = int32_t(records_.size());
        rec.parent = parent;
        switch (kind) {
            case GenKind::Linear: {
                const FactRecord& p = records_[parent];
                rec.l_root = p.l_root;
                rec.w_root = p.w_root;
                rec.provenance = p.provenance;
                rec.provenance.push_back(rule_id);
                break;
            }
            case GenKind::Warded: {
                const FactRecord& p = records_[parent];
                rec.w_root = p.w_root;
                rec.l_root = rec.id;
                break;
            }
            default:
                rec.l_root = rec.id;
                rec.w_root = rec.id;
                break;
        }
        records_.push_back(std::move(rec));
        return int32_t(records_.size()) - 1;
    }

    void pop_record() { records_.pop_back(); }

    bool admit(int32_t rec_id) {
        bool ok = strategy_->check_termination(records_[rec_id]);
        if (config_.record_decisions) {
            const FactRecord& r = records_[rec_id];
            decisions_.push_back(
                Decision{r.fact, r.kind, r.w_root, ok, strategy_->last_via_prefix});
        }
        if (ok && config_.fact_cap && strategy_->stats.facts_admitted >
                                          int64_t(config_.fact_cap))
            throw CapExceeded(config_.fact_cap);
        return ok;
    }

    static std::set<Value> collect_pinned(const Program& prog) {
        std::set<Value> out;
        std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& e) {
            if (!e) return;
            if (e->kind == Expr::Kind::Leaf) {
                if (const auto* v = std::get_if<Value>(&e->leaf)) out.insert(*v);
                return;
            }
            walk(e->lhs);
            walk(e->rhs);
        };
        for (const auto& r : prog.rules) {
            for (const auto& a : r.body)
                for (const auto& t : a.args)
                    if (const auto* v = std::get_if<Value>(&t)) out.insert(*v);
            for (const auto& a : r.head)
                for (const auto& t : a.args)
                    if (const auto* v = std::get_if<Value>(&t)) out.insert(*v);
            for (const auto& c : r.conditions) {
                walk(c.lhs);
                walk(c.rhs);
            }
        }
        return out;
    }

    void load_edb(const Database& db) {
        for (const auto& in : pipeline_.program.inputs)
            if (!db.count(in) && !pipeline_.program.bindings.count(in))
                throw UnboundInputPredicate(in);

        std::set<Fact> seen;
        std::set<Value> domain;
        for (const auto& [pred, facts] : db) {
            Hub& h = hub(pred);
            for (const Fact& f : facts) {
                if (!seen.insert(f).second) continue;
                int32_t id = new_record(f, GenKind::Root, -1, 0);
                strategy_->register_root(records_[id]);
                h.rows.push_back(id);
                for (const auto& t : f.args)
                    if (const auto* v = std::get_if<Value>(&t)) domain.insert(*v);
            }
        }
        // The Dom guard admits any constant of the task: EDB active domain
        // plus the program's literal constants.
        bool dom_used = false;
        for (const auto& r : pipeline_.program.rules)
            for (const auto& a : r.body)
                if (a.pred == kDomPredicate) dom_used = true;
        if (dom_used) {
            for (const auto& v : collect_pinned(pipeline_.program)) domain.insert(v);
            Hub& h = hub(kDomPredicate);
            for (const auto& v : domain) {
                Fact f;
                f.pred = kDomPredicate;
                f.args.emplace_back(v);
                int32_t id = new_record(f, GenKind::Root, -1, 0);
                strategy_->register_root(records_[id]);
                h.rows.push_back(id);
            }
        }
    }

    const Pipeline& pipeline_;
    EngineConfig config_;
    std::map<int, const Rule*> rules_;
    std::map<std::string, Hub> hubs_;
    std::vector<ChainState> chains_;
    std::vector<FactRecord> records_;
    std::unique_ptr<TerminationStrategy> strategy_;
    WardedStrategy* warded_ = nullptr;
    NullFactory nulls_;
    SkolemTable skolems_;
    EngineStats stats_;
    std::vector<std::pair<std::string, Signal>> protocol_;
    std::vector<Fact> agg_emissions_;
    std::vector<Decision> decisions_;
    std::vector<int32_t> empty_rows_;
};

Signal Hub::pull_new(Execution& ex) {
    if (in_flight) return Signal::CyclicMiss;
    if (producers.empty()) return Signal::RealMiss;
    in_flight = true;
    bool any_cyclic = false;
    size_t n = producers.size();
    for (size_t i = 0; i < n; ++i) {
        ChainState& c = ex.chains_[producers[rr % n]];
        rr = (rr + 1) % n;
        ++ex.stats_.filter_pulls["rule:" + std::to_string(c.chain->rule_id)];
        Signal s = c.next(ex);
        if (s == Signal::FactReady) {
            in_flight = false;
            return Signal::FactReady;
        }
        if (s == Signal::CyclicMiss) any_cyclic = true;
    }
    in_flight = false;
    return any_cyclic ? Signal::CyclicMiss : Signal::RealMiss;
}

void ChainState::finish_binding(Execution& ex, const Substitution& sub,
                                const std::vector<int32_t>& premises) {
    const Rule& r = *rule;
    Substitution full = sub;

    if (r.aggregation) {
        const auto& g = *r.aggregation;
        std::vector<GroundTerm> group_key;
        for (const auto& hv : r.head_variables())
            if (hv != g.target)
                if (const auto* gt = full.find(hv)) {
                    if (std::holds_alternative<LabeledNull>(*gt))
                        throw std::runtime_error("labeled null in aggregation group key");
                    group_key.push_back(*gt);
                }
        std::vector<GroundTerm> contrib;
        for (const auto& cv : g.contributors) {
            const auto* gt = full.find(cv);
            if (!gt) throw std::runtime_error("unbound contributor " + cv);
            if (std::holds_alternative<LabeledNull>(*gt))
                throw std::runtime_error("labeled null in aggregation contributor");
            contrib.push_back(*gt);
        }
        const auto* av = full.find(g.arg);
        if (!av || !std::holds_alternative<Value>(*av))
            throw std::runtime_error("bad aggregation argument " + g.arg);

        // Each distinct body binding contributes exactly once.
        std::vector<GroundTerm> binding_key = group_key;
        binding_key.insert(binding_key.end(), contrib.begin(), contrib.end());
        binding_key.push_back(*av);
        if (g.contributors.empty())
            for (const auto& [v, t] : sub.map) binding_key.push_back(t);
        if (!agg_seen.insert(binding_key).second) return;
        full.map[g.target] =
            aggregate_update(g.func, agg[group_key], contrib, std::get<Value>(*av));
    }
    for (const auto& [var, sk] : r.skolems) {
        std::vector<GroundTerm> args;
        for (const auto& an : sk.args) {
            const auto* gt = full.find(an);
            if (!gt) throw std::runtime_error("unbound skolem argument " + an);
            args.push_back(*gt);
        }
        full.map[var] = ex.skolems_.eval(sk.func, args);
    }
    if (!eval_conditions(chain->post_conditions, full)) return;

    int32_t parent = -1;
    if (chain->gen_kind == GenKind::Linear) {
        parent = premises.empty() ? -1 : premises[0];
    } else if (chain->gen_kind == GenKind::Warded) {
        // The premise bound to the ward atom.
        size_t ward = chain->ward_atom.value();
        for (size_t i = 0; i < chain->atom_order.size(); ++i)
            if (chain->atom_order[i] == ward) parent = premises[i];
    }
    for (Fact& f : apply(r, full, ex.nulls_)) {
        if (r.aggregation) ex.agg_emissions_.push_back(f);
        pending.push_back(Candidate{std::move(f), parent});
    }
}

void ChainState::expand(Execution& ex, size_t slot, int32_t row) {
    const Rule& r = *rule;
    const Atom& atom = r.body[slot];
    const Fact& f = ex.records_[row].fact;
    if (f.args.size() != atom.args.size()) return;
    Substitution sub;
    auto s0 = unify(atom, f, sub);
    if (!s0) return;

    // Conditions at the delta atom's stage apply if it is first in order.
    std::vector<int32_t> premises;
    // Premises must line up with atom_order for ward lookup; walk in order.
    std::function<void(size_t, Substitution&)> walk = [&](size_t depth,
                                                          Substitution& s) {
        if (depth == chain->atom_order.size()) {
            finish_binding(ex, s, premises);
            return;
        }
        size_t atom_ix = chain->atom_order[depth];
        if (atom_ix == slot) {
            premises.push_back(row);
            if (!eval_conditions(chain->conditions_at[depth], s)) {
                premises.pop_back();
                return;
            }
            walk(depth + 1, s);
            premises.pop_back();
            return;
        }
        const Atom& a = r.body[atom_ix];
        Hub& h = ex.hub(a.pred);
        std::vector<size_t> keypos;
        std::vector<GroundTerm> key;
        for (size_t i = 0; i < a.args.size(); ++i) {
            if (const auto* c = std::get_if<Value>(&a.args[i])) {
                keypos.push_back(i);
                key.push_back(*c);
            } else if (const auto* v = std::get_if<Variable>(&a.args[i])) {
                if (const GroundTerm* b = s.find(v->name)) {
                    keypos.push_back(i);
                    key.push_back(*b);
                }
            } else {
                keypos.push_back(i);
                key.push_back(std::get<LabeledNull>(a.args[i]));
            }
        }
        const std::vector<int32_t>& rows2 = ex.probe(h, keypos, key);
        for (int32_t rid : rows2) {
            const Fact& g = ex.records_[rid].fact;
            if (g.args.size() != a.args.size()) continue;
            auto s2 = unify(a, g, s);
            if (!s2) continue;
            if (!eval_conditions(chain->conditions_at[depth], *s2)) continue;
            premises.push_back(rid);
            walk(depth + 1, *s2);
            premises.pop_back();
        }
    };
    walk(0, *s0);
}

Signal ChainState::next(Execution& ex) {
    if (in_flight) return Signal::CyclicMiss;
    in_flight = true;
    const Rule& r = *rule;
    size_t nslots = r.body.size();

    for (;;) {
        // Admit pending candidates first.
        while (!pending.empty()) {
            Candidate c = std::move(pending.front());
            pending.pop_front();
            int32_t id = ex.new_record(std::move(c.fact), chain->gen_kind, c.parent,
                                       r.id);
            if (ex.admit(id)) {
                ex.hub(r.head[0].pred).rows.push_back(id);
                in_flight = false;
                return Signal::FactReady;
            }
            ex.pop_record();
        }
        // Drain delta rows already buffered in the hubs.
        bool expanded = false;
        for (size_t s = 0; s < nslots && !expanded; ++s) {
            Hub& h = ex.hub(r.body[s].pred);
            while (cursors[s] < h.rows.size()) {
                int32_t row = h.rows[cursors[s]++];
                expand(ex, s, row);
                if (!pending.empty()) {
                    expanded = true;
                    break;
                }
            }
        }
        if (expanded) continue;

        // All cursors caught up: poll predecessors round-robin.
        bool any_new = false, any_cyclic = false;
        for (size_t i = 0; i < nslots; ++i) {
            size_t s = rr % nslots;
            rr = (rr + 1) % nslots;
            ++slot_polls[s];
            Hub& h = ex.hub(r.body[s].pred);
            Signal sig = h.pull_new(ex);
            if (sig == Signal::FactReady) {
                any_new = true;
                break;
            }
            if (sig == Signal::CyclicMiss) any_cyclic = true;
        }
        if (any_new) continue;
        in_flight = false;
        return any_cyclic ? Signal::CyclicMiss : Signal::RealMiss;
    }
}

}  // namespace

std::string EngineStats::to_json() const {
    nlohmann::json j;
    j["facts_generated"] = chase.facts_generated;
    j["facts_admitted"] = chase.facts_admitted;
    j["facts_rejected"] = chase.facts_rejected;
    j["iso_checks"] = chase.iso_checks;
    j["prefix_rejects"] = chase.prefix_rejects;
    j["prefix_admits"] = chase.prefix_admits;
    j["rounds"] = rounds;
    j["wall_ms"] = wall_ms;
    j["outputs"] = output_counts;
    j["filter_pulls"] = filter_pulls;
    return j.dump(2);
}

RunResult run(const Pipeline& pipeline, const Database& database,
              const EngineConfig& config) {
    Execution ex(pipeline, database, config);
    return ex.run();
}

}  // namespace warden
