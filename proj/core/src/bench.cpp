#include "warden/bench.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "warden/analysis.hpp"
#include "warden/parser.hpp"

namespace warden {

void ScenarioSpec::validate() const {
    auto nonneg = [](int v) { return v >= 0; };
    if (!nonneg(linear_rules) || !nonneg(join_rules) || !nonneg(recursive_linear) ||
        !nonneg(recursive_join) || !nonneg(existential_rules) ||
        !nonneg(harmless_harmful_joins) || !nonneg(harmless_with_ward) ||
        !nonneg(harmless_without_ward) || !nonneg(harmful_harmful_joins))
        throw InfeasibleSpec("negative count");
    if (harmless_harmful_joins + harmless_with_ward + harmless_without_ward +
            harmful_harmful_joins !=
        join_rules)
        throw InfeasibleSpec("join kind counts must sum to the join rule count");
    if (recursive_linear > linear_rules)
        throw InfeasibleSpec("more recursive linear rules than linear rules");
    if (recursive_join > join_rules)
        throw InfeasibleSpec("more recursive join rules than join rules");
    if (existential_rules >
        (linear_rules - recursive_linear) + join_rules)
        throw InfeasibleSpec("not enough rules to host the existential count");
    if (existential_rules == 0 &&
        (harmless_with_ward > 0 || harmful_harmful_joins > 0 ||
         harmless_harmful_joins > 0))
        throw InfeasibleSpec("joins involving harmful variables need null sources");
    if (facts_per_input <= 0 || constant_pool <= 1)
        throw InfeasibleSpec("need facts and a constant pool");
}

ScenarioSpec synth_profile(char id, int total_rules, uint64_t seed) {
    struct Row {
        int l, j, rl, rj, e, hh, hww, hwo, hf;
    };
    static const std::map<char, Row> table = {
        {'A', {90, 10, 27, 3, 20, 5, 4, 1, 0}},
        {'B', {10, 90, 3, 27, 20, 45, 40, 5, 0}},
        {'C', {30, 70, 9, 20, 40, 25, 20, 5, 20}},
        {'D', {30, 70, 9, 20, 22, 10, 9, 1, 50}},
        {'E', {30, 70, 15, 40, 20, 35, 29, 1, 5}},
        {'F', {30, 70, 25, 20, 50, 35, 29, 1, 5}},
        {'G', {30, 70, 9, 21, 30, 0, 10, 60, 0}},
        {'H', {30, 70, 9, 21, 30, 0, 60, 10, 0}},
    };
    auto it = table.find(id);
    if (it == table.end()) throw InfeasibleSpec("unknown profile");
    const Row& r = it->second;
    double f = double(total_rules) / 100.0;
    auto sc = [&](int v) { return int(std::lround(v * f)); };

    ScenarioSpec s;
    s.linear_rules = std::max(2, sc(r.l));
    s.join_rules = std::max(1, sc(r.j));
    s.recursive_linear = std::min(sc(r.rl), s.linear_rules - 1);
    s.harmless_harmful_joins = sc(r.hh);
    s.harmless_with_ward = sc(r.hww);
    s.harmless_without_ward = sc(r.hwo);
    s.harmful_harmful_joins = sc(r.hf);
    int sum = s.harmless_harmful_joins + s.harmless_with_ward +
              s.harmless_without_ward + s.harmful_harmful_joins;
    s.harmless_without_ward += s.join_rules - sum;
    while (s.harmless_without_ward < 0) {
        if (s.harmless_with_ward > 0) {
            --s.harmless_with_ward;
            ++s.harmless_without_ward;
        } else if (s.harmless_harmful_joins > 0) {
            --s.harmless_harmful_joins;
            ++s.harmless_without_ward;
        } else {
            --s.harmful_harmful_joins;
            ++s.harmless_without_ward;
        }
    }
    s.existential_rules =
        std::min(sc(r.e), (s.linear_rules - s.recursive_linear) + s.join_rules);
    s.existential_rules = std::max(
        s.existential_rules,
        (s.harmless_with_ward || s.harmful_harmful_joins || s.harmless_harmful_joins)
            ? 1
            : 0);
    s.recursive_join = std::min(sc(r.rj), s.join_rules);
    s.seed = seed;
    s.validate();
    return s;
}

namespace {

std::string cname(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "v%03d", i);
    return buf;
}

}  // namespace

ReasoningTask gen_warded(const ScenarioSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);

    ReasoningTask task;
    Program& prog = task.program;
    int next_rule = 1;

    const int n_src = std::max(2, (spec.linear_rules + spec.join_rules) / 8);
    std::vector<std::string> src;
    for (int i = 0; i < n_src; ++i) {
        std::string name = "src" + std::to_string(i);
        src.push_back(name);
        prog.inputs.insert(name);
        std::uniform_int_distribution<int> pick(0, spec.constant_pool - 1);
        std::set<std::pair<int, int>> seen;
        auto& rows = task.database[name];
        for (int f = 0; f < spec.facts_per_input; ++f) {
            std::pair<int, int> t{pick(rng), pick(rng)};
            if (!seen.insert(t).second) continue;
            Fact fact;
            fact.pred = name;
            fact.args = {Value{cname(t.first)}, Value{cname(t.second)}};
            rows.push_back(std::move(fact));
        }
    }

    // Derived predicates: "aff*" carry a null in position 1, "grd*" stay
    // ground everywhere.
    std::vector<std::string> aff_preds, grd_preds;
    auto fresh_aff = [&] {
        std::string p = "aff" + std::to_string(aff_preds.size());
        aff_preds.push_back(p);
        return p;
    };
    auto fresh_grd = [&] {
        std::string p = "grd" + std::to_string(grd_preds.size());
        grd_preds.push_back(p);
        return p;
    };
    auto pick_of = [&](const std::vector<std::string>& v) -> std::string {
        std::uniform_int_distribution<size_t> d(0, v.size() - 1);
        return v[d(rng)];
    };
    auto pick_ground = [&]() -> std::string {
        if (grd_preds.empty() || std::uniform_int_distribution<int>(0, 1)(rng) == 0)
            return pick_of(src);
        return pick_of(grd_preds);
    };
    auto add_rule = [&](Rule r) {
        r.id = next_rule++;
        prog.rules.push_back(std::move(r));
    };
    auto V = [](const std::string& n) { return Term{Variable{n}}; };

    // Existential placement: non-recursive linear rules first, join rules for
    // the remainder.
    int e_linear = std::min(spec.existential_rules,
                            spec.linear_rules - spec.recursive_linear);
    int e_join = spec.existential_rules - e_linear;

    // Linear rules with existentials: g(X,Y) -> aff(Z,X).
    for (int i = 0; i < e_linear; ++i) {
        Rule r;
        r.body.push_back(Atom{pick_ground(), {V("X"), V("Y")}});
        r.head.push_back(Atom{fresh_aff(), {V("Z"), V("X")}});
        r.existentials = {"Z"};
        add_rule(r);
    }
    // Plain linear rules: alternate null-chain extensions and ground copies.
    int plain_linear = spec.linear_rules - spec.recursive_linear - e_linear;
    for (int i = 0; i < plain_linear; ++i) {
        Rule r;
        if (!aff_preds.empty() && i % 2 == 0) {
            r.body.push_back(Atom{pick_of(aff_preds), {V("Z"), V("X")}});
            r.head.push_back(Atom{fresh_aff(), {V("Z"), V("X")}});
        } else {
            r.body.push_back(Atom{pick_ground(), {V("X"), V("Y")}});
            r.head.push_back(Atom{fresh_grd(), {V("Y"), V("X")}});
        }
        add_rule(r);
    }
    // Recursive linear rules: one cycle a0 -> a1 -> ... -> a0.
    if (spec.recursive_linear > 0) {
        std::vector<std::string> cycle;
        cycle.push_back(aff_preds.empty() ? (grd_preds.empty() ? src[0] : grd_preds[0])
                                          : aff_preds[0]);
        for (int i = 1; i < spec.recursive_linear; ++i) cycle.push_back(fresh_aff());
        for (int i = 0; i < spec.recursive_linear; ++i) {
            Rule r;
            const std::string& from = cycle[i];
            const std::string& to = cycle[(i + 1) % cycle.size()];
            r.body.push_back(Atom{from, {V("Z"), V("X")}});
            r.head.push_back(Atom{to, {V("Z"), V("X")}});
            add_rule(r);
        }
    }

    int rec_left = spec.recursive_join;

    // Warded joins: aff(Z,X), g(X,Y) -> aff'(Z,Y); recursion closes on aff.
    for (int i = 0; i < spec.harmless_with_ward; ++i) {
        std::string w = pick_of(aff_preds);
        Rule r;
        r.body.push_back(Atom{w, {V("Z"), V("X")}});
        r.body.push_back(Atom{pick_ground(), {V("X"), V("Y")}});
        bool rec = rec_left > 0;
        bool existential = !rec && e_join > 0;
        if (rec) {
            --rec_left;
            r.head.push_back(Atom{w, {V("Z"), V("Y")}});
        } else if (existential) {
            --e_join;
            r.head.push_back(Atom{fresh_aff(), {V("S"), V("Y"), V("Z")}});
            r.existentials = {"S"};
        } else {
            r.head.push_back(Atom{fresh_aff(), {V("Z"), V("Y")}});
        }
        add_rule(r);
    }
    // Harmless joins without ward: g1(X,Y), g2(Y,W) -> h(X,W).
    for (int i = 0; i < spec.harmless_without_ward; ++i) {
        Rule r;
        bool rec = rec_left > 0 && !grd_preds.empty();
        bool existential = !rec && e_join > 0;
        if (rec) {
            --rec_left;
            const std::string& h = grd_preds[size_t(i) % grd_preds.size()];
            r.body.push_back(Atom{h, {V("X"), V("Y")}});
            r.body.push_back(Atom{pick_ground(), {V("Y"), V("W")}});
            r.head.push_back(Atom{h, {V("X"), V("W")}});
        } else {
            r.body.push_back(Atom{pick_ground(), {V("X"), V("Y")}});
            r.body.push_back(Atom{pick_ground(), {V("Y"), V("W")}});
            if (existential) {
                --e_join;
                r.head.push_back(Atom{fresh_aff(), {V("Z"), V("X")}});
                r.existentials = {"Z"};
            } else {
                r.head.push_back(Atom{fresh_grd(), {V("X"), V("W")}});
            }
        }
        add_rule(r);
    }
    // Harmless joins with a harmful variable aside: aff(V,X), g(X,Y) -> h(Y,X).
    for (int i = 0; i < spec.harmless_harmful_joins; ++i) {
        Rule r;
        r.body.push_back(Atom{pick_of(aff_preds), {V("V"), V("X")}});
        bool rec = rec_left > 0 && !grd_preds.empty();
        bool existential = !rec && e_join > 0;
        if (rec) {
            --rec_left;
            const std::string& h = grd_preds[size_t(i) % grd_preds.size()];
            r.body.push_back(Atom{h, {V("X"), V("Y")}});
            r.head.push_back(Atom{h, {V("Y"), V("X")}});
        } else {
            r.body.push_back(Atom{pick_ground(), {V("X"), V("Y")}});
            if (existential) {
                --e_join;
                r.head.push_back(Atom{fresh_aff(), {V("Z"), V("Y")}});
                r.existentials = {"Z"};
            } else {
                r.head.push_back(Atom{fresh_grd(), {V("Y"), V("X")}});
            }
        }
        add_rule(r);
    }
    // Harmful joins: aff1(H,X), aff2(H,Y) -> h(X,Y).
    for (int i = 0; i < spec.harmful_harmful_joins; ++i) {
        Rule r;
        r.body.push_back(Atom{pick_of(aff_preds), {V("H"), V("X")}});
        r.body.push_back(Atom{pick_of(aff_preds), {V("H"), V("Y")}});
        bool existential = e_join > 0;
        if (existential) {
            --e_join;
            r.head.push_back(Atom{fresh_aff(), {V("Z"), V("X"), V("Y")}});
            r.existentials = {"Z"};
        } else {
            r.head.push_back(Atom{fresh_grd(), {V("X"), V("Y")}});
        }
        add_rule(r);
    }

    // Unconsumed heads become outputs so the pipeline exercises every rule.
    std::set<std::string> consumed;
    for (const auto& r : prog.rules)
        for (const auto& a : r.body) consumed.insert(a.pred);
    for (const auto& r : prog.rules)
        if (!consumed.count(r.head[0].pred)) prog.outputs.insert(r.head[0].pred);
    if (prog.outputs.empty() && !prog.rules.empty())
        prog.outputs.insert(prog.rules.back().head[0].pred);

    WardednessReport rep = check_warded(prog);
    if (!rep.warded())
        throw std::logic_error("generator produced an unwarded program");
    return task;
}

void GraphSpec::validate() const {
    if (std::abs(alpha + beta + gamma - 1.0) > 1e-9)
        throw InfeasibleSpec("alpha+beta+gamma must sum to 1");
    if (n < 3) throw InfeasibleSpec("need at least 3 nodes");
}

Database gen_ownership(const GraphSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    // Bootstrapped with a 3-node seed cycle.
    std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}, {2, 0}};
    std::vector<int> indeg{1, 1, 1}, outdeg{1, 1, 1};
    auto pick_by = [&](const std::vector<int>& deg) {
        int64_t total = 0;
        for (int d : deg) total += d + 1;
        std::uniform_int_distribution<int64_t> at(0, total - 1);
        int64_t x = at(rng);
        for (size_t i = 0; i < deg.size(); ++i) {
            x -= deg[i] + 1;
            if (x < 0) return i;
        }
        return deg.size() - 1;
    };
    auto add_edge = [&](size_t u, size_t v) {
        edges.emplace_back(int(u), int(v));
        ++outdeg[u];
        ++indeg[v];
    };

    while (indeg.size() < spec.n) {
        double c = coin(rng);
        if (c < spec.alpha) {
            size_t v = pick_by(indeg);
            indeg.push_back(0);
            outdeg.push_back(0);
            add_edge(indeg.size() - 1, v);
        } else if (c < spec.alpha + spec.beta) {
            size_t u = pick_by(outdeg);
            size_t v = pick_by(indeg);
            if (u != v) add_edge(u, v);
        } else {
            size_t u = pick_by(outdeg);
            indeg.push_back(0);
            outdeg.push_back(0);
            add_edge(u, indeg.size() - 1);
        }
    }

    Database db;
    std::uniform_real_distribution<double> weight(0.05, 1.0);
    auto name = [](int i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "c%07d", i);
        return std::string(buf);
    };
    auto& control = db["control"];
    auto& own = db["own"];
    std::set<std::pair<int, int>> seen;
    for (auto [u, v] : edges) {
        double w = std::round(weight(rng) * 100.0) / 100.0;
        if (!seen.insert({u, v}).second) continue;
        Fact c;
        c.pred = "control";
        c.args = {Value{name(u)}, Value{name(v)}};
        control.push_back(std::move(c));
        Fact o;
        o.pred = "own";
        o.args = {Value{name(u)}, Value{name(v)}, Value{w}};
        own.push_back(std::move(o));
    }
    return db;
}

// ---------------------------------------------------------------------------
// Fixtures

const std::map<std::string, std::string>& fixture_sources() {
    static const std::map<std::string, std::string> sources = {
        {"example1", R"(% key people propagate down the control chain
@output("keyperson").
company(X) -> keyperson(P,X).
control(X,Y), keyperson(P,X) -> keyperson(P,Y).
company("a"). company("b"). company("c").
control("a","b"). control("a","c").
keyperson("bob","a").
)"},
        {"example2", R"(% significantly controlled companies
@output("stronglink").
company(X) -> owns(P,S,X).
owns(P,S,X) -> stock(X,S).
owns(P,S,X) -> psc(X,P).
psc(X,P), controls(X,Y) -> owns(P,S,Y).
psc(X,P), psc(Y,P) -> stronglink(X,Y).
stronglink(X,Y) -> owns(P,S,X).
stronglink(X,Y) -> owns(P,S,Y).
stock(X,S) -> company(X).
company("hsbc"). company("hsb"). company("iba").
controls("hsbc","hsb"). controls("hsb","iba").
)"},
        {"example4", R"(% the small harmful-join program
@output("q").
r(X) -> t(Z).
r(X) -> p(Z,X).
p(Z,X) -> t(Z).
p(Z,X), t(Z) -> q(X).
r("a").
)"},
        {"psc", R"(% persons with significant control
@output("psc").
keyperson(X,P), person(P) -> psc(X,P).
control(Y,X), psc(Y,P) -> psc(X,P).
keyperson("a","bob"). person("bob"). control("a","b").
)"},
        {"psc_existential", R"(% PSC with an artificial person per company
@output("psc").
keyperson(X,P) -> psc(X,P).
company(X) -> psc(X,P).
control(Y,X), psc(Y,P) -> psc(X,P).
company("a"). company("b"). company("c").
control("a","b"). control("b","c").
keyperson("a","bob").
)"},
        {"stronglink", R"(% strong links: companies sharing enough PSCs
@output("stronglink").
keyperson(X,P) -> psc(X,P).
company(X) -> psc(X,P).
control(Y,X), psc(Y,P) -> psc(X,P).
psc(X,P), psc(Y,P), X > Y, W >= 1, W = mcount(P) -> stronglink(X,Y,W).
company("a"). company("b").
control("a","b").
keyperson("a","bob"). keyperson("b","bob").
)"},
        {"complex_warded", R"(% the four-rule warded set with a harmful join
@output("stronglink").
keyperson(X,P) -> psc(X,P).
company(X) -> psc(X,P).
control(Y,X), psc(Y,P) -> psc(X,P).
psc(X,P), psc(Y,P), X > Y -> stronglink(X,Y).
company("a"). company("b").
control("a","b").
keyperson("a","bob"). keyperson("b","bob").
)"},
        {"simple_warded", R"(% two rules, one ward
@output("t").
p(X) -> q(Z,X).
q(X,Y), p(Y) -> t(X).
p("a").
)"},
        {"softlink", R"(% joint ownership links companies
@output("softlink").
own(X,Y,W) -> softlink(X,Y).
softlink(X,Y) -> softlink(Y,X).
own(Z,X,W1), own(Z,Y,W2) -> softlink(X,Y).
incorp(X,Y) -> own(Z,X,W1), own(Z,Y,W2).
incorp("a","b").
own("c","a",0.5).
)"},
        {"aggregates", R"(% the monotonic msum example
@output("q").
p(X,Y,W), J = msum(W, <Y>) -> q(X,J).
p(1,2,5). p(1,2,3). p(1,3,7). p(2,4,2). p(2,4,3). p(2,5,1).
)"},
        {"company_control", R"(% company control via monotonic sum
@output("control").
own(X,Y,W), W > 0.5 -> control(X,Y).
control(X,Y), own(Y,Z,W), V = msum(W, <Y>), V > 0.5 -> control(X,Z).
own("a","b",0.6).
own("b","c",0.6).
own("a","c",0.3).
)"},
    };
    return sources;
}

ReasoningTask fixture(const std::string& name) {
    const auto& sources = fixture_sources();
    auto it = sources.find(name);
    if (it == sources.end()) throw std::out_of_range("unknown fixture " + name);
    ParsedProgram parsed = parse_program(it->second, name);
    ReasoningTask task;
    task.program = std::move(parsed.program);
    task.database = std::move(parsed.inline_facts);
    return task;
}

std::map<std::string, ReasoningTask> fixtures() {
    std::map<std::string, ReasoningTask> out;
    for (const auto& [name, src] : fixture_sources()) out[name] = fixture(name);
    return out;
}

}  // namespace warden
