#include "warden/chase.hpp"

#include <algorithm>
#include <random>

#include "doctest.h"
#include "warden/bench.hpp"
#include "warden/parser.hpp"

using namespace warden;

namespace {

Fact make_fact(const std::string& pred, std::vector<GroundTerm> args) {
    Fact f;
    f.pred = pred;
    f.args = std::move(args);
    return f;
}

const Value HSBC{std::string("hsbc")};
const Value HSB{std::string("hsb")};
const Value IBA{std::string("iba")};

}  // namespace

TEST_CASE("isomorphic: bijection over nulls with equal constants") {
    CHECK(isomorphic(make_fact("owns", {LabeledNull{1}, LabeledNull{2}, HSBC}),
                     make_fact("owns", {LabeledNull{3}, LabeledNull{4}, HSBC})));
    // repeated null on one side breaks the bijection
    CHECK_FALSE(isomorphic(make_fact("owns", {LabeledNull{1}, LabeledNull{1}, HSBC}),
                           make_fact("owns", {LabeledNull{3}, LabeledNull{4}, HSBC})));
    CHECK_FALSE(isomorphic(make_fact("psc", {HSB, LabeledNull{1}}),
                           make_fact("psc", {IBA, LabeledNull{1}})));
    // bijection must be injective in both directions
    CHECK_FALSE(isomorphic(make_fact("p", {LabeledNull{1}, LabeledNull{2}}),
                           make_fact("p", {LabeledNull{3}, LabeledNull{3}})));
    CHECK(isomorphic(make_fact("p", {LabeledNull{9}}), make_fact("p", {LabeledNull{9}})));
}

TEST_CASE("pattern: the section golden cases") {
    // P(1,2,x,y) and P(3,4,z,y) share a pattern; P(5,5,z,y) does not.
    Fact a = make_fact("p", {Value{int64_t(1)}, Value{int64_t(2)}, LabeledNull{10},
                             LabeledNull{11}});
    Fact b = make_fact("p", {Value{int64_t(3)}, Value{int64_t(4)}, LabeledNull{12},
                             LabeledNull{11}});
    Fact c = make_fact("p", {Value{int64_t(5)}, Value{int64_t(5)}, LabeledNull{12},
                             LabeledNull{11}});
    CHECK(pattern(a) == pattern(b));
    CHECK_FALSE(pattern(a) == pattern(c));
    CHECK(pattern(a).repr == "p(C1,C2,N1,N2)");
    CHECK(pattern(c).repr == "p(C1,C1,N1,N2)");
}

TEST_CASE("pattern: ground fact with distinct constants") {
    Fact g = make_fact("q", {Value{int64_t(7)}, Value{std::string("x")}, Value{true}});
    CHECK(pattern(g).repr == "q(C1,C2,C3)");
}

TEST_CASE("pattern equality is exactly pattern-isomorphism (random)") {
    std::mt19937_64 rng(7);
    auto random_fact = [&](int salt) {
        Fact f;
        f.pred = "r";
        std::uniform_int_distribution<int> d(0, 3);
        for (int i = 0; i < 4; ++i) {
            if (d(rng) < 2)
                f.args.push_back(Value{int64_t(d(rng) + salt)});
            else
                f.args.push_back(LabeledNull{d(rng) + salt});
        }
        return f;
    };
    for (int i = 0; i < 200; ++i) {
        Fact a = random_fact(0), b = random_fact(i % 3);
        bool same_pattern = pattern(a) == pattern(b);
        bool bijective = true;
        if (a.args.size() == b.args.size()) {
            std::map<std::string, std::string> cf, cb, nf, nb;
            for (size_t k = 0; k < a.args.size(); ++k) {
                bool an = std::holds_alternative<LabeledNull>(a.args[k]);
                bool bn = std::holds_alternative<LabeledNull>(b.args[k]);
                if (an != bn) {
                    bijective = false;
                    break;
                }
                auto sa = to_string(a.args[k]), sb = to_string(b.args[k]);
                auto& fwd = an ? nf : cf;
                auto& bwd = an ? nb : cb;
                auto [i1, f1] = fwd.emplace(sa, sb);
                auto [i2, f2] = bwd.emplace(sb, sa);
                if ((!f1 && i1->second != sb) || (!f2 && i2->second != sa)) {
                    bijective = false;
                    break;
                }
            }
        } else {
            bijective = false;
        }
        CHECK(same_pattern == bijective);
    }
}

TEST_CASE("pattern_key pins program constants to themselves") {
    std::set<Value> pinned{Value{std::string("a")}};
    Fact fa = make_fact("p", {Value{std::string("a")}});
    Fact fb = make_fact("p", {Value{std::string("b")}});
    Fact fc = make_fact("p", {Value{std::string("c")}});
    CHECK(pattern_key(fb, pinned) == pattern_key(fc, pinned));
    CHECK(pattern_key(fa, pinned) != pattern_key(fb, pinned));
    CHECK(pattern(fa) == pattern(fb));  // the public pattern stays pure
}

TEST_CASE("provenance prefix order is a partial order") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> len(0, 5), rule(1, 3);
    auto random_prov = [&] {
        std::vector<int> p(len(rng));
        for (auto& x : p) x = rule(rng);
        return p;
    };
    for (int i = 0; i < 300; ++i) {
        auto a = random_prov(), b = random_prov(), c = random_prov();
        CHECK(provenance_prefix(a, a));  // reflexive
        if (provenance_prefix(a, b) && provenance_prefix(b, a)) CHECK(a == b);
        if (provenance_prefix(a, b) && provenance_prefix(b, c))
            CHECK(provenance_prefix(a, c));
    }
}

TEST_CASE("summary structure keeps a prefix antichain") {
    SummaryStructure s;
    s.insert("p(C1)", {1, 2});
    s.insert("p(C1)", {1, 2, 3});  // extension displaces the stored prefix
    REQUIRE(s.find("p(C1)"));
    CHECK(s.find("p(C1)")->size() == 1);
    CHECK(s.find("p(C1)")->front() == std::vector<int>{1, 2, 3});
    s.insert("p(C1)", {1});  // prefix displaces the stored extension
    CHECK(s.find("p(C1)")->size() == 1);
    CHECK(s.find("p(C1)")->front() == std::vector<int>{1});
    s.insert("p(C1)", {2, 9});
    CHECK(s.find("p(C1)")->size() == 2);
    CHECK(s.find("q(C1)") == nullptr);
}

// ---------------------------------------------------------------------------
// Algorithm branch behavior, driven record by record.

namespace {

struct Harness {
    std::vector<FactRecord> arena;
    WardedStrategy strategy{{}};

    Harness() {
        strategy.resolve = [this](int32_t id) -> const FactRecord& {
            return arena[id];
        };
        strategy.fact_resolver = [this](int32_t id) -> const Fact& {
            return arena[id].fact;
        };
    }
    int32_t root(const Fact& f) {
        FactRecord r;
        r.fact = f;
        r.kind = GenKind::Root;
        r.id = int32_t(arena.size());
        r.l_root = r.w_root = r.id;
        arena.push_back(r);
        strategy.register_root(arena.back());
        return r.id;
    }
    FactRecord& make(const Fact& f, GenKind k, int32_t parent, std::vector<int> prov) {
        FactRecord r;
        r.fact = f;
        r.kind = k;
        r.id = int32_t(arena.size());
        r.parent = parent;
        if (k == GenKind::Linear) {
            r.l_root = arena[parent].l_root;
            r.w_root = arena[parent].w_root;
        } else if (k == GenKind::Warded) {
            r.l_root = r.id;
            r.w_root = arena[parent].w_root;
        } else {
            r.l_root = r.w_root = r.id;
        }
        r.provenance = std::move(prov);
        arena.push_back(r);
        return arena.back();
    }
};

}  // namespace

TEST_CASE("check_termination: first fact is admitted and stored") {
    Harness h;
    int32_t root = h.root(make_fact("p", {Value{std::string("a")}}));
    auto& rec = h.make(make_fact("q", {Value{std::string("a")}, LabeledNull{1}}),
                       GenKind::Linear, root, {1});
    CHECK(h.strategy.check_termination(rec));
    CHECK(h.strategy.stats.facts_admitted == 1);
    REQUIRE(h.strategy.ground().bucket(root));
    CHECK(h.strategy.ground().bucket(root)->size() == 2);  // root + admitted
}

TEST_CASE("check_termination: isomorphic fact in the same tree is rejected, S learns") {
    Harness h;
    int32_t root = h.root(make_fact("p", {Value{std::string("a")}}));
    auto& r1 = h.make(make_fact("q", {Value{std::string("a")}, LabeledNull{1}}),
                      GenKind::Linear, root, {1});
    CHECK(h.strategy.check_termination(r1));
    auto& r2 = h.make(make_fact("q", {Value{std::string("a")}, LabeledNull{2}}),
                      GenKind::Linear, root, {1, 2});
    CHECK_FALSE(h.strategy.check_termination(r2));
    REQUIRE(h.strategy.summary().find(pattern_key(h.arena[root].fact, {})));
    CHECK(h.strategy.summary().find(pattern_key(h.arena[root].fact, {}))->front() ==
          std::vector<int>{1, 2});
}

TEST_CASE("check_termination: beyond and within stop provenances skip the check") {
    Harness h;
    int32_t root_a = h.root(make_fact("p", {Value{std::string("a")}}));
    auto& a1 = h.make(make_fact("q", {Value{std::string("a")}, LabeledNull{1}}),
                      GenKind::Linear, root_a, {1});
    CHECK(h.strategy.check_termination(a1));
    auto& a2 = h.make(make_fact("q", {Value{std::string("a")}, LabeledNull{2}}),
                      GenKind::Linear, root_a, {1, 2});
    CHECK_FALSE(h.strategy.check_termination(a2));

    // A second, pattern-isomorphic root: its chain hits the stop provenance.
    int32_t root_b = h.root(make_fact("p", {Value{std::string("b")}}));
    int64_t checks_before = h.strategy.stats.iso_checks;

    auto& b1 = h.make(make_fact("q", {Value{std::string("b")}, LabeledNull{3}}),
                      GenKind::Linear, root_b, {1});
    CHECK(h.strategy.check_termination(b1));  // within [1,2]: admitted, no check
    CHECK(h.strategy.stats.iso_checks == checks_before);
    CHECK(h.strategy.stats.prefix_admits == 1);

    auto& b2 = h.make(make_fact("q", {Value{std::string("b")}, LabeledNull{4}}),
                      GenKind::Linear, root_b, {1, 2});
    CHECK_FALSE(h.strategy.check_termination(b2));  // beyond: rejected, no check
    CHECK(h.strategy.stats.iso_checks == checks_before);
    CHECK(h.strategy.stats.prefix_rejects == 1);
}

TEST_CASE("check_termination: warded facts skip prefix tests and check the bucket") {
    Harness h;
    int32_t root = h.root(make_fact("p", {Value{std::string("a")}}));
    auto& w1 = h.make(make_fact("s", {Value{std::string("a")}, LabeledNull{1}}),
                      GenKind::Warded, root, {});
    CHECK(h.strategy.check_termination(w1));
    auto& w2 = h.make(make_fact("s", {Value{std::string("a")}, LabeledNull{2}}),
                      GenKind::Warded, root, {});
    CHECK_FALSE(h.strategy.check_termination(w2));  // isomorphic in same tree
    // No stop provenance is learned from an empty provenance.
    CHECK(h.strategy.summary().size() == 0);
}

TEST_CASE("check_termination: nonlinear branch uses ground membership") {
    Harness h;
    auto& n1 = h.make(make_fact("t", {Value{std::string("a")}, Value{std::string("b")}}),
                      GenKind::NonLinear, -1, {});
    CHECK(h.strategy.check_termination(n1));
    auto& n2 = h.make(make_fact("t", {Value{std::string("a")}, Value{std::string("b")}}),
                      GenKind::NonLinear, -1, {});
    CHECK_FALSE(h.strategy.check_termination(n2));  // the new tree is redundant
    auto& n3 = h.make(make_fact("t", {Value{std::string("a")}, Value{std::string("c")}}),
                      GenKind::NonLinear, -1, {});
    CHECK(h.strategy.check_termination(n3));
}

TEST_CASE("trivial strategy: exhaustive scan counts pairwise checks") {
    TrivialStrategy triv;
    std::vector<FactRecord> arena;
    auto submit = [&](const Fact& f) {
        FactRecord r;
        r.fact = f;
        r.id = int32_t(arena.size());
        arena.push_back(r);
        return triv.check_termination(arena.back());
    };
    CHECK(submit(make_fact("p", {Value{std::string("a")}, LabeledNull{1}})));
    CHECK(submit(make_fact("p", {Value{std::string("b")}, LabeledNull{2}})));
    int64_t before = triv.stats.iso_checks;
    CHECK_FALSE(submit(make_fact("p", {Value{std::string("a")}, LabeledNull{9}})));
    CHECK(triv.stats.iso_checks >= before + 1);  // scanned stored facts
}

TEST_CASE("skolem table: deterministic, injective, range disjoint") {
    NullFactory nulls;
    SkolemTable sk(nulls);
    auto a = sk.eval("f", {Value{std::string("a")}});
    auto a2 = sk.eval("f", {Value{std::string("a")}});
    auto b = sk.eval("f", {Value{std::string("b")}});
    auto g = sk.eval("g", {Value{std::string("a")}});
    CHECK(a == a2);
    CHECK(a != b);
    CHECK(a != g);
    // skolem nulls never collide with plain fresh nulls
    auto fresh = nulls.fresh();
    CHECK(fresh != a);
    CHECK(fresh != b);
    CHECK(fresh != g);
}

// ---------------------------------------------------------------------------
// Naive oracle chase

TEST_CASE("naive chase: the two-rule PSC task") {
    ReasoningTask task = fixture("psc");
    auto res = naive_chase(task, 10000);
    REQUIRE(res.outputs.count("psc"));
    std::vector<Fact> expected{
        make_fact("psc", {Value{std::string("a")}, Value{std::string("bob")}}),
        make_fact("psc", {Value{std::string("b")}, Value{std::string("bob")}})};
    auto got = res.outputs.at("psc");
    std::sort(got.begin(), got.end());
    std::sort(expected.begin(), expected.end());
    CHECK(got == expected);
}

TEST_CASE("naive chase: empty database, empty output") {
    ReasoningTask task = fixture("psc");
    task.database.clear();
    auto res = naive_chase(task, 1000);
    CHECK(res.outputs.at("psc").empty());
}

TEST_CASE("naive chase: example one, key people propagate") {
    ReasoningTask task = fixture("example1");
    auto res = naive_chase(task, 10000);
    const auto& out = res.outputs.at("keyperson");
    auto has = [&](const Fact& f) {
        return std::find(out.begin(), out.end(), f) != out.end();
    };
    CHECK(has(make_fact("keyperson", {Value{std::string("bob")}, Value{std::string("a")}})));
    CHECK(has(make_fact("keyperson", {Value{std::string("bob")}, Value{std::string("b")}})));
    CHECK(has(make_fact("keyperson", {Value{std::string("bob")}, Value{std::string("c")}})));
    // one null person per company, up to isomorphism
    int nulls = 0;
    for (const auto& f : out)
        if (std::holds_alternative<LabeledNull>(f.args[0])) ++nulls;
    CHECK(nulls == 3);
}

TEST_CASE("naive chase: full mode terminates on the finite example4 chase") {
    ReasoningTask task = fixture("example4");
    auto res = naive_chase(task, 10000, ChaseMode::Full);
    REQUIRE(res.outputs.count("q"));
    REQUIRE(res.outputs.at("q").size() == 1);
    CHECK(res.outputs.at("q")[0] == make_fact("q", {Value{std::string("a")}}));
    // Iso-pruning is not a sound oracle while harmful joins remain: the
    // isomorphic t-facts collapse and the join never fires.
    auto pruned = naive_chase(task, 10000, ChaseMode::IsoPrune);
    CHECK(pruned.outputs.at("q").empty());
}

TEST_CASE("naive chase: cap exceeded throws in full mode") {
    ReasoningTask task = fixture("example2");
    CHECK_THROWS_AS(naive_chase(task, 50, ChaseMode::Full), CapExceeded);
}

TEST_CASE("naive chase: chase graph edges point premise to conclusion") {
    ReasoningTask task = fixture("psc");
    auto res = naive_chase(task, 1000);
    CHECK_FALSE(res.edges.empty());
    for (const auto& e : res.edges) {
        CHECK(e.from >= 0);
        CHECK(e.to > e.from);  // breadth-first: conclusions come later
    }
}

// ---------------------------------------------------------------------------
// Homomorphic answer comparison

TEST_CASE("hom subsumption and equivalence") {
    auto A = std::vector<Fact>{
        make_fact("psc", {Value{std::string("a")}, LabeledNull{1}}),
        make_fact("psc", {Value{std::string("b")}, LabeledNull{1}}),
    };
    auto B = std::vector<Fact>{
        make_fact("psc", {Value{std::string("a")}, LabeledNull{7}}),
        make_fact("psc", {Value{std::string("b")}, LabeledNull{7}}),
        make_fact("psc", {Value{std::string("b")}, Value{std::string("bob")}}),
    };
    CHECK(hom_subsumed(A, B));
    CHECK_FALSE(hom_subsumed(B, A));  // bob has no preimage
    CHECK_FALSE(hom_equivalent(A, B));
    CHECK(hom_equivalent(A, A));

    // shared nulls must map consistently
    auto C = std::vector<Fact>{
        make_fact("psc", {Value{std::string("a")}, LabeledNull{1}}),
        make_fact("psc", {Value{std::string("c")}, LabeledNull{1}}),
    };
    CHECK_FALSE(hom_subsumed(C, B));
    // nulls may map to constants
    auto D = std::vector<Fact>{
        make_fact("psc", {Value{std::string("b")}, LabeledNull{4}})};
    CHECK(hom_subsumed(D, B));
}

TEST_CASE("hom: ground answers need exact matches") {
    auto A = std::vector<Fact>{make_fact("q", {Value{int64_t(1)}})};
    auto B = std::vector<Fact>{make_fact("q", {Value{int64_t(2)}})};
    CHECK_FALSE(hom_subsumed(A, B));
    CHECK(hom_subsumed(A, A));
}
