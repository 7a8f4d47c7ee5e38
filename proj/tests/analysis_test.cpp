#include "warden/analysis.hpp"

#include "doctest.h"
#include "warden/bench.hpp"
#include "warden/parser.hpp"

using namespace warden;

namespace {

Program parse(const std::string& src) { return parse_program(src).program; }

bool has_position(const std::set<Position>& s, const std::string& pred, size_t ix) {
    return s.count(Position{pred, ix}) > 0;
}

}  // namespace

TEST_CASE("affected positions: example one") {
    Program p = fixture("example1").program;
    auto affected = affected_positions(p);
    CHECK(affected.size() == 1);
    CHECK(has_position(affected, "keyperson", 1));
}

TEST_CASE("affected positions: example two fixpoint") {
    Program p = fixture("example2").program;
    auto affected = affected_positions(p);
    CHECK(has_position(affected, "owns", 1));
    CHECK(has_position(affected, "owns", 2));
    CHECK(has_position(affected, "stock", 2));
    CHECK(has_position(affected, "psc", 2));
    CHECK(affected.size() == 4);
}

TEST_CASE("affected positions: no existentials means empty") {
    Program p = fixture("psc").program;
    CHECK(affected_positions(p).empty());
}

TEST_CASE("affected positions are monotone under rule addition") {
    Program p = fixture("example2").program;
    auto before = affected_positions(p);
    Program q = p;
    auto extra = parse("stock(X,S) -> owns(P,Q,X).\n").rules;
    for (auto& r : extra) {
        r.id = q.max_rule_id() + 1;
        q.rules.push_back(r);
    }
    auto after = affected_positions(q);
    for (const auto& pos : before) CHECK(after.count(pos));
}

TEST_CASE("classify: example one rule two") {
    Program p = fixture("example1").program;
    auto affected = affected_positions(p);
    const Rule& r2 = p.rules[1];  // control(X,Y), keyperson(P,X) -> keyperson(P,Y)
    auto classes = classify_variables(r2, affected);
    CHECK(classes.at("P") == VarClass::Dangerous);
    CHECK(classes.at("X") == VarClass::Harmless);
    CHECK(classes.at("Y") == VarClass::Harmless);
}

TEST_CASE("classify: harmful but not dangerous in the complex warded set") {
    Program p = fixture("complex_warded").program;
    auto affected = affected_positions(p);
    const Rule& r4 = p.rules[3];  // psc(X,P), psc(Y,P), X > Y -> stronglink(X,Y)
    auto classes = classify_variables(r4, affected);
    CHECK(classes.at("P") == VarClass::Harmful);
    CHECK(classes.at("X") == VarClass::Harmless);
    CHECK(classes.at("Y") == VarClass::Harmless);
}

TEST_CASE("classify: empty affected set means all harmless") {
    Program p = fixture("psc").program;
    auto affected = affected_positions(p);
    for (const auto& r : p.rules)
        for (const auto& [v, c] : classify_variables(r, affected))
            CHECK(c == VarClass::Harmless);
}

TEST_CASE("check_warded: example two is warded with one harmful join") {
    Program p = fixture("example2").program;
    WardednessReport rep = check_warded(p);
    CHECK(rep.verdict == Verdict::Warded);
    CHECK(rep.per_rule.at(5).kind == RuleKind::HarmfulJoin);
    int harmful = 0;
    for (const auto& [id, rr] : rep.per_rule)
        if (rr.kind == RuleKind::HarmfulJoin) ++harmful;
    CHECK(harmful == 1);
}

TEST_CASE("check_warded: complex warded set has ward on the psc atom") {
    Program p = fixture("complex_warded").program;
    WardednessReport rep = check_warded(p);
    CHECK(rep.verdict == Verdict::Warded);
    CHECK(rep.per_rule.at(4).kind == RuleKind::HarmfulJoin);
    // rule 3: control(Y,X), psc(Y,P) -> psc(X,P): the ward is the psc atom.
    REQUIRE(rep.per_rule.at(3).ward.has_value());
    CHECK(p.rules[2].body[*rep.per_rule.at(3).ward].pred == "psc");
    CHECK(rep.per_rule.at(3).kind == RuleKind::WardedJoin);
}

TEST_CASE("check_warded: pure datalog is harmless warded") {
    Program p = fixture("psc").program;
    WardednessReport rep = check_warded(p);
    CHECK(rep.verdict == Verdict::HarmlessWarded);
    CHECK(rep.harmless_warded());
    CHECK(rep.warded());
}

TEST_CASE("check_warded: unwarded program is rejected with violations") {
    // The dangerous variable appears in two atoms: no ward can exist.
    Program p = parse(
        "a(X) -> b(Z,X).\n"
        "b(Z,X), c(Z,Y) -> b(Z,Y).\n");
    // make position c[1] affected as well so Z is dangerous and split
    Program q = parse(
        "a(X) -> b(Z,X).\n"
        "a(X) -> c(Z,X).\n"
        "b(Z,X), c(Z,Y) -> b(Z,Y).\n");
    WardednessReport rep = check_warded(q);
    CHECK(rep.verdict == Verdict::NotWarded);
    CHECK_FALSE(rep.violations.empty());
}

TEST_CASE("variable renaming leaves the report unchanged") {
    Program p = fixture("example2").program;
    Program q = parse(
        "company(A) -> owns(B,C,A).\n"
        "owns(B,C,A) -> stock(A,C).\n"
        "owns(B,C,A) -> psc(A,B).\n"
        "psc(A,B), controls(A,D) -> owns(B,C,D).\n"
        "psc(A,B), psc(D,B) -> stronglink(A,D).\n"
        "stronglink(A,D) -> owns(B,C,A).\n"
        "stronglink(A,D) -> owns(B,C,D).\n"
        "stock(A,C) -> company(A).\n");
    WardednessReport rp = check_warded(p), rq = check_warded(q);
    CHECK(rp.verdict == rq.verdict);
    CHECK(rp.affected == rq.affected);
    for (const auto& [id, rr] : rp.per_rule) {
        CHECK(rq.per_rule.at(id).kind == rr.kind);
        CHECK(rq.per_rule.at(id).ward == rr.ward);
    }
}

TEST_CASE("dangerous implies harmful-classification consistency") {
    for (const auto& [name, task] : fixtures()) {
        CAPTURE(name);
        auto affected = affected_positions(task.program);
        for (const auto& r : task.program.rules) {
            auto classes = classify_variables(r, affected);
            auto body_vars = r.body_variables();
            // classes partition exactly the body variables
            CHECK(classes.size() == body_vars.size());
            for (const auto& [v, c] : classes) {
                CHECK(body_vars.count(v));
                if (c == VarClass::Dangerous) CHECK(r.head_variables().count(v));
            }
        }
    }
}

TEST_CASE("harmless_warded implies warded") {
    for (const auto& [name, task] : fixtures()) {
        CAPTURE(name);
        WardednessReport rep = check_warded(task.program);
        if (rep.harmless_warded()) CHECK(rep.warded());
    }
}

TEST_CASE("dependency graph: psc self loop") {
    Program p = fixture("psc").program;
    DependencyGraph g = dependency_graph(p);
    CHECK(g.edges.at(2).count(2));  // control(Y,X), psc(Y,P) -> psc(X,P)
    CHECK(g.recursive_rules.count(2));
    CHECK_FALSE(g.recursive_rules.count(1));
}

TEST_CASE("dependency graph: single non-recursive rule has no edges") {
    Program p = parse("p(X) -> q(X).\n");
    DependencyGraph g = dependency_graph(p);
    CHECK(g.edges.at(1).empty());
    CHECK(g.recursive_rules.empty());
}

TEST_CASE("dependency graph: example two cycles") {
    Program p = fixture("example2").program;
    DependencyGraph g = dependency_graph(p);
    // owns feeds psc (3), psc feeds the owns-producing rule 4: cycle {3,4}.
    CHECK(g.edges.at(3).count(4));
    CHECK(g.edges.at(4).count(3));
    // 5 (stronglink) -> 6 -> owns -> 3 -> 5 closes the longer cycle.
    CHECK(g.edges.at(5).count(6));
    CHECK(g.edges.at(6).count(3));
    CHECK(g.edges.at(3).count(5));
    for (int id : {3, 4, 5, 6, 7})
        CHECK(g.recursive_rules.count(id));
}

TEST_CASE("report serializes to json") {
    WardednessReport rep = check_warded(fixture("example2").program);
    std::string js = rep.to_json();
    CHECK(js.find("\"verdict\"") != std::string::npos);
    CHECK(js.find("harmful-join") != std::string::npos);
}
