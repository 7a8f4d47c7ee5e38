#include "warden/model.hpp"

#include "doctest.h"

using namespace warden;

namespace {

Fact make_fact(const std::string& pred, std::vector<GroundTerm> args) {
    Fact f;
    f.pred = pred;
    f.args = std::move(args);
    return f;
}

Atom atom(const std::string& pred, std::vector<Term> args) {
    Atom a;
    a.pred = pred;
    a.args = std::move(args);
    return a;
}

}  // namespace

TEST_CASE("typed constant equality") {
    CHECK(Value{int64_t(1)} != Value{std::string("1")});
    CHECK(Value{int64_t(1)} != Value{1.0});
    CHECK(Value{true} != Value{int64_t(1)});
    CHECK(Value{Date{2020, 1, 31}} == Value{Date{2020, 1, 31}});
}

TEST_CASE("null rendering and identity") {
    LabeledNull n{7};
    CHECK(to_string(GroundTerm{n}) == "_:n7");
    CHECK(LabeledNull{1} == LabeledNull{1});
    CHECK(LabeledNull{1} != LabeledNull{2});
}

TEST_CASE("unify: direct positional match") {
    // keyperson(x,p) against keyperson(a,bob)
    auto a = atom("keyperson", {Variable{"X"}, Variable{"P"}});
    auto f = make_fact("keyperson", {Value{std::string("a")}, Value{std::string("bob")}});
    auto sub = unify(a, f, {});
    REQUIRE(sub.has_value());
    CHECK(*sub->find("X") == GroundTerm{Value{std::string("a")}});
    CHECK(*sub->find("P") == GroundTerm{Value{std::string("bob")}});
}

TEST_CASE("unify: consistency violation fails") {
    // control(x,x) against control(a,b)
    auto a = atom("control", {Variable{"X"}, Variable{"X"}});
    auto f = make_fact("control", {Value{std::string("a")}, Value{std::string("b")}});
    CHECK_FALSE(unify(a, f, {}).has_value());
}

TEST_CASE("unify: null binds like a value under a partial substitution") {
    auto a = atom("psc", {Variable{"Y"}, Variable{"P"}});
    auto f = make_fact("psc", {Value{std::string("b")}, LabeledNull{1}});
    Substitution partial;
    partial.bind("Y", Value{std::string("b")});
    auto sub = unify(a, f, partial);
    REQUIRE(sub.has_value());
    CHECK(*sub->find("P") == GroundTerm{LabeledNull{1}});
}

TEST_CASE("unify: constant position mismatch fails") {
    auto a = atom("p", {Value{std::string("c")}, Variable{"X"}});
    auto f = make_fact("p", {Value{std::string("d")}, Value{std::string("e")}});
    CHECK_FALSE(unify(a, f, {}).has_value());
}

TEST_CASE("apply: existentials get fresh nulls, shared across head atoms") {
    // company(x) -> exists p,s: owns(p,s,x)
    Rule r;
    r.id = 1;
    r.body = {atom("company", {Variable{"X"}})};
    r.head = {atom("owns", {Variable{"P"}, Variable{"S"}, Variable{"X"}}),
              atom("psc", {Variable{"X"}, Variable{"P"}})};
    r.existentials = {"P", "S"};

    Substitution sub;
    sub.bind("X", Value{std::string("hsbc")});
    NullFactory nulls;
    auto facts = apply(r, sub, nulls);
    REQUIRE(facts.size() == 2);
    CHECK(std::holds_alternative<LabeledNull>(facts[0].args[0]));
    CHECK(std::holds_alternative<LabeledNull>(facts[0].args[1]));
    CHECK(facts[0].args[2] == GroundTerm{Value{std::string("hsbc")}});
    // The same null for P feeds both head atoms of one application.
    CHECK(facts[0].args[0] == facts[1].args[1]);
    // P and S are distinct fresh nulls.
    CHECK(facts[0].args[0] != facts[0].args[1]);
}

TEST_CASE("apply: fresh nulls from distinct applications are distinct") {
    Rule r;
    r.id = 1;
    r.body = {atom("company", {Variable{"X"}})};
    r.head = {atom("owns", {Variable{"P"}, Variable{"X"}})};
    r.existentials = {"P"};
    Substitution sub;
    sub.bind("X", Value{std::string("hsbc")});
    NullFactory nulls;
    auto f1 = apply(r, sub, nulls);
    auto f2 = apply(r, sub, nulls);
    CHECK(f1[0].args[0] != f2[0].args[0]);
}

TEST_CASE("apply: ground heads are pure in (rule, sub)") {
    Rule r;
    r.id = 2;
    r.body = {atom("keyperson", {Variable{"X"}, Variable{"P"}}),
              atom("person", {Variable{"P"}})};
    r.head = {atom("psc", {Variable{"X"}, Variable{"P"}})};
    Substitution sub;
    sub.bind("X", Value{std::string("a")});
    sub.bind("P", Value{std::string("bob")});
    NullFactory nulls;
    auto f1 = apply(r, sub, nulls);
    auto f2 = apply(r, sub, nulls);
    CHECK(f1 == f2);
    CHECK(f1[0] == make_fact("psc", {Value{std::string("a")}, Value{std::string("bob")}}));
}

TEST_CASE("apply: unbound non-existential head variable is an error") {
    Rule r;
    r.id = 3;
    r.body = {atom("p", {Variable{"X"}})};
    r.head = {atom("q", {Variable{"X"}, Variable{"Y"}})};
    Substitution sub;
    sub.bind("X", Value{std::string("a")});
    NullFactory nulls;
    CHECK_THROWS_AS(apply(r, sub, nulls), std::runtime_error);
}

TEST_CASE("conditions: numeric promotion and cross-type rules") {
    Substitution sub;
    sub.bind("V", Value{0.6});
    sub.bind("N", Value{int64_t(1)});
    Condition gt{Expr::make(Variable{"V"}), CmpOp::Gt, Expr::make(Value{0.5})};
    CHECK(eval_conditions({gt}, sub));
    Condition mixed{Expr::make(Variable{"N"}), CmpOp::Lt, Expr::make(Value{1.5})};
    CHECK(eval_conditions({mixed}, sub));
    Condition cross{Expr::make(Variable{"N"}), CmpOp::Eq,
                    Expr::make(Value{std::string("1")})};
    CHECK_FALSE(eval_conditions({cross}, sub));
}

TEST_CASE("expressions: arithmetic") {
    Substitution sub;
    sub.bind("X", Value{int64_t(4)});
    auto e = Expr::make(Expr::Kind::Add, Expr::make(Variable{"X"}),
                        Expr::make(Value{int64_t(2)}));
    CHECK(eval_expr(e, sub) == GroundTerm{Value{int64_t(6)}});
    auto d = Expr::make(Expr::Kind::Div, Expr::make(Variable{"X"}),
                        Expr::make(Value{int64_t(2)}));
    CHECK(eval_expr(d, sub) == GroundTerm{Value{2.0}});
}

TEST_CASE("fact ordering is total and deterministic") {
    auto a = make_fact("p", {Value{int64_t(1)}});
    auto b = make_fact("p", {Value{std::string("1")}});
    auto c = make_fact("p", {LabeledNull{1}});
    CHECK(((a < b) != (b < a)));
    CHECK((a < c));  // constants sort before nulls
}
