#include "warden/parser.hpp"

#include "doctest.h"
#include "warden/bench.hpp"

using namespace warden;

TEST_CASE("head-only variables become existentials") {
    auto parsed = parse_program("company(X) -> owns(P,S,X).\n");
    REQUIRE(parsed.program.rules.size() == 1);
    const Rule& r = parsed.program.rules[0];
    CHECK(r.existentials == std::set<std::string>{"P", "S"});
    CHECK(r.is_linear());
}

TEST_CASE("wrong arrow is a syntax error") {
    CHECK_THROWS_AS(parse_program("q(X) :- p(X).\n"), ParseError);
    try {
        parse_program("q(X) :- p(X).\n");
    } catch (const ParseError& e) {
        CHECK(e.kind == ParseError::Kind::Syntax);
        CHECK(e.line == 1);
    }
}

TEST_CASE("company control rule with aggregation parses") {
    auto parsed = parse_program(
        "control(X,Y), own(Y,Z,W), V = msum(W, <Y>), V > 0.5 -> control(X,Z).\n");
    REQUIRE(parsed.program.rules.size() == 1);
    const Rule& r = parsed.program.rules[0];
    REQUIRE(r.aggregation.has_value());
    CHECK(r.aggregation->func == AggFunc::MSum);
    CHECK(r.aggregation->arg == "W");
    CHECK(r.aggregation->contributors == std::vector<std::string>{"Y"});
    CHECK(r.aggregation->target == "V");
    REQUIRE(r.conditions.size() == 1);
    CHECK(r.conditions[0].op == CmpOp::Gt);
    CHECK(r.body.size() == 2);
    // The target is computed, not existential.
    CHECK(r.existentials.empty());
}

TEST_CASE("skolem assignment parses") {
    auto parsed = parse_program("p(X), Z = #f(X) -> q(X,Z).\n");
    const Rule& r = parsed.program.rules[0];
    REQUIRE(r.skolems.count("Z"));
    CHECK(r.skolems.at("Z").func == "f");
    CHECK(r.skolems.at("Z").args == std::vector<std::string>{"X"});
    CHECK(r.existentials.empty());
}

TEST_CASE("annotations") {
    auto parsed = parse_program(
        "@input(\"edge\").\n"
        "@output(\"path\").\n"
        "@bind(\"edge\",\"csv\",\"edges.csv\",\"string,string\").\n"
        "@post(\"path\",\"certain\").\n"
        "edge(X,Y) -> path(X,Y).\n");
    CHECK(parsed.program.inputs.count("edge"));
    CHECK(parsed.program.outputs.count("path"));
    REQUIRE(parsed.program.bindings.count("edge"));
    CHECK(parsed.program.bindings.at("edge").path == "edges.csv");
    CHECK(parsed.program.bindings.at("edge").column_types ==
          std::vector<std::string>{"string", "string"});
    CHECK(parsed.program.post_directives.at("path").certain);
}

TEST_CASE("unsupported features are rejected with clear errors") {
    CHECK_THROWS_AS(parse_program("@qbind(\"p\",\"sql\",\"db\",\"q\").\n"), ParseError);
    CHECK_THROWS_AS(parse_program("p(X), q(X) -> X = Y.\n"), ParseError);
    CHECK_THROWS_AS(parse_program("p(X), !q(X) -> r(X).\n"), ParseError);
    try {
        parse_program("@qbind(\"p\",\"sql\",\"db\",\"q\").\n");
    } catch (const ParseError& e) {
        CHECK(e.kind == ParseError::Kind::UnsupportedFeature);
    }
}

TEST_CASE("unknown annotation") {
    CHECK_THROWS_AS(parse_program("@frobnicate(\"p\").\n"), ParseError);
}

TEST_CASE("arity conflicts are rejected") {
    try {
        parse_program("p(X,Y) -> q(X).\np(X) -> r(X).\n");
        FAIL("expected ArityConflict");
    } catch (const ParseError& e) {
        CHECK(e.kind == ParseError::Kind::ArityConflict);
    }
}

TEST_CASE("inline facts are collected and must be ground") {
    auto parsed = parse_program("p(1,\"a\",true,2020-01-31).\n");
    REQUIRE(parsed.inline_facts.count("p"));
    const Fact& f = parsed.inline_facts.at("p")[0];
    CHECK(f.args[0] == GroundTerm{Value{int64_t(1)}});
    CHECK(f.args[1] == GroundTerm{Value{std::string("a")}});
    CHECK(f.args[2] == GroundTerm{Value{true}});
    CHECK(f.args[3] == GroundTerm{Value{Date{2020, 1, 31}}});
    CHECK_THROWS_AS(parse_program("p(X).\n"), ParseError);
}

TEST_CASE("inputs may not be derived") {
    CHECK_THROWS_AS(parse_program("@input(\"q\").\np(X) -> q(X).\n"), ParseError);
}

TEST_CASE("round trip: parse . format . parse = parse on every fixture") {
    for (const auto& [name, src] : fixture_sources()) {
        CAPTURE(name);
        ParsedProgram once = parse_program(src, name);
        std::string printed = format_program(once.program, once.inline_facts);
        ParsedProgram twice = parse_program(printed, name + "-printed");
        std::string printed2 = format_program(twice.program, twice.inline_facts);
        CHECK(printed == printed2);
        CHECK(once.program.rules.size() == twice.program.rules.size());
        for (size_t i = 0; i < once.program.rules.size(); ++i)
            CHECK(to_string(once.program.rules[i]) == to_string(twice.program.rules[i]));
        CHECK(once.program.inputs == twice.program.inputs);
        CHECK(once.program.outputs == twice.program.outputs);
        CHECK(once.inline_facts == twice.inline_facts);
    }
}

TEST_CASE("negative numbers, floats, comments") {
    auto parsed = parse_program(
        "% comment line\n"
        "p(-3, -0.5). % trailing\n");
    const Fact& f = parsed.inline_facts.at("p")[0];
    CHECK(f.args[0] == GroundTerm{Value{int64_t(-3)}});
    CHECK(f.args[1] == GroundTerm{Value{-0.5}});
}
