#include "warden/parser.hpp"

#include <cctype>
#include <cstdlib>
#include <map>
#include <optional>

namespace warden {

namespace {

enum class Tok {
    Ident,    // lowercase-initial
    Var,      // uppercase-initial
    Int,
    Float,
    Str,
    Date,
    Bool,
    Arrow,    // ->
    LParen,
    RParen,
    LAngle,
    RAngle,
    Comma,
    Dot,
    At,
    Hash,
    Eq,
    Neq,
    Le,
    Ge,
    Lt,
    Gt,
    Plus,
    Minus,
    StarTok,
    Slash,
    ColonDash,  // :- rejected with a pointed message
    Bang,
    End,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int64_t ival = 0;
    double fval = 0;
    Date date;
    int line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }
    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(ParseError::Kind::Syntax, line_, col_, msg);
    }

    int cur() const { return pos_ < src_.size() ? (unsigned char)src_[pos_] : -1; }
    void bump() {
        if (pos_ < src_.size()) {
            if (src_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
    }

    void skip_space() {
        for (;;) {
            while (std::isspace(cur())) bump();
            if (cur() == '%') {
                while (cur() != -1 && cur() != '\n') bump();
                continue;
            }
            break;
        }
    }

    void advance() {
        skip_space();
        tok_ = Token{};
        tok_.line = line_;
        tok_.col = col_;
        int c = cur();
        if (c == -1) {
            tok_.kind = Tok::End;
            return;
        }
        if (std::isalpha(c) || c == '_') {
            std::string s;
            while (std::isalnum(cur()) || cur() == '_') {
                s += char(cur());
                bump();
            }
            if (s == "true" || s == "false") {
                tok_.kind = Tok::Bool;
                tok_.ival = (s == "true");
            } else if (std::isupper((unsigned char)s[0])) {
                tok_.kind = Tok::Var;
            } else {
                tok_.kind = Tok::Ident;
            }
            tok_.text = s;
            return;
        }
        if (std::isdigit(c)) {
            lex_number(false);
            return;
        }
        switch (c) {
            case '"': {
                bump();
                std::string s;
                while (cur() != '"') {
                    if (cur() == -1) fail("unterminated string literal");
                    if (cur() == '\\') {
                        bump();
                        int e = cur();
                        if (e == 'n') s += '\n';
                        else if (e == 't') s += '\t';
                        else s += char(e);
                        bump();
                        continue;
                    }
                    s += char(cur());
                    bump();
                }
                bump();
                tok_.kind = Tok::Str;
                tok_.text = s;
                return;
            }
            case '-':
                bump();
                if (cur() == '>') {
                    bump();
                    tok_.kind = Tok::Arrow;
                    return;
                }
                if (std::isdigit(cur())) {
                    lex_number(true);
                    return;
                }
                tok_.kind = Tok::Minus;
                return;
            case ':':
                bump();
                if (cur() == '-') {
                    bump();
                    tok_.kind = Tok::ColonDash;
                    return;
                }
                fail("stray ':'");
            case '(': bump(); tok_.kind = Tok::LParen; return;
            case ')': bump(); tok_.kind = Tok::RParen; return;
            case ',': bump(); tok_.kind = Tok::Comma; return;
            case '.': bump(); tok_.kind = Tok::Dot; return;
            case '@': bump(); tok_.kind = Tok::At; return;
            case '#': bump(); tok_.kind = Tok::Hash; return;
            case '+': bump(); tok_.kind = Tok::Plus; return;
            case '*': bump(); tok_.kind = Tok::StarTok; return;
            case '/': bump(); tok_.kind = Tok::Slash; return;
            case '!':
                bump();
                if (cur() == '=') {
                    bump();
                    tok_.kind = Tok::Neq;
                    return;
                }
                tok_.kind = Tok::Bang;
                return;
            case '<':
                bump();
                if (cur() == '=') {
                    bump();
                    tok_.kind = Tok::Le;
                    return;
                }
                tok_.kind = Tok::Lt;
                return;
            case '>':
                bump();
                if (cur() == '=') {
                    bump();
                    tok_.kind = Tok::Ge;
                    return;
                }
                tok_.kind = Tok::Gt;
                return;
            case '=':
                bump();
                tok_.kind = Tok::Eq;
                return;
            default:
                fail(std::string("unexpected character '") + char(c) + "'");
        }
    }

    void lex_number(bool negative) {
        std::string digits;
        while (std::isdigit(cur())) {
            digits += char(cur());
            bump();
        }
        // ISO date: DDDD-DD-DD (only non-negative).
        if (!negative && cur() == '-' && pos_ + 1 < src_.size() &&
            std::isdigit((unsigned char)src_[pos_ + 1])) {
            size_t save_pos = pos_;
            int save_line = line_, save_col = col_;
            bump();
            std::string m;
            while (std::isdigit(cur())) { m += char(cur()); bump(); }
            if (cur() == '-' && m.size() >= 1) {
                bump();
                std::string d;
                while (std::isdigit(cur())) { d += char(cur()); bump(); }
                if (!d.empty()) {
                    tok_.kind = Tok::Date;
                    tok_.date = Date{int32_t(std::atoi(digits.c_str())),
                                     int32_t(std::atoi(m.c_str())),
                                     int32_t(std::atoi(d.c_str()))};
                    return;
                }
            }
            pos_ = save_pos;
            line_ = save_line;
            col_ = save_col;
        }
        if (cur() == '.' && pos_ + 1 < src_.size() &&
            std::isdigit((unsigned char)src_[pos_ + 1])) {
            std::string frac = digits + ".";
            bump();
            while (std::isdigit(cur())) {
                frac += char(cur());
                bump();
            }
            if (cur() == 'e' || cur() == 'E') {
                frac += 'e';
                bump();
                if (cur() == '-' || cur() == '+') { frac += char(cur()); bump(); }
                while (std::isdigit(cur())) { frac += char(cur()); bump(); }
            }
            tok_.kind = Tok::Float;
            tok_.fval = std::strtod(frac.c_str(), nullptr) * (negative ? -1 : 1);
            return;
        }
        tok_.kind = Tok::Int;
        tok_.ival = std::atoll(digits.c_str()) * (negative ? -1 : 1);
    }

    const std::string& src_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

class Parser {
public:
    explicit Parser(const std::string& text) : lex_(text) {}

    ParsedProgram run() {
        while (lex_.peek().kind != Tok::End) clause();
        for (const auto& p : out_.program.inputs)
            if (out_.program.head_predicates().count(p))
                throw ParseError(ParseError::Kind::Syntax, 1, 1,
                                 "@input predicate '" + p + "' is derived by a rule");
        return std::move(out_);
    }

private:
    [[noreturn]] void fail(const Token& at, const std::string& expected) {
        throw ParseError(ParseError::Kind::Syntax, at.line, at.col,
                         "expected " + expected);
    }

    Token expect(Tok k, const std::string& what) {
        if (lex_.peek().kind != k) fail(lex_.peek(), what);
        return lex_.take();
    }

    void check_arity(const std::string& pred, size_t arity, const Token& at) {
        auto [it, inserted] = arities_.emplace(pred, arity);
        if (!inserted && it->second != arity)
            throw ParseError(ParseError::Kind::ArityConflict, at.line, at.col,
                             "predicate '" + pred + "' used with arity " +
                                 std::to_string(arity) + " but declared with " +
                                 std::to_string(it->second));
    }

    void clause() {
        if (lex_.peek().kind == Tok::At) {
            annotation();
            return;
        }
        rule_or_fact();
    }

    void annotation() {
        Token at = expect(Tok::At, "'@'");
        Token name = expect(Tok::Ident, "annotation name");
        if (name.text == "qbind")
            throw ParseError(ParseError::Kind::UnsupportedFeature, name.line, name.col,
                             "qbind: query bindings to external databases are not supported");
        if (name.text != "input" && name.text != "output" && name.text != "bind" &&
            name.text != "post")
            throw ParseError(ParseError::Kind::UnknownAnnotation, name.line, name.col,
                             "unknown annotation @" + name.text);
        expect(Tok::LParen, "'('");
        std::vector<std::string> args;
        args.push_back(expect(Tok::Str, "quoted string").text);
        while (lex_.peek().kind == Tok::Comma) {
            lex_.take();
            args.push_back(expect(Tok::Str, "quoted string").text);
        }
        expect(Tok::RParen, "')'");
        expect(Tok::Dot, "'.'");

        Program& p = out_.program;
        if (name.text == "input") {
            if (args.size() != 1) fail(at, "@input(\"pred\")");
            p.inputs.insert(args[0]);
        } else if (name.text == "output") {
            if (args.size() != 1) fail(at, "@output(\"pred\")");
            p.outputs.insert(args[0]);
        } else if (name.text == "bind") {
            if (args.size() < 3 || args.size() > 4)
                fail(at, "@bind(\"pred\",\"csv\",\"path\"[,\"types\"])");
            if (args[1] != "csv")
                throw ParseError(ParseError::Kind::UnsupportedFeature, at.line, at.col,
                                 "binding kind '" + args[1] + "' (only csv is supported)");
            DataBinding b;
            b.kind = args[1];
            b.path = args[2];
            if (args.size() == 4) {
                std::string cur;
                for (char c : args[3] + ",") {
                    if (c == ',') {
                        if (!cur.empty()) b.column_types.push_back(cur);
                        cur.clear();
                    } else if (!std::isspace((unsigned char)c)) {
                        cur += c;
                    }
                }
            }
            p.bindings[args[0]] = std::move(b);
        } else {  // post
            if (args.size() != 2) fail(at, "@post(\"pred\",\"certain\"|\"sort\")");
            auto& d = p.post_directives[args[0]];
            if (args[1] == "certain") d.certain = true;
            else if (args[1] == "sort") d.sorted = true;
            else fail(at, "\"certain\" or \"sort\"");
        }
    }

    Term term() {
        Token t = lex_.take();
        switch (t.kind) {
            case Tok::Var: return Variable{t.text};
            case Tok::Str: return Value{t.text};
            case Tok::Int: return Value{t.ival};
            case Tok::Float: return Value{t.fval};
            case Tok::Bool: return Value{bool(t.ival)};
            case Tok::Date: return Value{t.date};
            case Tok::Ident:
                fail(t, "a term (bare identifiers are not constants; quote strings)");
            default: fail(t, "a term");
        }
    }

    // Predicate token, optionally in the reserved '#' namespace (written by
    // the rewriter; accepted back so rewritten programs round-trip).
    Token pred_name() {
        if (lex_.peek().kind == Tok::Hash) {
            Token h = lex_.take();
            Token name = expect(Tok::Ident, "predicate name after '#'");
            name.text = "#" + name.text;
            name.line = h.line;
            name.col = h.col;
            return name;
        }
        return expect(Tok::Ident, "predicate name");
    }

    Atom atom_after_name(const Token& name) {
        Atom a;
        a.pred = name.text;
        expect(Tok::LParen, "'('");
        a.args.push_back(term());
        while (lex_.peek().kind == Tok::Comma) {
            lex_.take();
            a.args.push_back(term());
        }
        expect(Tok::RParen, "')'");
        check_arity(a.pred, a.arity(), name);
        return a;
    }

    ExprPtr expr_primary() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::LParen) {
            lex_.take();
            ExprPtr e = expr();
            expect(Tok::RParen, "')'");
            return e;
        }
        return Expr::make(term());
    }

    ExprPtr expr_mul() {
        ExprPtr e = expr_primary();
        while (lex_.peek().kind == Tok::StarTok || lex_.peek().kind == Tok::Slash) {
            auto k = lex_.take().kind == Tok::StarTok ? Expr::Kind::Mul : Expr::Kind::Div;
            e = Expr::make(k, e, expr_primary());
        }
        return e;
    }

    ExprPtr expr() {
        ExprPtr e = expr_mul();
        while (lex_.peek().kind == Tok::Plus || lex_.peek().kind == Tok::Minus) {
            auto k = lex_.take().kind == Tok::Plus ? Expr::Kind::Add : Expr::Kind::Sub;
            e = Expr::make(k, e, expr_mul());
        }
        return e;
    }

    std::optional<CmpOp> cmp_op() {
        switch (lex_.peek().kind) {
            case Tok::Lt: lex_.take(); return CmpOp::Lt;
            case Tok::Gt: lex_.take(); return CmpOp::Gt;
            case Tok::Le: lex_.take(); return CmpOp::Le;
            case Tok::Ge: lex_.take(); return CmpOp::Ge;
            case Tok::Neq: lex_.take(); return CmpOp::Ne;
            case Tok::Eq: lex_.take(); return CmpOp::Eq;
            default: return std::nullopt;
        }
    }

    // One body item: atom, condition, aggregation or skolem assignment.
    void body_item(Rule& r) {
        const Token& t = lex_.peek();
        if (t.kind == Tok::Bang)
            throw ParseError(ParseError::Kind::UnsupportedFeature, t.line, t.col,
                             "negation");
        if (t.kind == Tok::Ident && t.text == "not")
            throw ParseError(ParseError::Kind::UnsupportedFeature, t.line, t.col,
                             "negation");
        if (t.kind == Tok::Ident || t.kind == Tok::Hash) {
            r.body.push_back(atom_after_name(pred_name()));
            return;
        }
        if (t.kind == Tok::Var) {
            // Could be an assignment `V = msum(...)`, `V = #f(...)` or a
            // comparison whose left side starts with a variable.
            Token v = lex_.take();
            if (lex_.peek().kind == Tok::Eq) {
                lex_.take();
                if (lex_.peek().kind == Tok::Hash) {
                    lex_.take();
                    Token fn = expect(Tok::Ident, "skolem function name");
                    expect(Tok::LParen, "'('");
                    SkolemSpec sk;
                    sk.func = fn.text;
                    if (lex_.peek().kind != Tok::RParen) {
                        sk.args.push_back(expect(Tok::Var, "variable").text);
                        while (lex_.peek().kind == Tok::Comma) {
                            lex_.take();
                            sk.args.push_back(expect(Tok::Var, "variable").text);
                        }
                    }
                    expect(Tok::RParen, "')'");
                    r.skolems[v.text] = std::move(sk);
                    return;
                }
                if (lex_.peek().kind == Tok::Ident &&
                    (lex_.peek().text == "msum" || lex_.peek().text == "mcount" ||
                     lex_.peek().text == "mmin" || lex_.peek().text == "mmax")) {
                    Token fn = lex_.take();
                    if (r.aggregation)
                        fail(fn, "at most one aggregation per rule");
                    Aggregation g;
                    g.target = v.text;
                    g.func = fn.text == "msum"   ? AggFunc::MSum
                             : fn.text == "mcount" ? AggFunc::MCount
                             : fn.text == "mmin"   ? AggFunc::MMin
                                                   : AggFunc::MMax;
                    expect(Tok::LParen, "'('");
                    g.arg = expect(Tok::Var, "aggregated variable").text;
                    if (lex_.peek().kind == Tok::Comma) {
                        lex_.take();
                        expect(Tok::Lt, "'<'");
                        g.contributors.push_back(expect(Tok::Var, "variable").text);
                        while (lex_.peek().kind == Tok::Comma) {
                            lex_.take();
                            g.contributors.push_back(expect(Tok::Var, "variable").text);
                        }
                        expect(Tok::Gt, "'>'");
                    }
                    expect(Tok::RParen, "')'");
                    r.aggregation = std::move(g);
                    return;
                }
                // Plain equality condition V = expr.
                Condition c;
                c.lhs = Expr::make(Variable{v.text});
                c.op = CmpOp::Eq;
                c.rhs = expr();
                r.conditions.push_back(std::move(c));
                return;
            }
            // Comparison with an expression left side starting at v.
            ExprPtr lhs = Expr::make(Variable{v.text});
            while (lex_.peek().kind == Tok::Plus || lex_.peek().kind == Tok::Minus ||
                   lex_.peek().kind == Tok::StarTok || lex_.peek().kind == Tok::Slash) {
                auto k = lex_.take().kind;
                auto ek = k == Tok::Plus    ? Expr::Kind::Add
                          : k == Tok::Minus ? Expr::Kind::Sub
                          : k == Tok::StarTok ? Expr::Kind::Mul
                                              : Expr::Kind::Div;
                lhs = Expr::make(ek, lhs, expr_mul());
            }
            auto op = cmp_op();
            if (!op) fail(lex_.peek(), "comparison operator");
            Condition c;
            c.lhs = lhs;
            c.op = *op;
            c.rhs = expr();
            r.conditions.push_back(std::move(c));
            return;
        }
        // Constant-led condition, e.g. `0.5 < V`.
        ExprPtr lhs = expr();
        auto op = cmp_op();
        if (!op) fail(lex_.peek(), "comparison operator");
        Condition c;
        c.lhs = lhs;
        c.op = *op;
        c.rhs = expr();
        r.conditions.push_back(std::move(c));
    }

    void rule_or_fact() {
        if (lex_.peek().kind != Tok::Ident && lex_.peek().kind != Tok::Hash)
            fail(lex_.peek(), "predicate, annotation or comment");
        Token name = pred_name();
        Rule r;
        r.id = next_rule_id_;
        r.span = SourceSpan{name.line, name.col};

        // First item must be an atom for both facts and rules.
        r.body.push_back(atom_after_name(name));
        if (lex_.peek().kind == Tok::Dot) {
            lex_.take();
            const Atom& a = r.body[0];
            for (const auto& t : a.args)
                if (is_variable(t))
                    fail(name, "ground arguments in a fact clause");
            out_.inline_facts[a.pred].push_back(to_fact(a));
            return;
        }
        if (lex_.peek().kind == Tok::ColonDash)
            fail(lex_.peek(), "'->' (rules are written body -> head)");

        while (lex_.peek().kind == Tok::Comma) {
            lex_.take();
            body_item(r);
        }
        if (lex_.peek().kind == Tok::ColonDash)
            fail(lex_.peek(), "'->' (rules are written body -> head)");
        expect(Tok::Arrow, "'->'");

        // Head: atoms; an equality here would be an egd, which is rejected.
        for (;;) {
            Token ht = lex_.peek();
            if (ht.kind == Tok::Var)
                throw ParseError(ParseError::Kind::UnsupportedFeature, ht.line, ht.col,
                                 "egd: equality-generating dependencies are not supported");
            if (ht.kind != Tok::Ident && ht.kind != Tok::Hash)
                fail(ht, "head atom");
            Token hname = pred_name();
            if (hname.text == "false" || hname.text == "bottom")
                throw ParseError(ParseError::Kind::UnsupportedFeature, hname.line,
                                 hname.col, "egd: constraints are not supported");
            r.head.push_back(atom_after_name(hname));
            if (lex_.peek().kind == Tok::Comma) {
                lex_.take();
                continue;
            }
            break;
        }
        expect(Tok::Dot, "'.'");

        // Head-only variables that are not aggregation or skolem targets are
        // existentials.
        std::set<std::string> body_vars = r.body_variables();
        for (const auto& [var, sk] : r.skolems) body_vars.insert(var);
        if (r.aggregation) body_vars.insert(r.aggregation->target);
        for (const auto& v : r.head_variables())
            if (!body_vars.count(v)) r.existentials.insert(v);

        r.id = next_rule_id_++;
        out_.program.rules.push_back(std::move(r));
    }

    Lexer lex_;
    ParsedProgram out_;
    std::map<std::string, size_t> arities_;
    int next_rule_id_ = 1;
};

}  // namespace

ParsedProgram parse_program(const std::string& text, const std::string&) {
    return Parser(text).run();
}

std::string format_program(const Program& program, const Database& inline_facts) {
    std::string s;
    for (const auto& p : program.inputs) s += "@input(\"" + p + "\").\n";
    for (const auto& p : program.outputs) s += "@output(\"" + p + "\").\n";
    for (const auto& [pred, b] : program.bindings) {
        s += "@bind(\"" + pred + "\",\"" + b.kind + "\",\"" + b.path + "\"";
        if (!b.column_types.empty()) {
            s += ",\"";
            for (size_t i = 0; i < b.column_types.size(); ++i) {
                if (i) s += ",";
                s += b.column_types[i];
            }
            s += "\"";
        }
        s += ").\n";
    }
    for (const auto& [pred, d] : program.post_directives) {
        if (d.certain) s += "@post(\"" + pred + "\",\"certain\").\n";
        if (d.sorted) s += "@post(\"" + pred + "\",\"sort\").\n";
    }
    for (const auto& r : program.rules) s += to_string(r) + "\n";
    for (const auto& [pred, facts] : inline_facts) {
        (void)pred;
        for (const auto& f : facts) {
            std::string fs = f.pred + "(";
            for (size_t i = 0; i < f.args.size(); ++i) {
                if (i) fs += ",";
                const auto& t = f.args[i];
                if (const auto* v = std::get_if<Value>(&t);
                    v && std::holds_alternative<std::string>(*v))
                    fs += "\"" + std::get<std::string>(*v) + "\"";
                else
                    fs += to_string(t);
            }
            s += fs + ").\n";
        }
    }
    return s;
}

}  // namespace warden
