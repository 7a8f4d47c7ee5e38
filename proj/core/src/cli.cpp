#include "warden/cli.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "warden/analysis.hpp"
#include "warden/bench.hpp"
#include "warden/chase.hpp"
#include "warden/engine.hpp"
#include "warden/io.hpp"
#include "warden/model.hpp"
#include "warden/parser.hpp"
#include "warden/rewrite.hpp"

namespace warden {

namespace {

namespace fs = std::filesystem;

struct LoadedTask {
    ReasoningTask task;
    ParsedProgram parsed;
};

LoadedTask load_task(const std::string& program_path,
                     const std::vector<std::string>& bind_overrides) {
    LoadedTask lt;
    lt.parsed = parse_program(read_file(program_path), program_path);
    lt.task.program = lt.parsed.program;
    lt.task.database = lt.parsed.inline_facts;

    std::map<std::string, std::string> overrides;
    for (const auto& ov : bind_overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw IoError("--bind expects pred=path, got '" + ov + "'");
        overrides[ov.substr(0, eq)] = ov.substr(eq + 1);
    }

    fs::path base = fs::path(program_path).parent_path();
    std::map<std::string, size_t> arities = lt.task.program.predicates();
    for (auto& [pred, binding] : lt.task.program.bindings) {
        CsvBinding b;
        b.pred = pred;
        b.path = binding.path;
        b.column_types = binding.column_types;
        if (overrides.count(pred)) b.path = overrides[pred];
        if (!fs::path(b.path).is_absolute() && !fs::exists(b.path) &&
            fs::exists(base / b.path))
            b.path = (base / b.path).string();
        auto& rows = lt.task.database[pred];
        size_t arity = arities.count(pred) ? arities[pred] : 0;
        load_csv(b, [&](Fact f) {
            if (arity && f.args.size() != arity)
                throw IoError(pred + ": row arity " + std::to_string(f.args.size()) +
                              " does not match predicate arity " + std::to_string(arity));
            rows.push_back(std::move(f));
        });
    }
    for (const auto& [pred, path] : overrides) {
        if (lt.task.program.bindings.count(pred)) continue;
        CsvBinding b;
        b.pred = pred;
        b.path = path;
        auto& rows = lt.task.database[pred];
        load_csv(b, [&](Fact f) { rows.push_back(std::move(f)); });
    }
    return lt;
}

int cmd_check(const std::string& path, std::ostream& out) {
    ParsedProgram parsed = parse_program(read_file(path), path);
    WardednessReport rep = check_warded(parsed.program);
    int harmful = 0;
    std::vector<int> harmful_ids;
    for (const auto& [id, rr] : rep.per_rule)
        if (rr.kind == RuleKind::HarmfulJoin) {
            ++harmful;
            harmful_ids.push_back(id);
        }
    std::string verdict = rep.verdict == Verdict::NotWarded      ? "not warded"
                          : rep.verdict == Verdict::HarmlessWarded ? "warded; harmless"
                                                                   : "warded";
    out << verdict;
    if (harmful) {
        out << "; " << harmful << " harmful join" << (harmful > 1 ? "s" : "") << " (rule";
        if (harmful > 1) out << "s";
        for (size_t i = 0; i < harmful_ids.size(); ++i)
            out << (i ? ", " : " ") << harmful_ids[i];
        out << ")";
    }
    out << "\n" << rep.to_json() << "\n";
    return rep.warded() ? 0 : 2;
}

int cmd_rewrite(const std::string& path, const std::string& out_path,
                const std::string& trace_path, std::ostream& out) {
    ParsedProgram parsed = parse_program(read_file(path), path);
    RewriteResult res = rewrite_program(parsed.program);
    std::string text = format_program(res.program, parsed.inline_facts);
    if (out_path.empty())
        out << text;
    else
        write_file(out_path, text);
    if (!trace_path.empty()) write_file(trace_path, res.trace.to_json());
    return 0;
}

struct ReasonOptions {
    std::string program;
    std::vector<std::string> binds;
    std::string out_dir = ".";
    bool certain = false;
    bool sorted = false;
    size_t cap = 0;
    std::string strategy = "full";
    bool no_opt = false;
    std::string stats_path;
    std::string dot_prefix;
    bool write_outputs = true;
};

int cmd_reason(const ReasonOptions& opt, std::ostream& out) {
    LoadedTask lt = load_task(opt.program, opt.binds);

    RewriteResult rw = rewrite_program(lt.task.program);
    Pipeline pipe = compile(rw.program);
    if (!opt.no_opt) pipe = optimize(pipe, lt.task.database);

    EngineConfig cfg;
    cfg.trivial_strategy = opt.strategy == "naive";
    cfg.fact_cap = opt.cap;
    cfg.collect_records = !opt.dot_prefix.empty();
    RunResult res = run(pipe, lt.task.database, cfg);

    if (opt.write_outputs) {
        fs::create_directories(opt.out_dir);
        for (const auto& [pred, facts] : res.outputs) {
            OutputDirectives d;
            auto it = lt.task.program.post_directives.find(pred);
            if (it != lt.task.program.post_directives.end()) {
                d.certain = it->second.certain;
                d.sorted = it->second.sorted;
            }
            d.certain |= opt.certain;
            d.sorted |= opt.sorted;
            write_output((fs::path(opt.out_dir) / (pred + ".csv")).string(), facts, d);
        }
    }
    if (!opt.dot_prefix.empty()) {
        ForestSnapshot snap = forest_snapshot(res.records, res.pinned_constants);
        write_file(opt.dot_prefix + ".warded.dot", snap.warded_dot());
        write_file(opt.dot_prefix + ".lifted.dot", snap.lifted_dot());
    }
    std::string stats = res.stats.to_json();
    if (!opt.stats_path.empty())
        write_file(opt.stats_path, stats);
    else
        out << stats << "\n";
    return 0;
}

int cmd_gen(const std::string& kind, char profile, int rules, size_t n, double alpha,
            double beta, double gamma, uint64_t seed, int facts,
            const std::string& out_dir, std::ostream& out) {
    fs::create_directories(out_dir);
    if (kind == "iwarded") {
        ScenarioSpec spec = synth_profile(profile, rules, seed);
        spec.facts_per_input = facts;
        ReasoningTask task = gen_warded(spec);
        for (const auto& [pred, rows] : task.database) {
            std::string file = pred + ".csv";
            write_output((fs::path(out_dir) / file).string(), rows, {});
            task.program.bindings[pred] = DataBinding{"csv", file, {}};
        }
        write_file((fs::path(out_dir) / "program.vada").string(),
                   format_program(task.program));
        out << "wrote " << out_dir << "/program.vada (" << task.program.rules.size()
            << " rules)\n";
        return 0;
    }
    if (kind == "ownership") {
        GraphSpec spec;
        spec.n = n;
        spec.alpha = alpha;
        spec.beta = beta;
        spec.gamma = gamma;
        spec.seed = seed;
        Database db = gen_ownership(spec);
        for (const auto& [pred, rows] : db)
            write_output((fs::path(out_dir) / (pred + ".csv")).string(), rows, {});
        out << "wrote " << out_dir << "/control.csv and own.csv ("
            << db.at("control").size() << " edges)\n";
        return 0;
    }
    throw IoError("unknown generator kind '" + kind + "'");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"warden: a reasoner for warded existential rules"};
    app.require_subcommand(1);

    std::string program, out_path, trace_path;
    auto* check = app.add_subcommand("check", "wardedness report for a program");
    check->add_option("program", program, "rule file (.vada)")->required();

    auto* rewrite = app.add_subcommand("rewrite", "normalize and eliminate harmful joins");
    rewrite->add_option("program", program, "rule file (.vada)")->required();
    rewrite->add_option("-o,--out", out_path, "write the rewritten program here");
    rewrite->add_option("--trace", trace_path, "write the rewrite trace (json)");

    ReasonOptions ropt;
    auto add_reason_opts = [&](CLI::App* cmd) {
        cmd->add_option("program", ropt.program, "rule file (.vada)")->required();
        cmd->add_option("--bind", ropt.binds, "override a binding: pred=path");
        cmd->add_option("--out", ropt.out_dir, "output directory");
        cmd->add_flag("--certain", ropt.certain, "drop facts with labeled nulls");
        cmd->add_flag("--sorted", ropt.sorted, "sort output rows");
        cmd->add_option("--cap", ropt.cap, "abort after this many admitted facts");
        cmd->add_option("--strategy", ropt.strategy, "full|naive")
            ->check(CLI::IsMember({"full", "naive"}));
        cmd->add_flag("--no-opt", ropt.no_opt, "disable the execution optimizer");
        cmd->add_option("--stats", ropt.stats_path, "write stats json here");
    };
    auto* reason = app.add_subcommand("reason", "run a reasoning task");
    add_reason_opts(reason);

    auto* trace = app.add_subcommand("trace", "run and export forest DOT files");
    trace->add_option("program", ropt.program, "rule file (.vada)")->required();
    trace->add_option("--bind", ropt.binds, "override a binding: pred=path");
    std::string dot_prefix = "trace";
    trace->add_option("--dot", dot_prefix, "output prefix for .dot files");

    std::string gen_kind;
    char gen_profile = 'A';
    int gen_rules = 50;
    size_t gen_n = 1000;
    double gen_alpha = 0.71, gen_beta = 0.09, gen_gamma = 0.20;
    uint64_t gen_seed = 1;
    int gen_facts = 20;
    std::string gen_out = "generated";
    auto* gen = app.add_subcommand("gen", "generate fixtures");
    gen->add_option("kind", gen_kind, "iwarded|ownership")
        ->required()
        ->check(CLI::IsMember({"iwarded", "ownership"}));
    gen->add_option("--profile", gen_profile, "scenario profile A..H");
    gen->add_option("--rules", gen_rules, "rule count");
    gen->add_option("--n", gen_n, "graph node count");
    gen->add_option("--alpha", gen_alpha, "new-node-by-indegree probability");
    gen->add_option("--beta", gen_beta, "edge-between-existing probability");
    gen->add_option("--gamma", gen_gamma, "new-node-by-outdegree probability");
    gen->add_option("--seed", gen_seed, "random seed");
    gen->add_option("--facts", gen_facts, "facts per input predicate");
    gen->add_option("--out", gen_out, "output directory");

    std::vector<std::string> argv = args;
    try {
        std::vector<const char*> cargv;
        cargv.push_back("warden");
        for (const auto& a : argv) cargv.push_back(a.c_str());
        app.parse(int(cargv.size()), cargv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << e.what() << "\n";
        return 1;
    }

    try {
        if (check->parsed()) return cmd_check(program, out);
        if (rewrite->parsed()) return cmd_rewrite(program, out_path, trace_path, out);
        if (reason->parsed()) return cmd_reason(ropt, out);
        if (trace->parsed()) {
            ropt.dot_prefix = dot_prefix;
            ropt.write_outputs = false;
            return cmd_reason(ropt, out);
        }
        if (gen->parsed())
            return cmd_gen(gen_kind, gen_profile, gen_rules, gen_n, gen_alpha, gen_beta,
                           gen_gamma, gen_seed, gen_facts, gen_out, out);
    } catch (const ParseError& e) {
        err << e.what() << "\n";
        return 2;
    } catch (const NotWardedError& e) {
        err << e.what() << "\n";
        return 2;
    } catch (const NotHarmlessWarded& e) {
        err << e.what() << "\n";
        return 2;
    } catch (const CsvTypeError& e) {
        err << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        err << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return 1;
    }
    err << "no subcommand\n";
    return 1;
}

}  // namespace warden
