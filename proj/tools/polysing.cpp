#include "polysing/runtime.hpp"
#include "polysing/surface.hpp"
#include "polysing/typealgebra.hpp"
#include "polysing/typecheck.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

using nlohmann::json;
using namespace polysing;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTypeError = 1;
constexpr int kExitOperandError = 1;
constexpr int kExitParseError = 2;
constexpr int kExitInternal = 3;
constexpr int kExitViolation = 4;
constexpr int kExitRunBudget = 5;

long effective_budget(long cli_budget) {
    if (const char* env = std::getenv("POLYSING_BUDGET")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v > 0) return v;
        std::cerr << "warning: ignoring malformed POLYSING_BUDGET value '" << env << "'\n";
    }
    return cli_budget;
}

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void print_diagnostics(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags) std::cerr << d.to_text() << "\n";
}

json diagnostics_json(const std::vector<Diagnostic>& diags) {
    json arr = json::array();
    for (const auto& d : diags) {
        arr.push_back(json{{"severity", d.severity == Diagnostic::Severity::Error     ? "error"
                                        : d.severity == Diagnostic::Severity::Warning ? "warning"
                                                                                      : "note"},
                           {"code", d.code},
                           {"file", d.file},
                           {"line", d.span.line},
                           {"col", d.span.col},
                           {"message", d.message}});
    }
    return arr;
}

std::optional<Program> load_program(const std::string& path, int parse_exit, int& exit_code) {
    std::optional<std::string> text = read_file(path);
    if (!text) {
        std::cerr << "error: cannot read '" << path << "'\n";
        exit_code = parse_exit;
        return std::nullopt;
    }
    ParseResult pr = parse_program(*text, path);
    if (!pr.ok()) {
        print_diagnostics(pr.diagnostics);
        exit_code = parse_exit;
        return std::nullopt;
    }
    return std::move(*pr.program);
}

json name_list_json(const std::vector<Name>& names) {
    json arr = json::array();
    for (const auto& n : names) arr.push_back(n.id);
    return arr;
}

int cmd_check(const std::string& path, const std::string& format, long budget) {
    int exit_code = kExitOk;
    std::optional<Program> prog = load_program(path, kExitParseError, exit_code);
    if (!prog) return exit_code;
    CheckOptions opts;
    opts.limits.budget = budget;
    ProgramCheckResult result = check_program(*prog, opts);
    bool internal = false;
    for (const auto& d : result.diagnostics)
        if (d.code == "I001") internal = true;
    if (format == "json") {
        json out{{"file", path}, {"ok", result.ok}, {"diagnostics", diagnostics_json(result.diagnostics)}};
        std::cout << out.dump() << "\n";
    } else {
        print_diagnostics(result.diagnostics);
        std::cout << (result.ok ? "ok" : "type error") << "\n";
    }
    if (internal) return kExitInternal;
    return result.ok ? kExitOk : kExitTypeError;
}

int cmd_run(const std::string& path, std::uint64_t seed, std::uint64_t steps, bool monitor_flag,
            const std::string& format) {
    int exit_code = kExitOk;
    std::optional<Program> prog = load_program(path, kExitParseError, exit_code);
    if (!prog) return exit_code;
    if (!prog->entry) {
        std::cerr << "error: '" << path << "' declares no zero-parameter proc Main\n";
        return kExitParseError;
    }
    System sys;
    sys.process = *prog->entry;
    RunResult result = run(sys, seed, steps, monitor_flag);
    if (format == "json") {
        for (const auto& ev : result.trace) {
            json line{{"step", ev.step},
                      {"rule", ev.rule},
                      {"subjects", name_list_json(ev.subjects)},
                      {"tag", ev.tag ? json(*ev.tag) : json(nullptr)},
                      {"verdict", verdict_name(ev.verdict)}};
            std::cout << line.dump() << "\n";
        }
        json report{{"verdict", verdict_name(result.report.verdict)},
                    {"witness", name_list_json(result.report.witness)},
                    {"step", result.report.step}};
        std::cout << report.dump() << "\n";
    } else {
        for (const auto& ev : result.trace) {
            std::cout << ev.step << " " << ev.rule;
            if (ev.tag) std::cout << " " << *ev.tag;
            if (!ev.subjects.empty()) {
                std::cout << " [";
                for (std::size_t i = 0; i < ev.subjects.size(); ++i)
                    std::cout << (i ? " " : "") << ev.subjects[i].id;
                std::cout << "]";
            }
            std::cout << "\n";
        }
        std::cout << "verdict: " << verdict_name(result.report.verdict);
        if (!result.report.witness.empty()) {
            std::cout << " witness:";
            for (const auto& n : result.report.witness) std::cout << " " << n.id;
        }
        std::cout << " step: " << result.report.step << "\n";
    }
    if (result.report.verdict == Verdict::BudgetExhausted) return kExitRunBudget;
    if (verdict_is_violation(result.report.verdict)) return kExitViolation;
    return kExitOk;
}

std::optional<TypePtr> operand(const Program& prog, const std::string& text, int& exit_code) {
    std::vector<Diagnostic> diags;
    std::optional<TypePtr> t = parse_type_operand(prog, text, diags);
    if (!t) {
        print_diagnostics(diags);
        std::cerr << "error: cannot parse type operand '" << text << "'\n";
        exit_code = kExitOperandError;
    }
    return t;
}

int cmd_subtype(const std::string& path, const std::string& t1, const std::string& t2,
                long budget) {
    int exit_code = kExitOk;
    std::optional<Program> prog = load_program(path, kExitOperandError, exit_code);
    if (!prog) return exit_code;
    std::optional<TypePtr> a = operand(*prog, t1, exit_code);
    std::optional<TypePtr> b = operand(*prog, t2, exit_code);
    if (!a || !b) return exit_code;
    AlgebraLimits limits{budget};
    try {
        std::cout << (subtype(BoundEnv{}, *a, *b, limits) ? "true" : "false") << "\n";
        return kExitOk;
    } catch (const BudgetExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const TypeAlgebraError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOperandError;
    }
}

int cmd_unary(const std::string& kind, const std::string& path, const std::string& t1,
              long budget) {
    int exit_code = kExitOk;
    std::optional<Program> prog = load_program(path, kExitOperandError, exit_code);
    if (!prog) return exit_code;
    std::optional<TypePtr> a = operand(*prog, t1, exit_code);
    if (!a) return exit_code;
    AlgebraLimits limits{budget};
    try {
        if (kind == "dual") {
            std::cout << print_type(dual(*a, limits)) << "\n";
        } else if (kind == "weight") {
            std::cout << weight(BoundEnv{}, *a, limits).to_string() << "\n";
        } else { // wf
            WfReport r = well_formed(*a, {}, {});
            std::cout << (r.ok ? "true" : "false") << "\n";
            if (!r.ok) std::cerr << "note: " << r.message << "\n";
        }
        return kExitOk;
    } catch (const BudgetExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const TypeAlgebraError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOperandError;
    }
}

int cmd_tail(const std::string& path, const std::string& t1, const std::vector<std::string>& specs,
             long budget) {
    int exit_code = kExitOk;
    std::optional<Program> prog = load_program(path, kExitOperandError, exit_code);
    if (!prog) return exit_code;
    std::optional<TypePtr> a = operand(*prog, t1, exit_code);
    if (!a) return exit_code;
    std::vector<MsgSpec> parsed;
    for (const auto& s : specs) {
        MsgSpec spec;
        auto paren = s.find('(');
        if (paren == std::string::npos) {
            spec.tag = s;
        } else {
            if (s.back() != ')') {
                std::cerr << "error: malformed message spec '" << s << "'\n";
                return kExitOperandError;
            }
            spec.tag = s.substr(0, paren);
            std::string inner = s.substr(paren + 1, s.size() - paren - 2);
            if (!inner.empty()) {
                std::optional<TypePtr> at = operand(*prog, inner, exit_code);
                if (!at) return exit_code;
                spec.arg_type = *at;
            }
        }
        if (spec.tag.empty()) {
            std::cerr << "error: malformed message spec '" << s << "'\n";
            return kExitOperandError;
        }
        parsed.push_back(std::move(spec));
    }
    AlgebraLimits limits{budget};
    try {
        TailResult r = tail(*a, parsed, limits);
        if (const auto* fail = std::get_if<TailFailure>(&r)) {
            std::cout << "failure: " << fail->message << "\n";
        } else {
            std::cout << print_type(std::get<TypePtr>(r)) << "\n";
        }
        return kExitOk;
    } catch (const BudgetExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const TypeAlgebraError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOperandError;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"polysing: session-typed calculus with bounded-polymorphic endpoint types"};
    app.require_subcommand(1);

    long budget = 10000;
    app.add_option("--budget", budget, "step budget for the type algebra")
        ->check(CLI::PositiveNumber);

    std::string file, format = "text", t1, t2;
    std::uint64_t seed = 0, steps = 10000;
    bool monitor_flag = false;
    std::vector<std::string> specs;

    CLI::App* check = app.add_subcommand("check", "type check every declaration of a file");
    check->add_option("file", file)->required();
    check->add_option("--format", format)->check(CLI::IsMember({"text", "json"}));

    CLI::App* runc = app.add_subcommand("run", "execute the Main system of a file");
    runc->add_option("file", file)->required();
    runc->add_option("--seed", seed);
    runc->add_option("--steps", steps);
    runc->add_flag("--monitor", monitor_flag, "check for faults, leaks and isolation per step");
    runc->add_option("--format", format)->check(CLI::IsMember({"text", "json"}));

    CLI::App* sub = app.add_subcommand("subtype", "decide T1 <= T2");
    sub->add_option("file", file)->required();
    sub->add_option("t1", t1)->required();
    sub->add_option("t2", t2)->required();

    CLI::App* dualc = app.add_subcommand("dual", "print the dual of an endpoint type");
    dualc->add_option("file", file)->required();
    dualc->add_option("t1", t1)->required();

    CLI::App* weightc = app.add_subcommand("weight", "print the weight of a type");
    weightc->add_option("file", file)->required();
    weightc->add_option("t1", t1)->required();

    CLI::App* wfc = app.add_subcommand("wf", "decide well-formedness of a type");
    wfc->add_option("file", file)->required();
    wfc->add_option("t1", t1)->required();

    CLI::App* tailc = app.add_subcommand("tail", "residual type after queued messages");
    tailc->add_option("file", file)->required();
    tailc->add_option("t1", t1)->required();
    tailc->add_option("specs", specs, "message specs like m(T) or m");

    CLI11_PARSE(app, argc, argv);
    budget = effective_budget(budget);

    if (check->parsed()) return cmd_check(file, format, budget);
    if (runc->parsed()) return cmd_run(file, seed, steps, monitor_flag, format);
    if (sub->parsed()) return cmd_subtype(file, t1, t2, budget);
    if (dualc->parsed()) return cmd_unary("dual", file, t1, budget);
    if (weightc->parsed()) return cmd_unary("weight", file, t1, budget);
    if (wfc->parsed()) return cmd_unary("wf", file, t1, budget);
    if (tailc->parsed()) return cmd_tail(file, t1, specs, budget);
    return kExitOperandError;
}
