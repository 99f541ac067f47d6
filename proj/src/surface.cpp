#include "polysing/surface.hpp"

#include <cctype>
#include <functional>
#include <set>
#include <sstream>

namespace polysing {

std::string Diagnostic::to_text() const {
    const char* sev = severity == Severity::Error     ? "error"
                      : severity == Severity::Warning ? "warning"
                                                      : "note";
    std::ostringstream os;
    os << sev << " " << code << " " << file << ":" << span.line << ":" << span.col << " "
       << message;
    return os.str();
}

const TypeDef* Program::find_type(const std::string& name) const {
    for (const auto& d : type_defs)
        if (d.name == name) return &d;
    return nullptr;
}

const ProcDef* Program::find_proc(const std::string& name) const {
    for (const auto& d : proc_defs)
        if (d.name == name) return &d;
    return nullptr;
}

namespace {

enum class Tok {
    Ident,
    KwDef,
    KwProc,
    KwBase,
    KwRec,
    KwOpen,
    KwClose,
    KwDual,
    KwEnd,
    KwTop,
    Zero,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Lt,
    Gt,
    Comma,
    Dot,
    Colon,
    Bang,
    Question,
    Plus,
    Amp,
    Equals,
    ParPar,   // ||
    OPlus,    // (+)
    SubtypeOf, // <:
    AmpBrace, // &{
    PlusBrace, // +{
    End
};

struct Token {
    Tok kind;
    std::string text;
    Span span;
};

struct Lexer {
    std::string_view src;
    std::string file;
    std::size_t pos = 0;
    int line = 1, col = 1;
    std::vector<Diagnostic> errors;

    void advance(std::size_t n) {
        for (std::size_t i = 0; i < n && pos < src.size(); ++i, ++pos) {
            if (src[pos] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    }

    std::vector<Token> run() {
        std::vector<Token> out;
        while (pos < src.size()) {
            char c = src[pos];
            if (c == '#') {
                while (pos < src.size() && src[pos] != '\n') advance(1);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance(1);
                continue;
            }
            Span sp{line, col, line, col};
            auto emit = [&](Tok k, std::string text, std::size_t len) {
                advance(len);
                sp.end_line = line;
                sp.end_col = col;
                out.push_back(Token{k, std::move(text), sp});
            };
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t j = pos;
                while (j < src.size() &&
                       (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' ||
                        src[j] == '\''))
                    ++j;
                std::string word(src.substr(pos, j - pos));
                Tok k = Tok::Ident;
                if (word == "def") k = Tok::KwDef;
                else if (word == "proc") k = Tok::KwProc;
                else if (word == "base") k = Tok::KwBase;
                else if (word == "rec") k = Tok::KwRec;
                else if (word == "open") k = Tok::KwOpen;
                else if (word == "close") k = Tok::KwClose;
                else if (word == "dual") k = Tok::KwDual;
                else if (word == "end") k = Tok::KwEnd;
                else if (word == "Top") k = Tok::KwTop;
                emit(k, word, word.size());
                continue;
            }
            if (c == '0') {
                emit(Tok::Zero, "0", 1);
                continue;
            }
            auto starts = [&](std::string_view s) { return src.substr(pos, s.size()) == s; };
            if (starts("(+)")) { emit(Tok::OPlus, "(+)", 3); continue; }
            if (starts("||")) { emit(Tok::ParPar, "||", 2); continue; }
            if (starts("<:")) { emit(Tok::SubtypeOf, "<:", 2); continue; }
            if (starts("&{")) { emit(Tok::AmpBrace, "&{", 2); continue; }
            if (starts("+{")) { emit(Tok::PlusBrace, "+{", 2); continue; }
            switch (c) {
            case '(': emit(Tok::LParen, "(", 1); continue;
            case ')': emit(Tok::RParen, ")", 1); continue;
            case '{': emit(Tok::LBrace, "{", 1); continue;
            case '}': emit(Tok::RBrace, "}", 1); continue;
            case '<': emit(Tok::Lt, "<", 1); continue;
            case '>': emit(Tok::Gt, ">", 1); continue;
            case ',': emit(Tok::Comma, ",", 1); continue;
            case '.': emit(Tok::Dot, ".", 1); continue;
            case ':': emit(Tok::Colon, ":", 1); continue;
            case '!': emit(Tok::Bang, "!", 1); continue;
            case '?': emit(Tok::Question, "?", 1); continue;
            case '+': emit(Tok::Plus, "+", 1); continue;
            case '&': emit(Tok::Amp, "&", 1); continue;
            case '=': emit(Tok::Equals, "=", 1); continue;
            default:
                errors.push_back(Diagnostic{Diagnostic::Severity::Error, "P001",
                                            std::string("unexpected character '") + c + "'", file,
                                            sp});
                advance(1);
                continue;
            }
        }
        out.push_back(Token{Tok::End, "", Span{line, col, line, col}});
        return out;
    }
};

class ParseError {};

/// Renames every binder so it is distinct from `avoid`, from the term's
/// free names, and from every other binder.
ProcPtr freshen_process(const ProcPtr& body, const std::set<std::string>& avoid) {
    auto used = std::make_shared<std::set<std::string>>(avoid);
    for (const auto& n : free_names(body)) used->insert(n.id);
    auto counter = std::make_shared<int>(0);
    auto fresh_of = [used, counter](const std::string& base) -> std::string {
        std::string cand = base;
        while (!used->insert(cand).second) cand = base + "_" + std::to_string(++*counter);
        return cand;
    };

    std::function<ProcPtr(const ProcPtr&, std::map<Name, Name>, std::map<std::string, std::string>)>
        walk = [&](const ProcPtr& p, std::map<Name, Name> names,
                   std::map<std::string, std::string> pvars) -> ProcPtr {
        auto ren = [&](const Name& n) {
            auto it = names.find(n);
            return it != names.end() ? it->second : n;
        };
        return std::visit(
            [&](const auto& node) -> ProcPtr {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, PIdle>) {
                    return p;
                } else if constexpr (std::is_same_v<T, PProcVar>) {
                    auto it = pvars.find(node.var);
                    return it != pvars.end() ? proc_var(it->second, p->span) : p;
                } else if constexpr (std::is_same_v<T, PClose>) {
                    return proc_close(ren(node.subject), p->span);
                } else if constexpr (std::is_same_v<T, POpen>) {
                    Name na = location(fresh_of(node.binder_a.id));
                    Name nb = location(fresh_of(node.binder_b.id));
                    auto inner = names;
                    inner[node.binder_a] = na;
                    inner[node.binder_b] = nb;
                    return proc_open(na, nb, node.annotation, walk(node.body, inner, pvars),
                                     p->span);
                } else if constexpr (std::is_same_v<T, PSend>) {
                    std::optional<Name> arg = node.argument;
                    if (arg) arg = ren(*arg);
                    return proc_send(ren(node.subject), node.tag, node.instantiation, arg,
                                     walk(node.continuation, names, pvars), p->span);
                } else if constexpr (std::is_same_v<T, PReceive>) {
                    std::vector<ReceiveBranch> branches;
                    for (const auto& br : node.branches) {
                        ReceiveBranch nb = br;
                        auto inner = names;
                        if (br.binder) {
                            Name nx = variable(fresh_of(br.binder->id));
                            inner[*br.binder] = nx;
                            nb.binder = nx;
                        }
                        nb.body = walk(br.body, inner, pvars);
                        branches.push_back(std::move(nb));
                    }
                    return proc_receive(ren(node.subject), std::move(branches), p->span);
                } else if constexpr (std::is_same_v<T, PChoice>) {
                    return proc_choice(walk(node.left, names, pvars),
                                       walk(node.right, names, pvars), p->span);
                } else if constexpr (std::is_same_v<T, PParallel>) {
                    return proc_parallel(walk(node.left, names, pvars),
                                         walk(node.right, names, pvars), p->span);
                } else { // PRec
                    std::string nx = fresh_of(node.var);
                    auto inner = pvars;
                    inner[node.var] = nx;
                    return proc_rec(nx, walk(node.body, names, inner), p->span);
                }
            },
            p->node);
    };
    return walk(body, {}, {});
}

struct Parser {
    std::vector<Token> toks;
    std::size_t at = 0;
    std::string file;
    std::vector<Diagnostic>& diags;
    Program prog;
    int fresh_counter = 0;

    Parser(std::vector<Token> t, std::string f, std::vector<Diagnostic>& d)
        : toks(std::move(t)), file(std::move(f)), diags(d) {}

    const Token& peek(std::size_t k = 0) const {
        return toks[std::min(at + k, toks.size() - 1)];
    }
    const Token& next() { return toks[std::min(at++, toks.size() - 1)]; }
    bool accept(Tok k) {
        if (peek().kind == k) {
            ++at;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& code, const std::string& msg, Span sp) {
        diags.push_back(Diagnostic{Diagnostic::Severity::Error, code, msg, file, sp});
        throw ParseError{};
    }
    Token expect(Tok k, const std::string& what) {
        if (peek().kind != k)
            fail("P002", "expected " + what + " but found '" + peek().text + "'", peek().span);
        return next();
    }

    std::string fresh_type_var() { return "_t" + std::to_string(fresh_counter++); }

    void register_tag(const Tag& tag, int arity, Span sp) {
        auto [it, inserted] = prog.tag_arity.emplace(tag, arity);
        if (!inserted && it->second != arity)
            fail("P004",
                 "tag '" + tag + "' used with arity " + std::to_string(arity) +
                     " but previously used with arity " + std::to_string(it->second),
                 sp);
    }

    // ---- types ----

    TypePtr parse_type(std::set<std::string>& tvars) {
        const Token& t = peek();
        switch (t.kind) {
        case Tok::KwEnd:
            next();
            return type_end(t.span);
        case Tok::KwTop:
            next();
            return type_top(t.span);
        case Tok::KwRec: {
            next();
            Token v = expect(Tok::Ident, "type variable");
            expect(Tok::Dot, "'.'");
            bool fresh = tvars.insert(v.text).second;
            TypePtr body = parse_type(tvars);
            if (fresh) tvars.erase(v.text);
            TypePtr mu = type_mu(v.text, body, t.span);
            if (!is_contractive(mu))
                fail("P006", "non-contractive recursion: 'rec " + v.text + "' is unguarded",
                     t.span);
            return mu;
        }
        case Tok::PlusBrace:
            next();
            return parse_choice(ChoiceKind::Internal, t.span, tvars);
        case Tok::AmpBrace:
            next();
            return parse_choice(ChoiceKind::External, t.span, tvars);
        case Tok::KwDual: {
            next();
            expect(Tok::LParen, "'('");
            Token name = expect(Tok::Ident, "type name");
            expect(Tok::RParen, "')'");
            const TypeDef* def = prog.find_type(name.text);
            if (!def) fail("P005", "unknown type name '" + name.text + "' in dual(...)", name.span);
            try {
                return dual(def->type);
            } catch (const TypeAlgebraError& e) {
                fail("P007", std::string("dual(") + name.text + "): " + e.what(), name.span);
            } catch (const BudgetExceeded& e) {
                fail("P007", std::string("dual(") + name.text + "): " + e.what(), name.span);
            }
        }
        case Tok::LParen: {
            next();
            TypePtr inner = parse_type(tvars);
            expect(Tok::RParen, "')'");
            return inner;
        }
        case Tok::Ident: {
            next();
            if (tvars.count(t.text)) return type_var(t.text, t.span);
            if (const TypeDef* def = prog.find_type(t.text)) return def->type;
            for (const auto& b : prog.base_types)
                if (b == t.text) return type_base(t.text, t.span);
            fail("P005", "unbound type name or variable '" + t.text + "'", t.span);
        }
        default:
            fail("P002", "expected a type but found '" + t.text + "'", t.span);
        }
    }

    TypePtr parse_choice(ChoiceKind kind, Span start, std::set<std::string>& tvars) {
        std::vector<TypeBranch> branches;
        std::set<Tag> seen;
        for (;;) {
            TypeBranch br;
            Token tag = expect(Tok::Ident, "message tag");
            br.tag = tag.text;
            br.span = tag.span;
            if (!seen.insert(br.tag).second)
                fail("P003", "duplicate tag '" + br.tag + "' in choice", tag.span);
            std::optional<std::string> binder;
            if (accept(Tok::Lt)) {
                Token v = expect(Tok::Ident, "type variable");
                binder = v.text;
                if (accept(Tok::SubtypeOf)) {
                    br.bound = parse_type(tvars);
                } else {
                    br.bound = type_top(v.span);
                }
                expect(Tok::Gt, "'>'");
            } else {
                br.bound = type_top(tag.span);
            }
            br.binder = binder.value_or(fresh_type_var());
            bool fresh = tvars.insert(br.binder).second;
            if (accept(Tok::LParen)) {
                br.payload = parse_type(tvars);
                expect(Tok::RParen, "')'");
            }
            expect(Tok::Dot, "'.'");
            br.continuation = parse_type(tvars);
            if (fresh) tvars.erase(br.binder);
            register_tag(br.tag, br.payload ? 1 : 0, tag.span);
            branches.push_back(std::move(br));
            if (accept(Tok::Comma)) continue;
            expect(Tok::RBrace, "'}' or ','");
            break;
        }
        return type_choice(kind, std::move(branches), start);
    }

    // ---- processes ----

    struct Scope {
        std::map<std::string, Name> names;
        std::set<std::string> proc_vars;
    };

    ProcPtr parse_process(Scope& sc) { return parse_par(sc); }

    ProcPtr parse_par(Scope& sc) {
        ProcPtr left = parse_internal_choice(sc);
        while (peek().kind == Tok::ParPar) {
            Span sp = next().span;
            ProcPtr right = parse_internal_choice(sc);
            left = proc_parallel(left, right, sp);
        }
        return left;
    }

    ProcPtr parse_internal_choice(Scope& sc) {
        ProcPtr left = parse_sum(sc);
        while (peek().kind == Tok::OPlus) {
            Span sp = next().span;
            ProcPtr right = parse_sum(sc);
            left = proc_choice(left, right, sp);
        }
        return left;
    }

    ProcPtr parse_sum(Scope& sc) {
        Span start = peek().span;
        ProcPtr left = parse_prefix(sc);
        if (peek().kind != Tok::Plus) return left;
        // Receive sum: all operands are receives on one subject.
        auto as_receive = [&](const ProcPtr& p) -> const PReceive* {
            return std::get_if<PReceive>(&p->node);
        };
        const PReceive* first = as_receive(left);
        if (!first) fail("P002", "only receive prefixes can be summed with '+'", peek().span);
        Name subject = first->subject;
        std::vector<ReceiveBranch> branches = first->branches;
        std::set<Tag> seen;
        for (const auto& br : branches) seen.insert(br.tag);
        while (accept(Tok::Plus)) {
            ProcPtr rhs = parse_prefix(sc);
            const PReceive* r = as_receive(rhs);
            if (!r) fail("P002", "only receive prefixes can be summed with '+'", rhs->span);
            if (r->subject != subject)
                fail("P002", "receive sum branches must share a subject", rhs->span);
            for (const auto& br : r->branches) {
                if (!seen.insert(br.tag).second)
                    fail("P003", "duplicate tag '" + br.tag + "' in receive sum", br.span);
                branches.push_back(br);
            }
        }
        return proc_receive(subject, std::move(branches), start);
    }

    Name resolve(Scope& sc, const Token& tok) {
        auto it = sc.names.find(tok.text);
        if (it == sc.names.end())
            fail("P005", "unbound name '" + tok.text + "'", tok.span);
        return it->second;
    }

    ProcPtr parse_prefix(Scope& sc) {
        const Token& t = peek();
        switch (t.kind) {
        case Tok::Zero:
            next();
            return proc_idle(t.span);
        case Tok::LParen: {
            next();
            ProcPtr inner = parse_process(sc);
            expect(Tok::RParen, "')'");
            return inner;
        }
        case Tok::KwClose: {
            next();
            expect(Tok::LParen, "'('");
            Token u = expect(Tok::Ident, "name");
            expect(Tok::RParen, "')'");
            return proc_close(resolve(sc, u), t.span);
        }
        case Tok::KwOpen: {
            next();
            expect(Tok::LParen, "'('");
            Token a = expect(Tok::Ident, "name");
            TypePtr annotation;
            if (accept(Tok::Colon)) {
                std::set<std::string> tvars;
                annotation = parse_type(tvars);
            }
            expect(Tok::Comma, "','");
            Token btok = expect(Tok::Ident, "name");
            expect(Tok::RParen, "')'");
            expect(Tok::Dot, "'.'");
            Scope inner = sc;
            Name na = location(a.text);
            Name nb = location(btok.text);
            inner.names[a.text] = na;
            inner.names[btok.text] = nb;
            ProcPtr body = parse_prefix(inner);
            return proc_open(na, nb, annotation, body, t.span);
        }
        case Tok::KwRec: {
            next();
            Token x = expect(Tok::Ident, "process variable");
            expect(Tok::Dot, "'.'");
            Scope inner = sc;
            inner.proc_vars.insert(x.text);
            ProcPtr body = parse_prefix(inner);
            return proc_rec(x.text, body, t.span);
        }
        case Tok::Ident: {
            next();
            if (peek().kind == Tok::Bang) {
                next();
                Token tag = expect(Tok::Ident, "message tag");
                std::optional<TypePtr> inst;
                if (accept(Tok::Lt)) {
                    std::set<std::string> tvars;
                    inst = parse_type(tvars);
                    expect(Tok::Gt, "'>'");
                }
                std::optional<Name> arg;
                if (accept(Tok::LParen)) {
                    if (peek().kind != Tok::RParen) {
                        Token v = expect(Tok::Ident, "argument name");
                        arg = resolve(sc, v);
                    }
                    expect(Tok::RParen, "')'");
                }
                register_tag(tag.text, arg ? 1 : 0, tag.span);
                expect(Tok::Dot, "'.'");
                ProcPtr cont = parse_prefix(sc);
                return proc_send(resolve(sc, t), tag.text, inst, arg, cont, t.span);
            }
            if (peek().kind == Tok::Question) {
                next();
                Token tag = expect(Tok::Ident, "message tag");
                std::optional<Name> binder;
                if (accept(Tok::LParen)) {
                    if (peek().kind != Tok::RParen) {
                        Token v = expect(Tok::Ident, "binder");
                        binder = variable(v.text);
                    }
                    expect(Tok::RParen, "')'");
                }
                register_tag(tag.text, binder ? 1 : 0, tag.span);
                expect(Tok::Dot, "'.'");
                Scope inner = sc;
                if (binder) inner.names[binder->id] = *binder;
                ProcPtr body = parse_prefix(inner);
                ReceiveBranch br{tag.text, binder, body, tag.span};
                return proc_receive(resolve(sc, t), {br}, t.span);
            }
            if (peek().kind == Tok::LParen) {
                // proc macro call
                const ProcDef* def = prog.find_proc(t.text);
                if (!def) fail("P005", "unknown process '" + t.text + "'", t.span);
                next();
                std::vector<Name> args;
                if (peek().kind != Tok::RParen) {
                    for (;;) {
                        Token v = expect(Tok::Ident, "argument name");
                        args.push_back(resolve(sc, v));
                        if (!accept(Tok::Comma)) break;
                    }
                }
                expect(Tok::RParen, "')'");
                if (args.size() != def->params.size())
                    fail("P002",
                         "process '" + t.text + "' expects " +
                             std::to_string(def->params.size()) + " argument(s), got " +
                             std::to_string(args.size()),
                         t.span);
                return expand_call(*def, args, sc);
            }
            if (sc.proc_vars.count(t.text)) return proc_var(t.text, t.span);
            fail("P005", "unbound process variable '" + t.text + "'", t.span);
        }
        default:
            fail("P002", "expected a process but found '" + t.text + "'", t.span);
        }
    }

    ProcPtr expand_call(const ProcDef& def, const std::vector<Name>& args, const Scope& sc) {
        // Rename the callee's binders away from everything visible at the
        // call site, then substitute parameters simultaneously (params to
        // fresh temporaries, temporaries to the actual arguments).
        std::set<std::string> avoid;
        for (const auto& [text, name] : sc.names) avoid.insert(name.id);
        for (const auto& a : args) avoid.insert(a.id);
        for (const auto& p : def.params) avoid.insert(p.name.id);
        ProcPtr body = freshen_process(def.body, avoid);
        std::vector<Name> temps;
        for (std::size_t i = 0; i < def.params.size(); ++i) {
            Name tmp = variable("_arg" + std::to_string(fresh_counter++));
            temps.push_back(tmp);
            body = substitute_name(body, tmp, def.params[i].name);
        }
        for (std::size_t i = 0; i < args.size(); ++i)
            body = substitute_name(body, args[i], temps[i]);
        return body;
    }

    // ---- declarations ----

    void parse_decls() {
        while (peek().kind != Tok::End) {
            const Token& t = peek();
            if (t.kind == Tok::KwBase) {
                next();
                Token name = expect(Tok::Ident, "base type name");
                check_unique(name);
                prog.base_types.push_back(name.text);
            } else if (t.kind == Tok::KwDef) {
                next();
                Token name = expect(Tok::Ident, "type name");
                check_unique(name);
                expect(Tok::Equals, "'='");
                std::set<std::string> tvars;
                TypePtr type = parse_type(tvars);
                prog.type_defs.push_back(TypeDef{name.text, type, name.span});
            } else if (t.kind == Tok::KwProc) {
                next();
                Token name = expect(Tok::Ident, "process name");
                check_unique(name);
                expect(Tok::LParen, "'('");
                std::vector<ProcParam> params;
                Scope sc;
                if (peek().kind != Tok::RParen) {
                    for (;;) {
                        Token pn = expect(Tok::Ident, "parameter name");
                        expect(Tok::Colon, "':'");
                        std::set<std::string> tvars;
                        TypePtr pt = parse_type(tvars);
                        Name pname = variable(pn.text);
                        if (!sc.names.emplace(pn.text, pname).second)
                            fail("P003", "duplicate parameter '" + pn.text + "'", pn.span);
                        params.push_back(ProcParam{pname, pt, pn.span});
                        if (!accept(Tok::Comma)) break;
                    }
                }
                expect(Tok::RParen, "')'");
                expect(Tok::Equals, "'='");
                ProcPtr body = parse_process(sc);
                std::set<std::string> avoid;
                for (const auto& p : params) avoid.insert(p.name.id);
                body = freshen_process(body, avoid);
                prog.proc_defs.push_back(ProcDef{name.text, std::move(params), body, name.span});
            } else {
                fail("P002", "expected a declaration but found '" + t.text + "'", t.span);
            }
        }
        for (const auto& d : prog.proc_defs)
            if (d.name == "Main" && d.params.empty()) prog.entry = d.body;
    }

    void check_unique(const Token& name) {
        bool dup = prog.find_type(name.text) || prog.find_proc(name.text);
        for (const auto& b : prog.base_types) dup = dup || b == name.text;
        if (dup) fail("P003", "duplicate declaration '" + name.text + "'", name.span);
    }

};

} // namespace

ParseResult parse_program(std::string_view text, const std::string& file) {
    ParseResult result;
    Lexer lx{text, file};
    std::vector<Token> toks = lx.run();
    result.diagnostics = lx.errors;
    if (!result.diagnostics.empty()) return result;

    Parser parser(std::move(toks), file, result.diagnostics);
    parser.prog.file = file;
    try {
        parser.parse_decls();
    } catch (const ParseError&) {
        return result;
    }
    result.program = std::move(parser.prog);
    return result;
}

std::optional<TypePtr> parse_type_operand(const Program& context, std::string_view text,
                                          std::vector<Diagnostic>& diagnostics) {
    Lexer lx{text, "<operand>"};
    std::vector<Token> toks = lx.run();
    if (!lx.errors.empty()) {
        diagnostics.insert(diagnostics.end(), lx.errors.begin(), lx.errors.end());
        return std::nullopt;
    }
    Parser parser(std::move(toks), "<operand>", diagnostics);
    parser.prog = context;
    try {
        std::set<std::string> tvars;
        TypePtr t = parser.parse_type(tvars);
        if (parser.peek().kind != Tok::End)
            parser.fail("P002", "trailing input after type expression", parser.peek().span);
        return t;
    } catch (const ParseError&) {
        return std::nullopt;
    }
}

// ---- printing ----

namespace {

bool type_var_occurs(const TypePtr& t, const std::string& var) {
    return free_type_vars(t).count(var) != 0;
}

void print_type_rec(const TypePtr& t, std::ostringstream& os) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, TTop>) {
                os << "Top";
            } else if constexpr (std::is_same_v<T, TBase>) {
                os << node.name;
            } else if constexpr (std::is_same_v<T, TEnd>) {
                os << "end";
            } else if constexpr (std::is_same_v<T, TVar>) {
                os << node.name;
            } else if constexpr (std::is_same_v<T, TMu>) {
                os << "rec " << node.var << ". ";
                print_type_rec(node.body, os);
            } else if constexpr (std::is_same_v<T, TChoice>) {
                os << (node.kind == ChoiceKind::Internal ? "+{ " : "&{ ");
                bool first = true;
                for (const auto& br : node.branches) {
                    if (!first) os << ", ";
                    first = false;
                    os << br.tag;
                    bool bound_is_top = std::holds_alternative<TTop>(br.bound->node);
                    bool used = (br.payload && type_var_occurs(*br.payload, br.binder)) ||
                                type_var_occurs(br.continuation, br.binder);
                    if (used || !bound_is_top) {
                        os << "<" << br.binder;
                        if (!bound_is_top) {
                            os << "<:";
                            print_type_rec(br.bound, os);
                        }
                        os << ">";
                    }
                    if (br.payload) {
                        os << "(";
                        print_type_rec(*br.payload, os);
                        os << ")";
                    }
                    os << ". ";
                    print_type_rec(br.continuation, os);
                }
                os << " }";
            }
        },
        t->node);
}

// Precedence levels: parallel 0, internal choice 1, sum 2, prefix 3.
void print_proc_rec(const ProcPtr& p, int level, std::ostringstream& os) {
    auto paren = [&](int mine, auto body) {
        if (mine < level) {
            os << "( ";
            body();
            os << " )";
        } else {
            body();
        }
    };
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, PIdle>) {
                os << "0";
            } else if constexpr (std::is_same_v<T, PProcVar>) {
                os << node.var;
            } else if constexpr (std::is_same_v<T, PClose>) {
                os << "close(" << node.subject.id << ")";
            } else if constexpr (std::is_same_v<T, POpen>) {
                os << "open(" << node.binder_a.id;
                if (node.annotation) {
                    os << " : ";
                    print_type_rec(node.annotation, os);
                }
                os << ", " << node.binder_b.id << "). ";
                print_proc_rec(node.body, 3, os);
            } else if constexpr (std::is_same_v<T, PSend>) {
                os << node.subject.id << "!" << node.tag;
                if (node.instantiation) {
                    os << "<";
                    print_type_rec(*node.instantiation, os);
                    os << ">";
                }
                if (node.argument) os << "(" << node.argument->id << ")";
                os << ". ";
                print_proc_rec(node.continuation, 3, os);
            } else if constexpr (std::is_same_v<T, PReceive>) {
                int mine = node.branches.size() > 1 ? 2 : 3;
                paren(mine, [&] {
                    bool first = true;
                    for (const auto& br : node.branches) {
                        if (!first) os << " + ";
                        first = false;
                        os << node.subject.id << "?" << br.tag;
                        if (br.binder) os << "(" << br.binder->id << ")";
                        os << ". ";
                        print_proc_rec(br.body, 3, os);
                    }
                });
            } else if constexpr (std::is_same_v<T, PChoice>) {
                // Right operands are parenthesized so the left-associative
                // parser reproduces the tree exactly.
                paren(1, [&] {
                    print_proc_rec(node.left, 1, os);
                    os << " (+) ";
                    print_proc_rec(node.right, 2, os);
                });
            } else if constexpr (std::is_same_v<T, PParallel>) {
                paren(0, [&] {
                    print_proc_rec(node.left, 0, os);
                    os << " || ";
                    print_proc_rec(node.right, 1, os);
                });
            } else { // PRec
                os << "rec " << node.var << ". ";
                print_proc_rec(node.body, 3, os);
            }
        },
        p->node);
}

} // namespace

std::string print_type(const TypePtr& t) {
    std::ostringstream os;
    print_type_rec(t, os);
    return os.str();
}

std::string print_process(const ProcPtr& p) {
    std::ostringstream os;
    print_proc_rec(p, 0, os);
    return os.str();
}

} // namespace polysing
