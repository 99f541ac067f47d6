#ifndef POLYSING_SURFACE_HPP
#define POLYSING_SURFACE_HPP

#include "polysing/syntax.hpp"
#include "polysing/typealgebra.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace polysing {

struct Diagnostic {
    enum class Severity { Error, Warning, Note };
    Severity severity = Severity::Error;
    std::string code;
    std::string message;
    std::string file;
    Span span;

    /// "SEVERITY CODE file:line:col message"
    std::string to_text() const;
};

struct ProcParam {
    Name name; // Variable
    TypePtr type;
    Span span;
};

struct ProcDef {
    std::string name;
    std::vector<ProcParam> params;
    ProcPtr body; // macro-expanded and freshened
    Span span;
};

struct TypeDef {
    std::string name;
    TypePtr type; // references to earlier defs already expanded
    Span span;
};

struct Program {
    std::string file;
    std::vector<std::string> base_types;
    std::vector<TypeDef> type_defs;
    std::vector<ProcDef> proc_defs;
    std::optional<ProcPtr> entry; // body of the zero-parameter proc Main
    std::map<std::string, int> tag_arity;

    const TypeDef* find_type(const std::string& name) const;
    const ProcDef* find_proc(const std::string& name) const;
};

struct ParseResult {
    std::optional<Program> program;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return program.has_value(); }
};

/// Parses a whole .psg program. Named type references and proc macro
/// calls are expanded; processes are freshened so the Barendregt
/// convention holds globally.
ParseResult parse_program(std::string_view text, const std::string& file = "<input>");

/// Parses a type operand for the CLI: either the name of a definition in
/// `context` or an inline type expression over its definitions.
std::optional<TypePtr> parse_type_operand(const Program& context, std::string_view text,
                                          std::vector<Diagnostic>& diagnostics);

std::string print_type(const TypePtr& t);
std::string print_process(const ProcPtr& p);

} // namespace polysing

#endif
