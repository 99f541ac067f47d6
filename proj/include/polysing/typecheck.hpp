#ifndef POLYSING_TYPECHECK_HPP
#define POLYSING_TYPECHECK_HPP

#include "polysing/surface.hpp"
#include "polysing/syntax.hpp"
#include "polysing/typealgebra.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace polysing {

/// Linear typing environment: every entry must be consumed exactly once.
struct TypeEnv {
    std::map<Name, TypePtr> entries;

    const TypePtr* lookup(const Name& n) const {
        auto it = entries.find(n);
        return it == entries.end() ? nullptr : &it->second;
    }
    bool contains(const Name& n) const { return entries.count(n) != 0; }
    std::set<Name> domain() const;
};

struct ProcEnvEntry {
    BoundEnv delta;
    TypeEnv gamma;
};
using ProcEnv = std::map<std::string, ProcEnvEntry>;

struct TypeError {
    std::string rule; // failed premise, e.g. "T-Send"
    std::string message;
    Span span;
};

struct CheckOptions {
    AlgebraLimits limits;
};

/// Partitions gamma between p and q by the names each side needs, where a
/// process variable needs the domain of its recorded environment.
std::variant<std::pair<TypeEnv, TypeEnv>, TypeError>
split_env(const TypeEnv& gamma, const ProcPtr& p, const ProcPtr& q, const ProcEnv& sigma);

/// Picks the instantiation for a send when no annotation is given: the
/// bound when the branch binder is unused, the argument type when the
/// payload is exactly the binder; anything else needs an annotation.
std::variant<TypePtr, TypeError>
infer_send_instantiation(const BoundEnv& delta, const std::optional<TypePtr>& arg_type,
                         const TypeBranch& branch, Span site);

class ProcessChecker {
public:
    explicit ProcessChecker(CheckOptions opts = {}) : opts_(opts) {}

    std::optional<TypeError> check(const ProcEnv& sigma, const BoundEnv& delta, TypeEnv gamma,
                                   const ProcPtr& p);

    const std::vector<Diagnostic>& warnings() const { return warnings_; }

    /// One line per applied rule, leaves included; consumption of every
    /// linear name is auditable from it.
    const std::vector<std::string>& derivation() const { return derivation_; }

private:
    void record(const std::string& rule, const TypeEnv& gamma, Span span);

    std::optional<TypeError> check_send(const ProcEnv& sigma, const BoundEnv& delta,
                                        TypeEnv gamma, const ProcPtr& p);
    std::optional<TypeError> check_receive(const ProcEnv& sigma, const BoundEnv& delta,
                                           const TypeEnv& gamma, const ProcPtr& p);

    std::string fresh_type_var(const std::string& base);

    CheckOptions opts_;
    std::vector<Diagnostic> warnings_;
    std::vector<std::string> derivation_;
    int fresh_counter_ = 0;
};

/// Heap well-typedness: mutual peers with at most one nonempty queue per
/// pair, dual-modulo-subtyping residuals, exact root reachability, and
/// pairwise-disjoint root regions.
std::optional<TypeError> check_heap(const TypeEnv& gamma0, const TypeEnv& gamma, const Heap& heap,
                                    const CheckOptions& opts = {});

std::optional<TypeError> check_system(const TypeEnv& gamma0, const TypeEnv& gamma,
                                      const System& sys, const CheckOptions& opts = {});

struct ProgramCheckResult {
    bool ok = true;
    std::vector<Diagnostic> diagnostics; // errors and warnings
};

/// Checks every proc declaration of the program under its parameter
/// environment.
ProgramCheckResult check_program(const Program& prog, const CheckOptions& opts = {});

} // namespace polysing

#endif
