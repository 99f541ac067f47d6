#ifndef POLYSING_SYNTAX_HPP
#define POLYSING_SYNTAX_HPP

#include "polysing/types.hpp"

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace polysing {

enum class NameKind { Location, Variable };

/// A heap pointer or a program variable. The two namespaces are disjoint:
/// equality and ordering compare the kind first.
struct Name {
    NameKind kind;
    std::string id;

    friend bool operator==(const Name& a, const Name& b) {
        return a.kind == b.kind && a.id == b.id;
    }
    friend bool operator!=(const Name& a, const Name& b) { return !(a == b); }
    friend bool operator<(const Name& a, const Name& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.id < b.id;
    }
};

inline Name location(std::string id) { return Name{NameKind::Location, std::move(id)}; }
inline Name variable(std::string id) { return Name{NameKind::Variable, std::move(id)}; }

std::string name_text(const Name& n);

struct ProcessTerm;
using ProcPtr = std::shared_ptr<const ProcessTerm>;

struct PIdle {};
struct PProcVar {
    std::string var;
};
struct PClose {
    Name subject;
};
struct POpen {
    Name binder_a; // Location binder
    Name binder_b; // Location binder
    TypePtr annotation; // endpoint type of binder_a; may be null in raw ASTs
    ProcPtr body;
};
struct PSend {
    Name subject;
    Tag tag;
    std::optional<TypePtr> instantiation;
    std::optional<Name> argument; // absent for arity-0 tags
    ProcPtr continuation;
};
struct ReceiveBranch {
    Tag tag;
    std::optional<Name> binder; // Variable; absent for arity-0 tags
    ProcPtr body;
    Span span;
};
struct PReceive {
    Name subject;
    std::vector<ReceiveBranch> branches; // nonempty, pairwise distinct tags
};
struct PChoice {
    ProcPtr left, right;
};
struct PParallel {
    ProcPtr left, right;
};
struct PRec {
    std::string var;
    ProcPtr body;
};

struct ProcessTerm {
    std::variant<PIdle, PProcVar, PClose, POpen, PSend, PReceive, PChoice, PParallel, PRec> node;
    Span span;
};

ProcPtr make_process(ProcessTerm p);
ProcPtr proc_idle(Span s = {});
ProcPtr proc_var(std::string x, Span s = {});
ProcPtr proc_close(Name subject, Span s = {});
ProcPtr proc_open(Name a, Name b, TypePtr annotation, ProcPtr body, Span s = {});
ProcPtr proc_send(Name subject, Tag tag, std::optional<TypePtr> inst, std::optional<Name> arg,
                  ProcPtr cont, Span s = {});
ProcPtr proc_receive(Name subject, std::vector<ReceiveBranch> branches, Span s = {});
ProcPtr proc_choice(ProcPtr l, ProcPtr r, Span s = {});
ProcPtr proc_parallel(ProcPtr l, ProcPtr r, Span s = {});
ProcPtr proc_rec(std::string x, ProcPtr body, Span s = {});

/// fn(P): open removes its two location binders, each receive branch
/// removes its binder, everything else contributes subjects and arguments.
std::set<Name> free_names(const ProcPtr& p);

/// Free process variables (rec is the only binder).
std::set<std::string> free_proc_vars(const ProcPtr& p);

/// Replaces free occurrences of `target` by `value`. Under the Barendregt
/// convention this never needs on-the-fly renaming.
ProcPtr substitute_name(const ProcPtr& p, const Name& value, const Name& target);

/// Replaces free occurrences of process variable `x` by `value`.
ProcPtr substitute_proc_var(const ProcPtr& p, const ProcPtr& value, const std::string& x);

/// One-step unfolding of rec X.P; throws std::logic_error on non-Rec input.
ProcPtr unfold_rec(const ProcPtr& p);

/// Flattens nested parallels and drops idle components; the empty vector
/// stands for the idle process.
std::vector<ProcPtr> parallel_atoms(const ProcPtr& p);

/// Rebuilds a process from atoms (right-associated; empty list is idle).
ProcPtr compose_atoms(const std::vector<ProcPtr>& atoms);

/// Canonical string with binders renumbered positionally; two terms are
/// alpha-equivalent iff their canonical strings coincide.
std::string canonical_process_string(const ProcPtr& p);

bool alpha_equal(const ProcPtr& a, const ProcPtr& b);

/// Queued message: tag plus optional location argument.
struct Message {
    Tag tag;
    std::optional<Name> argument;
};

struct EndpointRecord {
    Name peer;
    std::deque<Message> queue;
};

/// Finite map location -> endpoint record. The map representation makes
/// composition on overlapping domains unrepresentable.
struct Heap {
    std::map<Name, EndpointRecord> entries;

    bool contains(const Name& l) const { return entries.count(l) != 0; }
    std::set<Name> domain() const;
};

struct System {
    Heap heap;
    ProcPtr process;
    std::uint64_t generation = 0; // bumped by every step; stamps redexes
};

} // namespace polysing

#endif
