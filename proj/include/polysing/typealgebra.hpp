#ifndef POLYSING_TYPEALGEBRA_HPP
#define POLYSING_TYPEALGEBRA_HPP

#include "polysing/types.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace polysing {

/// Step budget shared by the decision procedures. Well-formed regular
/// types stay far below it; exceeding it is reported, never treated as
/// a boolean answer.
struct AlgebraLimits {
    long budget = 10000;
};

class BudgetExceeded : public std::runtime_error {
public:
    explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

/// Raised on contract violations: unbound variables, duality of
/// non-endpoint or open types, and similar misuse.
class TypeAlgebraError : public std::runtime_error {
public:
    explicit TypeAlgebraError(const std::string& what) : std::runtime_error(what) {}
};

/// Alpha-canonical rendering: binders are renumbered positionally, free
/// variables keep their names, branches are sorted by tag. Two terms get
/// the same string iff they are alpha-equivalent (folding untouched).
std::string canonical_type_string(const TypePtr& t);

struct WfReport {
    bool ok = true;
    std::string message;
    Span span;
};

/// The well-formedness judgment I,O |- t plus contractivity of Mu bodies.
WfReport well_formed(const TypePtr& t, const std::set<std::string>& inner,
                     const std::set<std::string>& outer);
bool check_well_formed(const TypePtr& t, const std::set<std::string>& inner,
                       const std::set<std::string>& outer);
inline bool check_well_formed(const TypePtr& t) { return check_well_formed(t, {}, {}); }

struct HeadForm {
    TypePtr head; // End, Top, Base, or a choice
    std::vector<std::string> promotions; // variables promoted to their bound, in order
};

/// Unfolds recursions and promotes variables through the bound
/// environment until the head is exposed.
HeadForm head_normal(const BoundEnv& delta, const TypePtr& t, const AlgebraLimits& limits = {});

/// Canonical equality: insensitive to alpha renaming and fold/unfold.
bool type_equal(const TypePtr& t, const TypePtr& s, const AlgebraLimits& limits = {});

/// The unique co-type: inputs and outputs swapped at every depth; tags,
/// binders, bounds and payloads unchanged. Defined on endpoint types
/// whose continuation spine is closed (prefix-only free variables are
/// fine; they are untouched).
TypePtr dual(const TypePtr& t, const AlgebraLimits& limits = {});

/// Kernel bounded subtyping over equi-recursive types, as a memoized
/// greatest-fixpoint search.
bool subtype(const BoundEnv& delta, const TypePtr& t, const TypePtr& s,
             const AlgebraLimits& limits = {});
inline bool subtype(const TypePtr& t, const TypePtr& s, const AlgebraLimits& limits = {}) {
    return subtype(BoundEnv{}, t, s, limits);
}

/// Least coinductive weight bound of t under delta.
Weight weight(const BoundEnv& delta, const TypePtr& t, const AlgebraLimits& limits = {});
inline Weight weight(const TypePtr& t, const AlgebraLimits& limits = {}) {
    return weight(BoundEnv{}, t, limits);
}

/// A queued message as seen by the heap checker: tag plus the
/// environment type of its argument (absent for arity-0 tags).
struct MsgSpec {
    Tag tag;
    std::optional<TypePtr> arg_type;
};

struct TailFailure {
    enum class Kind { NotExternalChoice, TagNotOffered, ArityMismatch, NoInstantiation };
    Kind kind;
    std::string message;
};

using TailResult = std::variant<TypePtr, TailFailure>;

/// Residual endpoint type after consuming the given message specs.
/// Instantiation is a deterministic three-candidate heuristic: the
/// argument type when the payload is exactly the binder, a structural
/// match of the argument against the payload, then the declared bound.
TailResult tail(const TypePtr& t, const std::vector<MsgSpec>& specs,
                const AlgebraLimits& limits = {});

} // namespace polysing

#endif
