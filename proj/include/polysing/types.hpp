#ifndef POLYSING_TYPES_HPP
#define POLYSING_TYPES_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace polysing {

/// Source position range, 1-based. line == 0 means "no position".
struct Span {
    int line = 0;
    int col = 0;
    int end_line = 0;
    int end_col = 0;
};

using Tag = std::string;

struct TypeTerm;
using TypePtr = std::shared_ptr<const TypeTerm>;

struct TTop {};
struct TBase {
    std::string name;
};
struct TEnd {};
struct TVar {
    std::string name;
};

/// One prefix of a choice: tag<binder<:bound>(payload).continuation.
/// The binder is always materialized; parsing invents a fresh unused one
/// (with bound Top) when the source omits it. A missing payload is an
/// arity-0 message.
struct TypeBranch {
    Tag tag;
    std::string binder;
    TypePtr bound;
    std::optional<TypePtr> payload;
    TypePtr continuation;
    Span span;
};

enum class ChoiceKind { Internal, External };

struct TChoice {
    ChoiceKind kind;
    std::vector<TypeBranch> branches; // nonempty, pairwise distinct tags
};

struct TMu {
    std::string var;
    TypePtr body; // contractive: var guarded by a choice prefix
};

struct TypeTerm {
    std::variant<TTop, TBase, TEnd, TVar, TChoice, TMu> node;
    Span span;
};

TypePtr make_type(TypeTerm t);
TypePtr type_top(Span s = {});
TypePtr type_base(std::string name, Span s = {});
TypePtr type_end(Span s = {});
TypePtr type_var(std::string name, Span s = {});
TypePtr type_choice(ChoiceKind k, std::vector<TypeBranch> branches, Span s = {});
TypePtr type_mu(std::string var, TypePtr body, Span s = {});

bool is_endpoint_type(const TypeTerm& t); // everything except Top and Base

/// Free type variables of t.
std::set<std::string> free_type_vars(const TypePtr& t);

/// Capture-naive substitution of `replacement` for free occurrences of
/// `var`; stops at binders that shadow `var`. The replacement must be
/// closed or a fresh variable, which is all the callers ever need.
TypePtr subst_type(const TypePtr& t, const std::string& var, const TypePtr& replacement);

/// Mu bodies must guard their variable behind a choice prefix.
bool is_contractive(const TypePtr& t);

/// Ordered sequence of constraints alpha <= bound. Lookup resolves the
/// rightmost occurrence. `origin`, when set, records the receive subject
/// that introduced the constraint (used only by the process checker).
struct BoundConstraint {
    std::string var;
    TypePtr bound;
    std::optional<std::string> origin;
};

class BoundEnv {
public:
    BoundEnv() = default;

    void push(std::string var, TypePtr bound, std::optional<std::string> origin = std::nullopt);

    /// Rightmost bound for `var`, or nullptr.
    const TypePtr* lookup(const std::string& var) const;
    const BoundConstraint* lookup_constraint(const std::string& var) const;

    bool contains(const std::string& var) const { return lookup(var) != nullptr; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::vector<BoundConstraint>& entries() const { return entries_; }

    /// Restriction to the constraints transitively needed to scope the
    /// variables in `roots` (bounds may mention earlier variables).
    BoundEnv trim(const std::set<std::string>& roots) const;

private:
    std::vector<BoundConstraint> entries_;
};

/// Natural number extended with infinity; infinity compares above every
/// natural and infinity <= infinity.
class Weight {
public:
    static Weight finite(std::uint64_t n) { return Weight(n); }
    static Weight infinity() { return Weight(); }

    bool is_infinite() const { return !value_.has_value(); }
    std::uint64_t value() const { return *value_; }

    friend bool operator==(const Weight& a, const Weight& b) { return a.value_ == b.value_; }
    friend bool operator!=(const Weight& a, const Weight& b) { return !(a == b); }
    friend bool operator<=(const Weight& a, const Weight& b) {
        if (a.is_infinite()) return b.is_infinite();
        if (b.is_infinite()) return true;
        return a.value() <= b.value();
    }
    friend bool operator<(const Weight& a, const Weight& b) { return a <= b && a != b; }

    Weight plus(std::uint64_t n) const {
        if (is_infinite()) return *this;
        return finite(value() + n);
    }
    static Weight max(const Weight& a, const Weight& b) { return a <= b ? b : a; }

    std::string to_string() const { return is_infinite() ? "inf" : std::to_string(value()); }

private:
    Weight() = default;
    explicit Weight(std::uint64_t n) : value_(n) {}
    std::optional<std::uint64_t> value_;
};

} // namespace polysing

#endif
