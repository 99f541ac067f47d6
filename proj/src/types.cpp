#include "polysing/types.hpp"

namespace polysing {

TypePtr make_type(TypeTerm t) { return std::make_shared<const TypeTerm>(std::move(t)); }

TypePtr type_top(Span s) { return make_type(TypeTerm{TTop{}, s}); }
TypePtr type_base(std::string name, Span s) { return make_type(TypeTerm{TBase{std::move(name)}, s}); }
TypePtr type_end(Span s) { return make_type(TypeTerm{TEnd{}, s}); }
TypePtr type_var(std::string name, Span s) { return make_type(TypeTerm{TVar{std::move(name)}, s}); }
TypePtr type_choice(ChoiceKind k, std::vector<TypeBranch> branches, Span s) {
    return make_type(TypeTerm{TChoice{k, std::move(branches)}, s});
}
TypePtr type_mu(std::string var, TypePtr body, Span s) {
    return make_type(TypeTerm{TMu{std::move(var), std::move(body)}, s});
}

bool is_endpoint_type(const TypeTerm& t) {
    return !std::holds_alternative<TTop>(t.node) && !std::holds_alternative<TBase>(t.node);
}

namespace {

void collect_free_vars(const TypePtr& t, std::set<std::string>& bound, std::set<std::string>& out) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, TVar>) {
                if (!bound.count(node.name)) out.insert(node.name);
            } else if constexpr (std::is_same_v<T, TMu>) {
                bool fresh = bound.insert(node.var).second;
                collect_free_vars(node.body, bound, out);
                if (fresh) bound.erase(node.var);
            } else if constexpr (std::is_same_v<T, TChoice>) {
                for (const auto& br : node.branches) {
                    collect_free_vars(br.bound, bound, out);
                    bool fresh = bound.insert(br.binder).second;
                    if (br.payload) collect_free_vars(*br.payload, bound, out);
                    collect_free_vars(br.continuation, bound, out);
                    if (fresh) bound.erase(br.binder);
                }
            }
        },
        t->node);
}

} // namespace

std::set<std::string> free_type_vars(const TypePtr& t) {
    std::set<std::string> bound, out;
    collect_free_vars(t, bound, out);
    return out;
}

TypePtr subst_type(const TypePtr& t, const std::string& var, const TypePtr& replacement) {
    return std::visit(
        [&](const auto& node) -> TypePtr {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, TVar>) {
                return node.name == var ? replacement : t;
            } else if constexpr (std::is_same_v<T, TMu>) {
                if (node.var == var) return t;
                TypePtr body = subst_type(node.body, var, replacement);
                if (body == node.body) return t;
                return type_mu(node.var, body, t->span);
            } else if constexpr (std::is_same_v<T, TChoice>) {
                bool changed = false;
                std::vector<TypeBranch> branches;
                branches.reserve(node.branches.size());
                for (const auto& br : node.branches) {
                    TypeBranch nb = br;
                    nb.bound = subst_type(br.bound, var, replacement);
                    if (br.binder != var) {
                        if (br.payload) nb.payload = subst_type(*br.payload, var, replacement);
                        nb.continuation = subst_type(br.continuation, var, replacement);
                    }
                    changed = changed || nb.bound != br.bound ||
                              (br.payload && *nb.payload != *br.payload) ||
                              nb.continuation != br.continuation;
                    branches.push_back(std::move(nb));
                }
                if (!changed) return t;
                return type_choice(node.kind, std::move(branches), t->span);
            } else {
                return t;
            }
        },
        t->node);
}

namespace {

// Whether every occurrence of `var` reachable without crossing a choice
// prefix is absent, i.e. var is guarded. Choices guard everything below
// them; only a chain of Mu binders can expose the variable.
bool guarded(const std::string& var, const TypePtr& t) {
    if (const auto* v = std::get_if<TVar>(&t->node)) return v->name != var;
    if (const auto* mu = std::get_if<TMu>(&t->node)) {
        if (mu->var == var) return true;
        return guarded(var, mu->body);
    }
    return true;
}

} // namespace

bool is_contractive(const TypePtr& t) {
    return std::visit(
        [&](const auto& node) -> bool {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, TMu>) {
                return guarded(node.var, node.body) && is_contractive(node.body);
            } else if constexpr (std::is_same_v<T, TChoice>) {
                for (const auto& br : node.branches) {
                    if (!is_contractive(br.bound)) return false;
                    if (br.payload && !is_contractive(*br.payload)) return false;
                    if (!is_contractive(br.continuation)) return false;
                }
                return true;
            } else {
                return true;
            }
        },
        t->node);
}

void BoundEnv::push(std::string var, TypePtr bound, std::optional<std::string> origin) {
    entries_.push_back(BoundConstraint{std::move(var), std::move(bound), std::move(origin)});
}

const TypePtr* BoundEnv::lookup(const std::string& var) const {
    const BoundConstraint* c = lookup_constraint(var);
    return c ? &c->bound : nullptr;
}

const BoundConstraint* BoundEnv::lookup_constraint(const std::string& var) const {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
        if (it->var == var) return &*it;
    return nullptr;
}

BoundEnv BoundEnv::trim(const std::set<std::string>& roots) const {
    std::set<std::string> needed = roots;
    std::vector<bool> keep(entries_.size(), false);
    for (std::size_t i = entries_.size(); i-- > 0;) {
        const auto& c = entries_[i];
        if (needed.count(c.var)) {
            keep[i] = true;
            needed.erase(c.var); // rightmost occurrence satisfies the need
            for (const auto& v : free_type_vars(c.bound)) needed.insert(v);
        }
    }
    BoundEnv out;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (keep[i]) out.entries_.push_back(entries_[i]);
    return out;
}

} // namespace polysing
