#include "polysing/typealgebra.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace polysing {

namespace {

struct Budget {
    long remaining;
    const char* what;

    void tick() {
        if (--remaining < 0) throw BudgetExceeded(std::string(what) + ": step budget exceeded");
    }
};

void canon_rec(const TypePtr& t, std::map<std::string, std::string> renames, int& counter,
               std::ostringstream& os) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, TTop>) {
                os << "Top";
            } else if constexpr (std::is_same_v<T, TBase>) {
                os << "B:" << node.name;
            } else if constexpr (std::is_same_v<T, TEnd>) {
                os << "end";
            } else if constexpr (std::is_same_v<T, TVar>) {
                auto it = renames.find(node.name);
                os << "v:" << (it != renames.end() ? it->second : node.name);
            } else if constexpr (std::is_same_v<T, TMu>) {
                std::string nv = "%" + std::to_string(counter++);
                os << "mu " << nv << ".";
                auto inner = renames;
                inner[node.var] = nv;
                canon_rec(node.body, inner, counter, os);
            } else if constexpr (std::is_same_v<T, TChoice>) {
                std::vector<const TypeBranch*> sorted;
                for (const auto& br : node.branches) sorted.push_back(&br);
                std::sort(sorted.begin(), sorted.end(),
                          [](const TypeBranch* a, const TypeBranch* b) { return a->tag < b->tag; });
                os << (node.kind == ChoiceKind::Internal ? "+{" : "&{");
                for (const auto* br : sorted) {
                    os << br->tag << "<";
                    std::string nv = "%" + std::to_string(counter++);
                    os << nv << "<:";
                    canon_rec(br->bound, renames, counter, os);
                    os << ">";
                    auto inner = renames;
                    inner[br->binder] = nv;
                    if (br->payload) {
                        os << "(";
                        canon_rec(*br->payload, inner, counter, os);
                        os << ")";
                    }
                    os << ".";
                    canon_rec(br->continuation, inner, counter, os);
                    os << ",";
                }
                os << "}";
            }
        },
        t->node);
}

std::string canon_with(const TypePtr& t, const std::map<std::string, std::string>& freeRenames) {
    std::ostringstream os;
    int counter = 0;
    canon_rec(t, freeRenames, counter, os);
    return os.str();
}

/// Canonical key for a (delta, terms) state: delta trimmed to the
/// constraints the terms need, delta variables renamed positionally.
std::string state_key(const BoundEnv& delta, std::initializer_list<TypePtr> terms) {
    std::set<std::string> roots;
    for (const auto& t : terms)
        for (auto& v : free_type_vars(t)) roots.insert(v);
    BoundEnv trimmed = delta.trim(roots);
    std::map<std::string, std::string> renames;
    std::ostringstream os;
    int i = 0;
    for (const auto& c : trimmed.entries()) {
        std::string nv = "$" + std::to_string(i++);
        os << nv << "<=" << canon_with(c.bound, renames) << ";";
        renames[c.var] = nv; // later entries shadow earlier same-name ones
    }
    os << "|";
    for (const auto& t : terms) os << canon_with(t, renames) << "|";
    return os.str();
}

TypePtr unfold_mu_head(TypePtr t, Budget& b) {
    while (const auto* mu = std::get_if<TMu>(&t->node)) {
        b.tick();
        t = subst_type(mu->body, mu->var, t);
    }
    return t;
}

/// Common binder for a pair of aligned branches. Reuses the name when the
/// two sides agree; otherwise a token derived from both names, which is
/// capture-safe because a variable cannot occur free under its own binder.
std::string align_token(const std::string& l, const std::string& r) {
    if (l == r) return l;
    return "~" + l + "~" + r;
}

struct AlignedBranch {
    std::optional<TypePtr> payload_l, payload_r;
    TypePtr cont_l, cont_r;
    std::string binder;
};

AlignedBranch align_branches(const TypeBranch& l, const TypeBranch& r) {
    AlignedBranch out;
    out.binder = align_token(l.binder, r.binder);
    TypePtr tok = type_var(out.binder);
    auto ren = [&](const TypePtr& t, const std::string& from) {
        return from == out.binder ? t : subst_type(t, from, tok);
    };
    if (l.payload) out.payload_l = ren(*l.payload, l.binder);
    if (r.payload) out.payload_r = ren(*r.payload, r.binder);
    out.cont_l = ren(l.continuation, l.binder);
    out.cont_r = ren(r.continuation, r.binder);
    return out;
}

const TypeBranch* find_branch(const TChoice& c, const Tag& tag) {
    for (const auto& br : c.branches)
        if (br.tag == tag) return &br;
    return nullptr;
}

bool equal_rec(TypePtr t, TypePtr s, std::set<std::pair<std::string, std::string>>& assumed,
               Budget& b) {
    b.tick();
    t = unfold_mu_head(t, b);
    s = unfold_mu_head(s, b);
    std::string kt = canonical_type_string(t);
    std::string ks = canonical_type_string(s);
    if (kt == ks) return true;
    if (!assumed.insert({kt, ks}).second) return true;

    const auto* ct = std::get_if<TChoice>(&t->node);
    const auto* cs = std::get_if<TChoice>(&s->node);
    if (!ct || !cs) return false; // atoms differ: their canonical strings would match
    if (ct->kind != cs->kind || ct->branches.size() != cs->branches.size()) return false;
    for (const auto& bt : ct->branches) {
        const TypeBranch* bs = find_branch(*cs, bt.tag);
        if (!bs) return false;
        if (bt.payload.has_value() != bs->payload.has_value()) return false;
        if (!equal_rec(bt.bound, bs->bound, assumed, b)) return false;
        AlignedBranch al = align_branches(bt, *bs);
        if (al.payload_l && !equal_rec(*al.payload_l, *al.payload_r, assumed, b)) return false;
        if (!equal_rec(al.cont_l, al.cont_r, assumed, b)) return false;
    }
    return true;
}

bool equal_budgeted(const TypePtr& t, const TypePtr& s, Budget& b) {
    std::set<std::pair<std::string, std::string>> assumed;
    return equal_rec(t, s, assumed, b);
}

bool subtype_rec(const BoundEnv& delta, TypePtr t, TypePtr s, std::set<std::string>& assumed,
                 Budget& b) {
    b.tick();
    t = unfold_mu_head(t, b);
    s = unfold_mu_head(s, b);
    if (std::holds_alternative<TTop>(s->node)) return true; // item (2)
    std::string key = state_key(delta, {t, s});
    if (!assumed.insert(key).second) return true; // coinduction: revisit holds
    if (equal_budgeted(t, s, b)) return true;     // item (1)
    if (const auto* v = std::get_if<TVar>(&t->node)) { // item (3)
        const TypePtr* bound = delta.lookup(v->name);
        if (!bound) throw TypeAlgebraError("subtype: unbound type variable " + v->name);
        return subtype_rec(delta, *bound, s, assumed, b);
    }
    const auto* ct = std::get_if<TChoice>(&t->node);
    const auto* cs = std::get_if<TChoice>(&s->node);
    if (!ct || !cs || ct->kind != cs->kind) return false;

    if (ct->kind == ChoiceKind::External) {
        // item (4): subtype's tags are a subset; payloads and
        // continuations covariant under the shared constraint.
        for (const auto& bt : ct->branches) {
            const TypeBranch* bs = find_branch(*cs, bt.tag);
            if (!bs) return false;
            if (bt.payload.has_value() != bs->payload.has_value()) return false;
            if (!equal_budgeted(bt.bound, bs->bound, b)) return false; // Kernel rule
            AlignedBranch al = align_branches(bt, *bs);
            BoundEnv d2 = delta;
            d2.push(al.binder, bt.bound);
            if (al.payload_l && !subtype_rec(d2, *al.payload_l, *al.payload_r, assumed, b))
                return false;
            if (!subtype_rec(d2, al.cont_l, al.cont_r, assumed, b)) return false;
        }
        return true;
    }
    // item (5): supertype's tags are a subset; payloads contravariant,
    // continuations covariant.
    for (const auto& bs : cs->branches) {
        const TypeBranch* bt = find_branch(*ct, bs.tag);
        if (!bt) return false;
        if (bt->payload.has_value() != bs.payload.has_value()) return false;
        if (!equal_budgeted(bt->bound, bs.bound, b)) return false;
        AlignedBranch al = align_branches(*bt, bs);
        BoundEnv d2 = delta;
        d2.push(al.binder, bt->bound);
        if (al.payload_l && !subtype_rec(d2, *al.payload_r, *al.payload_l, assumed, b))
            return false;
        if (!subtype_rec(d2, al.cont_l, al.cont_r, assumed, b)) return false;
    }
    return true;
}

} // namespace

std::string canonical_type_string(const TypePtr& t) { return canon_with(t, {}); }

WfReport well_formed(const TypePtr& t, const std::set<std::string>& inner,
                     const std::set<std::string>& outer) {
    WfReport bad;
    bad.ok = false;
    bad.span = t->span;
    return std::visit(
        [&](const auto& node) -> WfReport {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, TTop> || std::is_same_v<T, TEnd> ||
                          std::is_same_v<T, TBase>) {
                return WfReport{};
            } else if constexpr (std::is_same_v<T, TVar>) {
                if (inner.count(node.name)) {
                    bad.message = "type variable '" + node.name +
                                  "' may occur only within prefixes here";
                    return bad;
                }
                if (!outer.count(node.name)) {
                    bad.message = "unbound type variable '" + node.name + "'";
                    return bad;
                }
                return WfReport{};
            } else if constexpr (std::is_same_v<T, TMu>) {
                if (!is_endpoint_type(*node.body)) {
                    bad.message = "recursion body must be an endpoint type";
                    return bad;
                }
                if (!is_contractive(t)) {
                    bad.message = "recursion variable '" + node.var +
                                  "' must be guarded by a choice prefix";
                    return bad;
                }
                auto o2 = outer;
                o2.insert(node.var);
                return well_formed(node.body, inner, o2);
            } else { // TChoice
                std::set<std::string> io = inner;
                io.insert(outer.begin(), outer.end());
                for (const auto& br : node.branches) {
                    WfReport r = well_formed(br.bound, {}, io);
                    if (!r.ok) return r;
                    if (br.payload) {
                        auto io2 = io;
                        io2.insert(br.binder);
                        r = well_formed(*br.payload, {}, io2);
                        if (!r.ok) return r;
                    }
                    if (!is_endpoint_type(*br.continuation)) {
                        bad.message = "continuation of tag '" + br.tag +
                                      "' must be an endpoint type";
                        bad.span = br.span;
                        return bad;
                    }
                    auto i2 = inner;
                    i2.insert(br.binder);
                    r = well_formed(br.continuation, i2, outer);
                    if (!r.ok) return r;
                }
                return WfReport{};
            }
        },
        t->node);
}

bool check_well_formed(const TypePtr& t, const std::set<std::string>& inner,
                       const std::set<std::string>& outer) {
    return well_formed(t, inner, outer).ok;
}

HeadForm head_normal(const BoundEnv& delta, const TypePtr& t, const AlgebraLimits& limits) {
    Budget b{limits.budget, "head_normal"};
    HeadForm out;
    out.head = t;
    for (;;) {
        if (const auto* mu = std::get_if<TMu>(&out.head->node)) {
            b.tick();
            out.head = subst_type(mu->body, mu->var, out.head);
            continue;
        }
        if (const auto* v = std::get_if<TVar>(&out.head->node)) {
            const TypePtr* bound = delta.lookup(v->name);
            if (!bound) throw TypeAlgebraError("head_normal: unbound type variable " + v->name);
            b.tick();
            out.promotions.push_back(v->name);
            out.head = *bound;
            continue;
        }
        return out;
    }
}

bool type_equal(const TypePtr& t, const TypePtr& s, const AlgebraLimits& limits) {
    Budget b{limits.budget, "type_equal"};
    return equal_budgeted(t, s, b);
}

TypePtr dual(const TypePtr& t, const AlgebraLimits& limits) {
    if (!is_endpoint_type(*t))
        throw TypeAlgebraError("dual: not an endpoint type");
    Budget b{limits.budget, "dual"};

    // Fresh mu-variable names that cannot clash with anything in t.
    std::set<std::string> taken = free_type_vars(t);
    int counter = 0;
    auto fresh_mu = [&]() {
        std::string v;
        do {
            v = "r" + std::to_string(counter++);
        } while (taken.count(v));
        return v;
    };

    struct InProgress {
        std::string mu_var;
        bool used = false;
    };
    std::map<std::string, InProgress> in_progress;

    std::function<TypePtr(TypePtr)> rec = [&](TypePtr u) -> TypePtr {
        b.tick();
        u = unfold_mu_head(u, b);
        std::string key = canonical_type_string(u);
        if (auto it = in_progress.find(key); it != in_progress.end()) {
            it->second.used = true;
            return type_var(it->second.mu_var, u->span);
        }
        if (std::holds_alternative<TEnd>(u->node)) return u;
        if (std::holds_alternative<TVar>(u->node))
            throw TypeAlgebraError("dual: undefined on free type variable '" +
                                   std::get<TVar>(u->node).name + "'");
        const auto* ch = std::get_if<TChoice>(&u->node);
        if (!ch) throw TypeAlgebraError("dual: not an endpoint type");

        auto [it, inserted] = in_progress.emplace(key, InProgress{fresh_mu()});
        std::vector<TypeBranch> branches;
        branches.reserve(ch->branches.size());
        for (const auto& br : ch->branches) {
            TypeBranch nb = br;
            nb.continuation = rec(br.continuation);
            branches.push_back(std::move(nb));
        }
        ChoiceKind flipped =
            ch->kind == ChoiceKind::Internal ? ChoiceKind::External : ChoiceKind::Internal;
        TypePtr result = type_choice(flipped, std::move(branches), u->span);
        if (it->second.used) result = type_mu(it->second.mu_var, result, u->span);
        in_progress.erase(it);
        return result;
    };
    return rec(t);
}

bool subtype(const BoundEnv& delta, const TypePtr& t, const TypePtr& s,
             const AlgebraLimits& limits) {
    Budget b{limits.budget, "subtype"};
    std::set<std::string> assumed;
    return subtype_rec(delta, t, s, assumed, b);
}

Weight weight(const BoundEnv& delta0, const TypePtr& t0, const AlgebraLimits& limits) {
    Budget b{limits.budget, "weight"};

    struct Node {
        bool sink = false;
        bool top = false;
        std::vector<std::pair<int, int>> edges; // (target, cost)
    };
    std::vector<Node> nodes;
    std::map<std::string, int> ids;

    std::function<int(const BoundEnv&, TypePtr)> explore = [&](const BoundEnv& delta,
                                                               TypePtr t) -> int {
        b.tick();
        t = unfold_mu_head(t, b);
        std::string key = state_key(delta, {t});
        if (auto it = ids.find(key); it != ids.end()) return it->second;
        int id = static_cast<int>(nodes.size());
        ids.emplace(key, id);
        nodes.emplace_back();

        if (std::holds_alternative<TEnd>(t->node) || std::holds_alternative<TBase>(t->node)) {
            nodes[id].sink = true;
            return id;
        }
        if (std::holds_alternative<TTop>(t->node)) {
            nodes[id].sink = true;
            nodes[id].top = true;
            return id;
        }
        if (const auto* v = std::get_if<TVar>(&t->node)) {
            const TypePtr* bound = delta.lookup(v->name);
            if (!bound) throw TypeAlgebraError("weight: unbound type variable " + v->name);
            int tgt = explore(delta, *bound);
            nodes[id].edges.emplace_back(tgt, 0);
            return id;
        }
        const auto& ch = std::get<TChoice>(t->node);
        if (ch.kind == ChoiceKind::Internal) {
            nodes[id].sink = true; // send-state endpoints weigh nothing
            return id;
        }
        for (const auto& br : ch.branches) {
            BoundEnv d2 = delta;
            d2.push(br.binder, br.bound);
            if (br.payload) {
                int tgt = explore(d2, *br.payload);
                nodes[id].edges.emplace_back(tgt, 1);
            }
            int tgt = explore(d2, br.continuation);
            nodes[id].edges.emplace_back(tgt, 0);
        }
        return id;
    };

    int root = explore(delta0, t0);
    int n = static_cast<int>(nodes.size());

    // Tarjan SCC; components are emitted targets-first.
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<bool> on_stack(n, false);
    std::vector<int> stack;
    int next_index = 0, next_comp = 0;
    std::function<void(int)> strongconnect = [&](int v) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = true;
        for (auto [w, cost] : nodes[v].edges) {
            if (index[w] < 0) {
                strongconnect(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            for (;;) {
                int w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp[w] = next_comp;
                if (w == v) break;
            }
            ++next_comp;
        }
    };
    for (int v = 0; v < n; ++v)
        if (index[v] < 0) strongconnect(v);

    // A positive-cost edge inside a component closes a positive cycle.
    std::vector<bool> comp_infinite(next_comp, false);
    for (int v = 0; v < n; ++v) {
        if (nodes[v].top) comp_infinite[comp[v]] = true;
        for (auto [w, cost] : nodes[v].edges)
            if (comp[v] == comp[w] && cost > 0) comp_infinite[comp[v]] = true;
    }

    // Components in Tarjan emission order have all their successors
    // already numbered, so a single pass computes the longest path.
    std::vector<Weight> comp_weight(next_comp, Weight::finite(0));
    for (int c = 0; c < next_comp; ++c)
        if (comp_infinite[c]) comp_weight[c] = Weight::infinity();
    for (int c = 0; c < next_comp; ++c) {
        if (comp_weight[c].is_infinite()) continue;
        Weight best = Weight::finite(0);
        for (int v = 0; v < n; ++v) {
            if (comp[v] != c) continue;
            for (auto [w, cost] : nodes[v].edges) {
                if (comp[w] == c) continue; // zero-cost internal edge
                Weight via = comp_weight[comp[w]].plus(static_cast<std::uint64_t>(cost));
                best = Weight::max(best, via);
            }
        }
        comp_weight[c] = best;
    }
    return comp_weight[comp[root]];
}

namespace {

bool match_rec(const TypePtr& pattern, const TypePtr& concrete, const std::string& var,
               std::vector<TypePtr>& found) {
    if (const auto* v = std::get_if<TVar>(&pattern->node)) {
        if (v->name == var) {
            found.push_back(concrete);
            return true;
        }
    }
    return std::visit(
        [&](const auto& pn) -> bool {
            using T = std::decay_t<decltype(pn)>;
            if constexpr (std::is_same_v<T, TTop>) {
                return std::holds_alternative<TTop>(concrete->node);
            } else if constexpr (std::is_same_v<T, TEnd>) {
                return std::holds_alternative<TEnd>(concrete->node);
            } else if constexpr (std::is_same_v<T, TBase>) {
                const auto* cb = std::get_if<TBase>(&concrete->node);
                return cb && cb->name == pn.name;
            } else if constexpr (std::is_same_v<T, TVar>) {
                const auto* cv = std::get_if<TVar>(&concrete->node);
                return cv && cv->name == pn.name;
            } else if constexpr (std::is_same_v<T, TMu>) {
                const auto* cm = std::get_if<TMu>(&concrete->node);
                if (!cm) return false;
                TypePtr body = cm->var == pn.var
                                   ? cm->body
                                   : subst_type(cm->body, cm->var, type_var(pn.var));
                return match_rec(pn.body, body, var, found);
            } else { // TChoice
                const auto* cc = std::get_if<TChoice>(&concrete->node);
                if (!cc || cc->kind != pn.kind || cc->branches.size() != pn.branches.size())
                    return false;
                for (const auto& pb : pn.branches) {
                    const TypeBranch* cb = find_branch(*cc, pb.tag);
                    if (!cb || pb.payload.has_value() != cb->payload.has_value()) return false;
                    if (!match_rec(pb.bound, cb->bound, var, found)) return false;
                    AlignedBranch al = align_branches(pb, *cb);
                    if (al.payload_l && !match_rec(*al.payload_l, *al.payload_r, var, found))
                        return false;
                    if (!match_rec(al.cont_l, al.cont_r, var, found)) return false;
                }
                return true;
            }
        },
        pattern->node);
}

std::optional<TypePtr> match_payload(const TypePtr& pattern, const TypePtr& concrete,
                                     const std::string& var, const AlgebraLimits& limits) {
    std::vector<TypePtr> found;
    if (!match_rec(pattern, concrete, var, found) || found.empty()) return std::nullopt;
    for (std::size_t i = 1; i < found.size(); ++i)
        if (!type_equal(found[0], found[i], limits)) return std::nullopt;
    return found[0];
}

} // namespace

TailResult tail(const TypePtr& t, const std::vector<MsgSpec>& specs, const AlgebraLimits& limits) {
    if (specs.empty()) return t;

    HeadForm hf = head_normal(BoundEnv{}, t, limits);
    const auto* ch = std::get_if<TChoice>(&hf.head->node);
    if (!ch || ch->kind != ChoiceKind::External)
        return TailFailure{TailFailure::Kind::NotExternalChoice,
                           "residual computation reached a head that is not an external choice"};
    const MsgSpec& spec = specs.front();
    const TypeBranch* br = find_branch(*ch, spec.tag);
    if (!br)
        return TailFailure{TailFailure::Kind::TagNotOffered,
                           "tag '" + spec.tag + "' is not offered by the endpoint type"};
    if (br->payload.has_value() != spec.arg_type.has_value())
        return TailFailure{TailFailure::Kind::ArityMismatch,
                           "queued message '" + spec.tag + "' arity does not match the type"};

    std::vector<TypePtr> candidates;
    auto push_candidate = [&](const TypePtr& c) {
        for (const auto& existing : candidates)
            if (type_equal(existing, c, limits)) return;
        candidates.push_back(c);
    };
    if (spec.arg_type) {
        if (const auto* pv = std::get_if<TVar>(&(*br->payload)->node); pv && pv->name == br->binder)
            push_candidate(*spec.arg_type);
        if (auto m = match_payload(*br->payload, *spec.arg_type, br->binder, limits))
            push_candidate(*m);
    }
    push_candidate(br->bound);

    std::vector<MsgSpec> rest(specs.begin() + 1, specs.end());
    std::string why;
    for (const auto& cand : candidates) {
        if (!subtype(BoundEnv{}, cand, br->bound, limits)) {
            why = "candidate instantiation is not a subtype of the bound";
            continue;
        }
        if (br->payload) {
            TypePtr expected = subst_type(*br->payload, br->binder, cand);
            if (!subtype(BoundEnv{}, *spec.arg_type, expected, limits)) {
                why = "queued argument type does not match the instantiated payload";
                continue;
            }
        }
        return tail(subst_type(br->continuation, br->binder, cand), rest, limits);
    }
    return TailFailure{TailFailure::Kind::NoInstantiation,
                       why.empty() ? "no usable instantiation for tag '" + spec.tag + "'" : why};
}

} // namespace polysing
