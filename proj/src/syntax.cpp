#include "polysing/syntax.hpp"

#include <sstream>
#include <stdexcept>

namespace polysing {

std::string name_text(const Name& n) { return n.id; }

ProcPtr make_process(ProcessTerm p) { return std::make_shared<const ProcessTerm>(std::move(p)); }

ProcPtr proc_idle(Span s) { return make_process(ProcessTerm{PIdle{}, s}); }
ProcPtr proc_var(std::string x, Span s) { return make_process(ProcessTerm{PProcVar{std::move(x)}, s}); }
ProcPtr proc_close(Name subject, Span s) {
    return make_process(ProcessTerm{PClose{std::move(subject)}, s});
}
ProcPtr proc_open(Name a, Name b, TypePtr annotation, ProcPtr body, Span s) {
    return make_process(
        ProcessTerm{POpen{std::move(a), std::move(b), std::move(annotation), std::move(body)}, s});
}
ProcPtr proc_send(Name subject, Tag tag, std::optional<TypePtr> inst, std::optional<Name> arg,
                  ProcPtr cont, Span s) {
    return make_process(ProcessTerm{
        PSend{std::move(subject), std::move(tag), std::move(inst), std::move(arg), std::move(cont)}, s});
}
ProcPtr proc_receive(Name subject, std::vector<ReceiveBranch> branches, Span s) {
    return make_process(ProcessTerm{PReceive{std::move(subject), std::move(branches)}, s});
}
ProcPtr proc_choice(ProcPtr l, ProcPtr r, Span s) {
    return make_process(ProcessTerm{PChoice{std::move(l), std::move(r)}, s});
}
ProcPtr proc_parallel(ProcPtr l, ProcPtr r, Span s) {
    return make_process(ProcessTerm{PParallel{std::move(l), std::move(r)}, s});
}
ProcPtr proc_rec(std::string x, ProcPtr body, Span s) {
    return make_process(ProcessTerm{PRec{std::move(x), std::move(body)}, s});
}

namespace {

void collect_free_names(const ProcPtr& p, std::set<Name>& bound, std::set<Name>& out) {
    auto add = [&](const Name& n) {
        if (!bound.count(n)) out.insert(n);
    };
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, PClose>) {
                add(node.subject);
            } else if constexpr (std::is_same_v<T, POpen>) {
                bool fa = bound.insert(node.binder_a).second;
                bool fb = bound.insert(node.binder_b).second;
                collect_free_names(node.body, bound, out);
                if (fa) bound.erase(node.binder_a);
                if (fb) bound.erase(node.binder_b);
            } else if constexpr (std::is_same_v<T, PSend>) {
                add(node.subject);
                if (node.argument) add(*node.argument);
                collect_free_names(node.continuation, bound, out);
            } else if constexpr (std::is_same_v<T, PReceive>) {
                add(node.subject);
                for (const auto& br : node.branches) {
                    bool fresh = br.binder && bound.insert(*br.binder).second;
                    collect_free_names(br.body, bound, out);
                    if (fresh) bound.erase(*br.binder);
                }
            } else if constexpr (std::is_same_v<T, PChoice> || std::is_same_v<T, PParallel>) {
                collect_free_names(node.left, bound, out);
                collect_free_names(node.right, bound, out);
            } else if constexpr (std::is_same_v<T, PRec>) {
                collect_free_names(node.body, bound, out);
            }
        },
        p->node);
}

} // namespace

std::set<Name> free_names(const ProcPtr& p) {
    std::set<Name> bound, out;
    collect_free_names(p, bound, out);
    return out;
}

namespace {

void collect_free_proc_vars(const ProcPtr& p, std::set<std::string>& bound,
                            std::set<std::string>& out) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, PProcVar>) {
                if (!bound.count(node.var)) out.insert(node.var);
            } else if constexpr (std::is_same_v<T, POpen>) {
                collect_free_proc_vars(node.body, bound, out);
            } else if constexpr (std::is_same_v<T, PSend>) {
                collect_free_proc_vars(node.continuation, bound, out);
            } else if constexpr (std::is_same_v<T, PReceive>) {
                for (const auto& br : node.branches) collect_free_proc_vars(br.body, bound, out);
            } else if constexpr (std::is_same_v<T, PChoice> || std::is_same_v<T, PParallel>) {
                collect_free_proc_vars(node.left, bound, out);
                collect_free_proc_vars(node.right, bound, out);
            } else if constexpr (std::is_same_v<T, PRec>) {
                bool fresh = bound.insert(node.var).second;
                collect_free_proc_vars(node.body, bound, out);
                if (fresh) bound.erase(node.var);
            }
        },
        p->node);
}

} // namespace

std::set<std::string> free_proc_vars(const ProcPtr& p) {
    std::set<std::string> bound, out;
    collect_free_proc_vars(p, bound, out);
    return out;
}

ProcPtr substitute_name(const ProcPtr& p, const Name& value, const Name& target) {
    auto repl = [&](const Name& n) { return n == target ? value : n; };
    return std::visit(
        [&](const auto& node) -> ProcPtr {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, PIdle> || std::is_same_v<T, PProcVar>) {
                return p;
            } else if constexpr (std::is_same_v<T, PClose>) {
                if (node.subject != target) return p;
                return proc_close(value, p->span);
            } else if constexpr (std::is_same_v<T, POpen>) {
                if (node.binder_a == target || node.binder_b == target) return p;
                ProcPtr body = substitute_name(node.body, value, target);
                if (body == node.body) return p;
                return proc_open(node.binder_a, node.binder_b, node.annotation, body, p->span);
            } else if constexpr (std::is_same_v<T, PSend>) {
                ProcPtr cont = substitute_name(node.continuation, value, target);
                Name subj = repl(node.subject);
                std::optional<Name> arg = node.argument;
                if (arg) arg = repl(*arg);
                if (cont == node.continuation && subj == node.subject && arg == node.argument)
                    return p;
                return proc_send(subj, node.tag, node.instantiation, arg, cont, p->span);
            } else if constexpr (std::is_same_v<T, PReceive>) {
                bool changed = node.subject == target;
                std::vector<ReceiveBranch> branches;
                branches.reserve(node.branches.size());
                for (const auto& br : node.branches) {
                    ReceiveBranch nb = br;
                    if (!(br.binder && *br.binder == target))
                        nb.body = substitute_name(br.body, value, target);
                    changed = changed || nb.body != br.body;
                    branches.push_back(std::move(nb));
                }
                if (!changed) return p;
                return proc_receive(repl(node.subject), std::move(branches), p->span);
            } else if constexpr (std::is_same_v<T, PChoice>) {
                ProcPtr l = substitute_name(node.left, value, target);
                ProcPtr r = substitute_name(node.right, value, target);
                if (l == node.left && r == node.right) return p;
                return proc_choice(l, r, p->span);
            } else if constexpr (std::is_same_v<T, PParallel>) {
                ProcPtr l = substitute_name(node.left, value, target);
                ProcPtr r = substitute_name(node.right, value, target);
                if (l == node.left && r == node.right) return p;
                return proc_parallel(l, r, p->span);
            } else { // PRec
                ProcPtr body = substitute_name(node.body, value, target);
                if (body == node.body) return p;
                return proc_rec(node.var, body, p->span);
            }
        },
        p->node);
}

ProcPtr substitute_proc_var(const ProcPtr& p, const ProcPtr& value, const std::string& x) {
    return std::visit(
        [&](const auto& node) -> ProcPtr {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, PProcVar>) {
                return node.var == x ? value : p;
            } else if constexpr (std::is_same_v<T, POpen>) {
                ProcPtr body = substitute_proc_var(node.body, value, x);
                if (body == node.body) return p;
                return proc_open(node.binder_a, node.binder_b, node.annotation, body, p->span);
            } else if constexpr (std::is_same_v<T, PSend>) {
                ProcPtr cont = substitute_proc_var(node.continuation, value, x);
                if (cont == node.continuation) return p;
                return proc_send(node.subject, node.tag, node.instantiation, node.argument, cont,
                                 p->span);
            } else if constexpr (std::is_same_v<T, PReceive>) {
                bool changed = false;
                std::vector<ReceiveBranch> branches;
                branches.reserve(node.branches.size());
                for (const auto& br : node.branches) {
                    ReceiveBranch nb = br;
                    nb.body = substitute_proc_var(br.body, value, x);
                    changed = changed || nb.body != br.body;
                    branches.push_back(std::move(nb));
                }
                if (!changed) return p;
                return proc_receive(node.subject, std::move(branches), p->span);
            } else if constexpr (std::is_same_v<T, PChoice>) {
                ProcPtr l = substitute_proc_var(node.left, value, x);
                ProcPtr r = substitute_proc_var(node.right, value, x);
                if (l == node.left && r == node.right) return p;
                return proc_choice(l, r, p->span);
            } else if constexpr (std::is_same_v<T, PParallel>) {
                ProcPtr l = substitute_proc_var(node.left, value, x);
                ProcPtr r = substitute_proc_var(node.right, value, x);
                if (l == node.left && r == node.right) return p;
                return proc_parallel(l, r, p->span);
            } else if constexpr (std::is_same_v<T, PRec>) {
                if (node.var == x) return p;
                ProcPtr body = substitute_proc_var(node.body, value, x);
                if (body == node.body) return p;
                return proc_rec(node.var, body, p->span);
            } else {
                return p;
            }
        },
        p->node);
}

ProcPtr unfold_rec(const ProcPtr& p) {
    const auto* rec = std::get_if<PRec>(&p->node);
    if (!rec) throw std::logic_error("unfold_rec: term is not a recursion");
    return substitute_proc_var(rec->body, p, rec->var);
}

namespace {

void collect_atoms(const ProcPtr& p, std::vector<ProcPtr>& out) {
    if (std::holds_alternative<PIdle>(p->node)) return;
    if (const auto* par = std::get_if<PParallel>(&p->node)) {
        collect_atoms(par->left, out);
        collect_atoms(par->right, out);
        return;
    }
    out.push_back(p);
}

} // namespace

std::vector<ProcPtr> parallel_atoms(const ProcPtr& p) {
    std::vector<ProcPtr> out;
    collect_atoms(p, out);
    return out;
}

ProcPtr compose_atoms(const std::vector<ProcPtr>& atoms) {
    if (atoms.empty()) return proc_idle();
    ProcPtr acc = atoms.back();
    for (std::size_t i = atoms.size() - 1; i-- > 0;) acc = proc_parallel(atoms[i], acc);
    return acc;
}

namespace {

struct CanonCtx {
    std::map<Name, std::string> names;       // binder renaming
    std::map<std::string, std::string> procs; // proc-var renaming
    int counter = 0;

    std::string fresh() { return "%" + std::to_string(counter++); }
};

std::string canon_name(const CanonCtx& ctx, const Name& n) {
    auto it = ctx.names.find(n);
    std::string base = it != ctx.names.end() ? it->second : n.id;
    return (n.kind == NameKind::Location ? "L:" : "V:") + base;
}

void canon_type(const TypePtr& t, std::map<std::string, std::string> renames, int& counter,
                std::ostream& os);

void canon_proc(const ProcPtr& p, CanonCtx ctx, std::ostream& os) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, PIdle>) {
                os << "0";
            } else if constexpr (std::is_same_v<T, PProcVar>) {
                auto it = ctx.procs.find(node.var);
                os << "X(" << (it != ctx.procs.end() ? it->second : node.var) << ")";
            } else if constexpr (std::is_same_v<T, PClose>) {
                os << "close(" << canon_name(ctx, node.subject) << ")";
            } else if constexpr (std::is_same_v<T, POpen>) {
                std::string na = ctx.fresh(), nb = ctx.fresh();
                os << "open(" << na << "," << nb;
                if (node.annotation) {
                    os << ":";
                    int c = ctx.counter;
                    canon_type(node.annotation, {}, c, os);
                }
                os << ").";
                CanonCtx inner = ctx;
                inner.names[node.binder_a] = na;
                inner.names[node.binder_b] = nb;
                canon_proc(node.body, inner, os);
            } else if constexpr (std::is_same_v<T, PSend>) {
                os << canon_name(ctx, node.subject) << "!" << node.tag;
                if (node.instantiation) {
                    os << "<";
                    int c = 0;
                    canon_type(*node.instantiation, {}, c, os);
                    os << ">";
                }
                if (node.argument) os << "(" << canon_name(ctx, *node.argument) << ")";
                os << ".";
                canon_proc(node.continuation, ctx, os);
            } else if constexpr (std::is_same_v<T, PReceive>) {
                // Branch order is irrelevant; sort by tag.
                std::vector<const ReceiveBranch*> sorted;
                for (const auto& br : node.branches) sorted.push_back(&br);
                std::sort(sorted.begin(), sorted.end(),
                          [](const ReceiveBranch* a, const ReceiveBranch* b) { return a->tag < b->tag; });
                os << canon_name(ctx, node.subject) << "?{";
                for (const auto* br : sorted) {
                    os << br->tag;
                    CanonCtx inner = ctx;
                    if (br->binder) {
                        std::string nx = inner.fresh();
                        inner.names[*br->binder] = nx;
                        os << "(" << nx << ")";
                    }
                    os << ".";
                    canon_proc(br->body, inner, os);
                    os << ",";
                }
                os << "}";
            } else if constexpr (std::is_same_v<T, PChoice>) {
                os << "(";
                canon_proc(node.left, ctx, os);
                os << ")(+)(";
                canon_proc(node.right, ctx, os);
                os << ")";
            } else if constexpr (std::is_same_v<T, PParallel>) {
                os << "(";
                canon_proc(node.left, ctx, os);
                os << ")||(";
                canon_proc(node.right, ctx, os);
                os << ")";
            } else if constexpr (std::is_same_v<T, PRec>) {
                std::string nx = ctx.fresh();
                os << "rec " << nx << ".";
                CanonCtx inner = ctx;
                inner.procs[node.var] = nx;
                canon_proc(node.body, inner, os);
            }
        },
        p->node);
}

void canon_type(const TypePtr& t, std::map<std::string, std::string> renames, int& counter,
                std::ostream& os) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, TTop>) {
                os << "Top";
            } else if constexpr (std::is_same_v<T, TBase>) {
                os << "base:" << node.name;
            } else if constexpr (std::is_same_v<T, TEnd>) {
                os << "end";
            } else if constexpr (std::is_same_v<T, TVar>) {
                auto it = renames.find(node.name);
                os << "v:" << (it != renames.end() ? it->second : node.name);
            } else if constexpr (std::is_same_v<T, TMu>) {
                std::string nv = "%" + std::to_string(counter++);
                os << "rec " << nv << ".";
                auto inner = renames;
                inner[node.var] = nv;
                canon_type(node.body, inner, counter, os);
            } else if constexpr (std::is_same_v<T, TChoice>) {
                std::vector<const TypeBranch*> sorted;
                for (const auto& br : node.branches) sorted.push_back(&br);
                std::sort(sorted.begin(), sorted.end(),
                          [](const TypeBranch* a, const TypeBranch* b) { return a->tag < b->tag; });
                os << (node.kind == ChoiceKind::Internal ? "+{" : "&{");
                for (const auto* br : sorted) {
                    os << br->tag;
                    std::string nv = "%" + std::to_string(counter++);
                    os << "<" << nv << "<:";
                    canon_type(br->bound, renames, counter, os);
                    os << ">";
                    auto inner = renames;
                    inner[br->binder] = nv;
                    if (br->payload) {
                        os << "(";
                        canon_type(*br->payload, inner, counter, os);
                        os << ")";
                    }
                    os << ".";
                    canon_type(br->continuation, inner, counter, os);
                    os << ",";
                }
                os << "}";
            }
        },
        t->node);
}

} // namespace

std::string canonical_process_string(const ProcPtr& p) {
    std::ostringstream os;
    canon_proc(p, CanonCtx{}, os);
    return os.str();
}

bool alpha_equal(const ProcPtr& a, const ProcPtr& b) {
    return canonical_process_string(a) == canonical_process_string(b);
}

std::set<Name> Heap::domain() const {
    std::set<Name> out;
    for (const auto& [k, v] : entries) out.insert(k);
    return out;
}

} // namespace polysing
