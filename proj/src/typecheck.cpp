#include "polysing/typecheck.hpp"

#include "polysing/runtime.hpp"

#include <algorithm>
#include <sstream>

namespace polysing {

namespace {

std::string origin_key(const Name& n) {
    return (n.kind == NameKind::Location ? "L:" : "V:") + n.id;
}

std::string names_list(const std::set<Name>& names) {
    std::ostringstream os;
    bool first = true;
    for (const auto& n : names) {
        if (!first) os << ", ";
        first = false;
        os << n.id;
    }
    return os.str();
}

/// fn(p) extended so a process variable demands the domain of its
/// recorded environment; linear splitting needs this to route resources
/// toward recursive continuations.
void needed_names_rec(const ProcPtr& p, const ProcEnv& sigma, std::set<Name>& bound,
                      std::set<Name>& out) {
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            auto add = [&](const Name& n) {
                if (!bound.count(n)) out.insert(n);
            };
            if constexpr (std::is_same_v<T, PProcVar>) {
                auto it = sigma.find(node.var);
                if (it != sigma.end())
                    for (const auto& [n, t] : it->second.gamma.entries) add(n);
            } else if constexpr (std::is_same_v<T, PClose>) {
                add(node.subject);
            } else if constexpr (std::is_same_v<T, POpen>) {
                bool fa = bound.insert(node.binder_a).second;
                bool fb = bound.insert(node.binder_b).second;
                needed_names_rec(node.body, sigma, bound, out);
                if (fa) bound.erase(node.binder_a);
                if (fb) bound.erase(node.binder_b);
            } else if constexpr (std::is_same_v<T, PSend>) {
                add(node.subject);
                if (node.argument) add(*node.argument);
                needed_names_rec(node.continuation, sigma, bound, out);
            } else if constexpr (std::is_same_v<T, PReceive>) {
                add(node.subject);
                for (const auto& br : node.branches) {
                    bool fresh = br.binder && bound.insert(*br.binder).second;
                    needed_names_rec(br.body, sigma, bound, out);
                    if (fresh) bound.erase(*br.binder);
                }
            } else if constexpr (std::is_same_v<T, PChoice> || std::is_same_v<T, PParallel>) {
                needed_names_rec(node.left, sigma, bound, out);
                needed_names_rec(node.right, sigma, bound, out);
            } else if constexpr (std::is_same_v<T, PRec>) {
                needed_names_rec(node.body, sigma, bound, out);
            }
        },
        p->node);
}

std::set<Name> needed_names(const ProcPtr& p, const ProcEnv& sigma) {
    std::set<Name> bound, out;
    needed_names_rec(p, sigma, bound, out);
    return out;
}

std::set<std::string> delta_domain(const BoundEnv& delta) {
    std::set<std::string> out;
    for (const auto& c : delta.entries()) out.insert(c.var);
    return out;
}

std::set<std::string> gamma_free_type_vars(const TypeEnv& gamma) {
    std::set<std::string> out;
    for (const auto& [n, t] : gamma.entries)
        for (const auto& v : free_type_vars(t)) out.insert(v);
    return out;
}

} // namespace

std::set<Name> TypeEnv::domain() const {
    std::set<Name> out;
    for (const auto& [n, t] : entries) out.insert(n);
    return out;
}

std::variant<std::pair<TypeEnv, TypeEnv>, TypeError>
split_env(const TypeEnv& gamma, const ProcPtr& p, const ProcPtr& q, const ProcEnv& sigma) {
    std::set<Name> np = needed_names(p, sigma);
    std::set<Name> nq = needed_names(q, sigma);
    TypeEnv gp, gq;
    for (const auto& [n, t] : gamma.entries) {
        bool inp = np.count(n) != 0;
        bool inq = nq.count(n) != 0;
        if (inp && inq)
            return TypeError{"T-Par", "T-Par: name '" + n.id + "' is used by both components",
                             p->span};
        if (!inp && !inq)
            return TypeError{"T-Par", "T-Par: unused linear name '" + n.id + "'", p->span};
        (inp ? gp : gq).entries.emplace(n, t);
    }
    return std::make_pair(std::move(gp), std::move(gq));
}

std::variant<TypePtr, TypeError>
infer_send_instantiation(const BoundEnv& delta, const std::optional<TypePtr>& arg_type,
                         const TypeBranch& branch, Span site) {
    (void)delta;
    bool in_payload = branch.payload && free_type_vars(*branch.payload).count(branch.binder);
    bool in_cont = free_type_vars(branch.continuation).count(branch.binder) != 0;
    if (!in_payload && !in_cont) return branch.bound; // vacuous quantifier
    if (branch.payload) {
        const auto* pv = std::get_if<TVar>(&(*branch.payload)->node);
        if (pv && pv->name == branch.binder && arg_type) return *arg_type;
    }
    return TypeError{"T-Send",
                     "T-Send: instantiation annotation required for tag '" + branch.tag + "'",
                     site};
}

std::string ProcessChecker::fresh_type_var(const std::string& base) {
    return base + "#" + std::to_string(fresh_counter_++);
}

namespace {

const char* rule_of(const ProcessTerm& p) {
    return std::visit(
        [](const auto& node) -> const char* {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, PIdle>) return "T-Idle";
            else if constexpr (std::is_same_v<T, PProcVar>) return "T-Var";
            else if constexpr (std::is_same_v<T, PClose>) return "T-Close";
            else if constexpr (std::is_same_v<T, POpen>) return "T-Open";
            else if constexpr (std::is_same_v<T, PSend>) return "T-Send";
            else if constexpr (std::is_same_v<T, PReceive>) return "T-Receive";
            else if constexpr (std::is_same_v<T, PChoice>) return "T-Choice";
            else if constexpr (std::is_same_v<T, PParallel>) return "T-Par";
            else return "T-Rec";
        },
        p.node);
}

} // namespace

void ProcessChecker::record(const std::string& rule, const TypeEnv& gamma, Span span) {
    std::ostringstream os;
    os << rule << " @" << span.line << ":" << span.col << " {" << names_list(gamma.domain())
       << "}";
    derivation_.push_back(os.str());
}

std::optional<TypeError> ProcessChecker::check(const ProcEnv& sigma, const BoundEnv& delta,
                                               TypeEnv gamma, const ProcPtr& p) {
    record(rule_of(*p), gamma, p->span);
    return std::visit(
        [&](const auto& node) -> std::optional<TypeError> {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, PIdle>) {
                if (!gamma.entries.empty())
                    return TypeError{"T-Idle",
                                     "T-Idle: unused linear name(s) " +
                                         names_list(gamma.domain()),
                                     p->span};
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, PClose>) {
                const TypePtr* t = gamma.lookup(node.subject);
                if (!t)
                    return TypeError{"T-Close",
                                     "T-Close: unknown or already-consumed name '" +
                                         node.subject.id + "'",
                                     p->span};
                if (gamma.entries.size() != 1) {
                    auto rest = gamma.domain();
                    rest.erase(node.subject);
                    return TypeError{"T-Close",
                                     "T-Close: unused linear name(s) " + names_list(rest),
                                     p->span};
                }
                HeadForm hf = head_normal(delta, *t, opts_.limits);
                if (!std::holds_alternative<TEnd>(hf.head->node))
                    return TypeError{"T-Close",
                                     "T-Close: endpoint '" + node.subject.id +
                                         "' is not at end (type " + print_type(*t) + ")",
                                     p->span};
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, POpen>) {
                if (!node.annotation)
                    return TypeError{"T-Open",
                                     "T-Open: binder annotation required: open(" +
                                         node.binder_a.id + " : T, " + node.binder_b.id + ")",
                                     p->span};
                WfReport wf = well_formed(node.annotation, {}, {});
                if (!wf.ok)
                    return TypeError{"T-Open", "T-Open: annotation is not well formed: " +
                                                   wf.message,
                                     p->span};
                if (!is_endpoint_type(*node.annotation))
                    return TypeError{"T-Open", "T-Open: annotation must be an endpoint type",
                                     p->span};
                TypePtr dualized;
                try {
                    dualized = dual(node.annotation, opts_.limits);
                } catch (const TypeAlgebraError& e) {
                    return TypeError{"T-Open", std::string("T-Open: ") + e.what(), p->span};
                }
                if (gamma.contains(node.binder_a) || gamma.contains(node.binder_b))
                    return TypeError{"T-Open", "T-Open: binder shadows a linear name", p->span};
                gamma.entries.emplace(node.binder_a, node.annotation);
                gamma.entries.emplace(node.binder_b, dualized);
                return check(sigma, delta, std::move(gamma), node.body);
            } else if constexpr (std::is_same_v<T, PSend>) {
                return check_send(sigma, delta, std::move(gamma), p);
            } else if constexpr (std::is_same_v<T, PReceive>) {
                return check_receive(sigma, delta, gamma, p);
            } else if constexpr (std::is_same_v<T, PChoice>) {
                if (auto err = check(sigma, delta, gamma, node.left)) return err;
                return check(sigma, delta, std::move(gamma), node.right);
            } else if constexpr (std::is_same_v<T, PParallel>) {
                auto split = split_env(gamma, node.left, node.right, sigma);
                if (auto* err = std::get_if<TypeError>(&split)) return *err;
                auto& [gl, gr] = std::get<std::pair<TypeEnv, TypeEnv>>(split);
                if (auto err = check(sigma, delta, gl, node.left)) return err;
                return check(sigma, delta, gr, node.right);
            } else if constexpr (std::is_same_v<T, PRec>) {
                std::set<Name> fn = free_names(node.body);
                if (fn != gamma.domain())
                    return TypeError{"T-Rec",
                                     "T-Rec: environment/free-name mismatch: environment has {" +
                                         names_list(gamma.domain()) + "} but the body uses {" +
                                         names_list(fn) + "}",
                                     p->span};
                ProcEnv sigma2 = sigma;
                sigma2[node.var] = ProcEnvEntry{delta, gamma};
                return check(sigma2, delta, std::move(gamma), node.body);
            } else { // PProcVar
                auto it = sigma.find(node.var);
                if (it == sigma.end())
                    return TypeError{"T-Var", "T-Var: unbound process variable " + node.var,
                                     p->span};
                const ProcEnvEntry& snap = it->second;
                if (snap.gamma.domain() != gamma.domain())
                    return TypeError{"T-Var",
                                     "T-Var: environment of '" + node.var +
                                         "' does not match its recursion: {" +
                                         names_list(gamma.domain()) + "} vs {" +
                                         names_list(snap.gamma.domain()) + "}",
                                     p->span};
                for (const auto& [n, t] : gamma.entries) {
                    const TypePtr* st = snap.gamma.lookup(n);
                    if (!type_equal(t, *st, opts_.limits))
                        return TypeError{"T-Var",
                                         "T-Var: type of '" + n.id +
                                             "' changed across the recursion: " + print_type(t) +
                                             " vs " + print_type(*st),
                                         p->span};
                }
                // Bound environments are compared after trimming to the
                // constraints the environments actually mention.
                BoundEnv cur = delta.trim(gamma_free_type_vars(gamma));
                BoundEnv old = snap.delta.trim(gamma_free_type_vars(snap.gamma));
                if (cur.size() != old.size())
                    return TypeError{"T-Var",
                                     "T-Var: bound environment changed across the recursion",
                                     p->span};
                for (std::size_t i = 0; i < cur.size(); ++i) {
                    const auto& a = cur.entries()[i];
                    const auto& b = old.entries()[i];
                    if (a.var != b.var || !type_equal(a.bound, b.bound, opts_.limits))
                        return TypeError{"T-Var",
                                         "T-Var: bound environment changed across the recursion "
                                         "(constraint on '" +
                                             a.var + "')",
                                         p->span};
                }
                return std::nullopt;
            }
        },
        p->node);
}

std::optional<TypeError> ProcessChecker::check_send(const ProcEnv& sigma, const BoundEnv& delta,
                                                    TypeEnv gamma, const ProcPtr& p) {
    const auto& node = std::get<PSend>(p->node);
    const TypePtr* subject_type = gamma.lookup(node.subject);
    if (!subject_type)
        return TypeError{"T-Send",
                         "T-Send: unknown or already-consumed name '" + node.subject.id + "'",
                         p->span};
    HeadForm hf = head_normal(delta, *subject_type, opts_.limits);
    const auto* ch = std::get_if<TChoice>(&hf.head->node);
    if (!ch || ch->kind != ChoiceKind::Internal)
        return TypeError{"T-Send",
                         "T-Send: '" + node.subject.id + "' is not in a send state (type " +
                             print_type(*subject_type) + ")",
                         p->span};
    const TypeBranch* br = nullptr;
    for (const auto& b : ch->branches)
        if (b.tag == node.tag) br = &b;
    if (!br)
        return TypeError{"T-Send",
                         "T-Send: type of '" + node.subject.id + "' offers no tag '" + node.tag +
                             "'",
                         p->span};
    if (br->payload.has_value() != node.argument.has_value())
        return TypeError{"T-Send",
                         "T-Send: tag '" + node.tag + "' expects " +
                             (br->payload ? "an argument" : "no argument"),
                         p->span};
    std::optional<TypePtr> arg_type;
    if (node.argument) {
        if (*node.argument == node.subject)
            return TypeError{"T-Send", "T-Send: argument and subject coincide", p->span};
        const TypePtr* at = gamma.lookup(*node.argument);
        if (!at)
            return TypeError{"T-Send",
                             "T-Send: unknown or already-consumed name '" + node.argument->id +
                                 "'",
                             p->span};
        arg_type = *at;
    }

    TypePtr inst;
    if (node.instantiation) {
        inst = *node.instantiation;
        WfReport wf = well_formed(inst, {}, delta_domain(delta));
        if (!wf.ok)
            return TypeError{"T-Send", "T-Send: instantiation is not well formed: " + wf.message,
                             p->span};
    } else {
        auto inferred = infer_send_instantiation(delta, arg_type, *br, p->span);
        if (auto* err = std::get_if<TypeError>(&inferred)) return *err;
        inst = std::get<TypePtr>(inferred);
    }
    if (!subtype(delta, inst, br->bound, opts_.limits))
        return TypeError{"T-Send",
                         "T-Send: instantiation " + print_type(inst) +
                             " exceeds the bound " + print_type(br->bound) + " of tag '" +
                             node.tag + "'",
                         p->span};

    if (node.argument) {
        TypePtr payload = subst_type(*br->payload, br->binder, inst);
        Weight w = weight(delta, payload, opts_.limits);
        if (w.is_infinite()) {
            // A value whose type is exactly the existential introduced by a
            // receive on this same endpoint is being handed back on it; its
            // runtime instantiation already passed the sender-side premise,
            // so the finite-weight requirement is discharged.
            bool returned_existential = false;
            if (const auto* pv = std::get_if<TVar>(&payload->node)) {
                const BoundConstraint* c = delta.lookup_constraint(pv->name);
                returned_existential =
                    c && c->origin && *c->origin == origin_key(node.subject);
            }
            if (!returned_existential)
                return TypeError{"T-Send",
                                 "T-Send: infinite-weight argument type " + print_type(payload) +
                                     " (weight inf) for tag '" + node.tag + "'",
                                 p->span};
        }
        if (!subtype(delta, *arg_type, payload, opts_.limits))
            return TypeError{"T-Send",
                             "T-Send: argument '" + node.argument->id + "' has type " +
                                 print_type(*arg_type) + " but tag '" + node.tag + "' expects " +
                                 print_type(payload),
                             p->span};
        gamma.entries.erase(*node.argument);
    }
    gamma.entries[node.subject] = subst_type(br->continuation, br->binder, inst);
    return check(sigma, delta, std::move(gamma), node.continuation);
}

std::optional<TypeError> ProcessChecker::check_receive(const ProcEnv& sigma,
                                                       const BoundEnv& delta,
                                                       const TypeEnv& gamma, const ProcPtr& p) {
    const auto& node = std::get<PReceive>(p->node);
    const TypePtr* subject_type = gamma.lookup(node.subject);
    if (!subject_type)
        return TypeError{"T-Receive",
                         "T-Receive: unknown or already-consumed name '" + node.subject.id + "'",
                         p->span};
    HeadForm hf = head_normal(delta, *subject_type, opts_.limits);
    const auto* ch = std::get_if<TChoice>(&hf.head->node);
    if (!ch || ch->kind != ChoiceKind::External)
        return TypeError{"T-Receive",
                         "T-Receive: '" + node.subject.id + "' is not in a receive state (type " +
                             print_type(*subject_type) + ")",
                         p->span};

    std::set<Tag> type_tags;
    for (const auto& b : ch->branches) type_tags.insert(b.tag);
    for (const auto& pb : node.branches)
        if (!type_tags.count(pb.tag))
            warnings_.push_back(Diagnostic{Diagnostic::Severity::Warning, "W001",
                                           "dead receive branch: tag '" + pb.tag +
                                               "' can never arrive on '" + node.subject.id + "'",
                                           "", pb.span});

    for (const auto& tb : ch->branches) {
        const ReceiveBranch* pb = nullptr;
        for (const auto& b : node.branches)
            if (b.tag == tb.tag) pb = &b;
        if (!pb)
            return TypeError{"T-Receive",
                             "T-Receive: unhandled tag '" + tb.tag + "' on '" + node.subject.id +
                                 "'",
                             p->span};
        if (tb.payload.has_value() != pb->binder.has_value())
            return TypeError{"T-Receive",
                             "T-Receive: tag '" + tb.tag + "' carries " +
                                 (tb.payload ? "an argument" : "no argument"),
                             pb->span};
        // Freshen the branch binder so the extended environment never
        // shadows an existing constraint.
        std::string fresh = tb.binder;
        if (delta.contains(fresh) || free_type_vars(hf.head).count(fresh))
            fresh = fresh_type_var(tb.binder);
        TypePtr fresh_var = type_var(fresh);
        TypePtr cont = tb.continuation;
        std::optional<TypePtr> payload = tb.payload;
        if (fresh != tb.binder) {
            cont = subst_type(cont, tb.binder, fresh_var);
            if (payload) payload = subst_type(*payload, tb.binder, fresh_var);
        }
        BoundEnv delta2 = delta;
        delta2.push(fresh, tb.bound, origin_key(node.subject));
        TypeEnv gamma2 = gamma;
        gamma2.entries[node.subject] = cont;
        if (pb->binder) {
            if (gamma2.contains(*pb->binder))
                return TypeError{"T-Receive",
                                 "T-Receive: binder '" + pb->binder->id +
                                     "' shadows a linear name",
                                 pb->span};
            gamma2.entries.emplace(*pb->binder, *payload);
        }
        if (auto err = check(sigma, delta2, std::move(gamma2), pb->body)) return err;
    }
    return std::nullopt;
}

namespace {

std::vector<MsgSpec> queue_specs(const std::deque<Message>& queue, const TypeEnv& gamma0,
                                 const TypeEnv& gamma, std::optional<TypeError>& err, Span span) {
    std::vector<MsgSpec> specs;
    for (const auto& msg : queue) {
        MsgSpec spec;
        spec.tag = msg.tag;
        if (msg.argument) {
            const TypePtr* t = gamma0.lookup(*msg.argument);
            if (!t) t = gamma.lookup(*msg.argument);
            if (!t) {
                err = TypeError{"Heap-2",
                                "heap condition (2): queued argument '" + msg.argument->id +
                                    "' has no type in the environment",
                                span};
                return specs;
            }
            spec.arg_type = *t;
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

} // namespace

std::optional<TypeError> check_heap(const TypeEnv& gamma0, const TypeEnv& gamma, const Heap& heap,
                                    const CheckOptions& opts) {
    Span nowhere{};
    for (const auto& [n, t] : gamma0.entries)
        if (gamma.contains(n))
            return TypeError{"Heap", "heap environments overlap on '" + n.id + "'", nowhere};

    // (1) peers are mutual and at most one queue per pair is nonempty
    for (const auto& [a, rec] : heap.entries) {
        auto it = heap.entries.find(rec.peer);
        if (it == heap.entries.end())
            return TypeError{"Heap-1",
                             "heap condition (1): peer '" + rec.peer.id + "' of '" + a.id +
                                 "' is not allocated",
                             nowhere};
        if (it->second.peer != a)
            return TypeError{"Heap-1",
                             "heap condition (1): peers of '" + a.id + "' and '" + rec.peer.id +
                                 "' are not mutual",
                             nowhere};
        if (!rec.queue.empty() && !it->second.queue.empty())
            return TypeError{"Heap-1",
                             "heap condition (1): both queues of the pair (" + a.id + ", " +
                                 rec.peer.id + ") are nonempty",
                             nowhere};
    }

    // (2) residual types of peer endpoints are dual modulo subtyping
    for (const auto& [a, rec] : heap.entries) {
        const TypePtr* ta = gamma.lookup(a);
        const TypePtr* tb = gamma.lookup(rec.peer);
        if (!ta || !tb) continue; // non-root endpoints are covered via their roots
        const auto& peer_queue = heap.entries.at(rec.peer).queue;
        if (!peer_queue.empty()) continue;
        std::optional<TypeError> err;
        std::vector<MsgSpec> specs = queue_specs(rec.queue, gamma0, gamma, err, nowhere);
        if (err) return err;
        TailResult tr = tail(*ta, specs, opts.limits);
        if (const auto* fail = std::get_if<TailFailure>(&tr))
            return TypeError{"Heap-2",
                             "heap condition (2): residual of '" + a.id +
                                 "' undefined: " + fail->message,
                             nowhere};
        TypePtr residual = std::get<TypePtr>(tr);
        TypePtr co;
        try {
            co = dual(residual, opts.limits);
        } catch (const TypeAlgebraError& e) {
            return TypeError{"Heap-2",
                             std::string("heap condition (2): dual of residual undefined: ") +
                                 e.what(),
                             nowhere};
        }
        if (!subtype(BoundEnv{}, co, *tb, opts.limits))
            return TypeError{"Heap-2",
                             "heap condition (2): dual residual of '" + a.id +
                                 "' is not a subtype of the type of '" + rec.peer.id + "'",
                             nowhere};
    }

    // (3) exact domain and reachability from the roots
    std::set<Name> dom = heap.domain();
    std::set<Name> env_dom;
    for (const auto& [n, t] : gamma0.entries) env_dom.insert(n);
    for (const auto& [n, t] : gamma.entries) env_dom.insert(n);
    if (dom != env_dom)
        return TypeError{"Heap-3",
                         "heap condition (3): heap domain {" + names_list(dom) +
                             "} differs from environment domain {" + names_list(env_dom) + "}",
                         nowhere};
    std::set<Name> roots;
    for (const auto& [n, t] : gamma.entries) roots.insert(n);
    std::set<Name> reach = reachable(roots, heap);
    if (reach != dom) {
        std::set<Name> unreachable_locs;
        for (const auto& n : dom)
            if (!reach.count(n)) unreachable_locs.insert(n);
        std::set<Name> dangling;
        for (const auto& n : reach)
            if (!dom.count(n)) dangling.insert(n);
        std::string msg = "heap condition (3): ";
        if (!unreachable_locs.empty())
            msg += "allocated but unreachable: {" + names_list(unreachable_locs) + "} ";
        if (!dangling.empty()) msg += "reachable but unallocated: {" + names_list(dangling) + "}";
        return TypeError{"Heap-3", msg, nowhere};
    }

    // (4) regions of distinct roots are disjoint
    std::vector<std::pair<Name, std::set<Name>>> regions;
    for (const auto& r : roots) regions.emplace_back(r, reachable({r}, heap));
    for (std::size_t i = 0; i < regions.size(); ++i)
        for (std::size_t j = i + 1; j < regions.size(); ++j)
            for (const auto& n : regions[i].second)
                if (regions[j].second.count(n))
                    return TypeError{"Heap-4",
                                     "heap condition (4): roots '" + regions[i].first.id +
                                         "' and '" + regions[j].first.id + "' both reach '" +
                                         n.id + "'",
                                     nowhere};
    return std::nullopt;
}

std::optional<TypeError> check_system(const TypeEnv& gamma0, const TypeEnv& gamma,
                                      const System& sys, const CheckOptions& opts) {
    if (auto err = check_heap(gamma0, gamma, sys.heap, opts)) return err;
    ProcessChecker checker(opts);
    return checker.check({}, {}, gamma, sys.process);
}

ProgramCheckResult check_program(const Program& prog, const CheckOptions& opts) {
    ProgramCheckResult result;
    for (const auto& def : prog.proc_defs) {
        TypeEnv gamma;
        bool params_ok = true;
        for (const auto& param : def.params) {
            WfReport wf = well_formed(param.type, {}, {});
            if (!wf.ok) {
                result.ok = false;
                params_ok = false;
                result.diagnostics.push_back(
                    Diagnostic{Diagnostic::Severity::Error, "T001",
                               "parameter '" + param.name.id + "' of " + def.name +
                                   " has an ill-formed type: " + wf.message,
                               prog.file, param.span});
                continue;
            }
            gamma.entries.emplace(param.name, param.type);
        }
        if (!params_ok) continue;
        ProcessChecker checker(opts);
        std::optional<TypeError> err;
        try {
            err = checker.check({}, {}, std::move(gamma), def.body);
        } catch (const BudgetExceeded& e) {
            result.ok = false;
            result.diagnostics.push_back(Diagnostic{Diagnostic::Severity::Error, "I001",
                                                    std::string("internal: ") + e.what(),
                                                    prog.file, def.span});
            continue;
        } catch (const TypeAlgebraError& e) {
            result.ok = false;
            result.diagnostics.push_back(Diagnostic{Diagnostic::Severity::Error, "I002",
                                                    std::string("internal: ") + e.what(),
                                                    prog.file, def.span});
            continue;
        }
        for (Diagnostic w : checker.warnings()) {
            w.file = prog.file;
            result.diagnostics.push_back(std::move(w));
        }
        if (err) {
            result.ok = false;
            result.diagnostics.push_back(Diagnostic{Diagnostic::Severity::Error, "T100",
                                                    def.name + ": " + err->message, prog.file,
                                                    err->span});
        }
    }
    return result;
}

} // namespace polysing
