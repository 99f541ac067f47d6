#include <doctest.h>

#include "polysing/surface.hpp"
#include "polysing/typealgebra.hpp"

#include <random>

using namespace polysing;

namespace {

const char* kBrokerDefs =
    "base nat\n"
    "base string\n"
    "def SellerT = rec a. +{ offer(nat). &{ response(nat). a }, buy(string). end, leave. end }\n"
    "def BargainT = rec a. +{ offer(nat). &{ response(nat). a } }\n";

Program broker_program() {
    ParseResult r = parse_program(kBrokerDefs, "<broker>");
    REQUIRE(r.ok());
    return std::move(*r.program);
}

TypePtr ty(const Program& prog, const std::string& expr) {
    std::vector<Diagnostic> diags;
    auto t = parse_type_operand(prog, expr, diags);
    for (const auto& d : diags) MESSAGE(d.to_text());
    REQUIRE(t.has_value());
    return *t;
}

TypePtr ty(const std::string& expr) {
    static Program empty = [] {
        ParseResult r = parse_program("", "<empty>");
        return std::move(*r.program);
    }();
    return ty(empty, expr);
}

} // namespace

TEST_CASE("well-formedness judgment") {
    CHECK(check_well_formed(ty("end")));
    CHECK(check_well_formed(ty("Top")));
    // inner variables may not escape into the continuation spine
    TypePtr escaped = ty("+{ m<a<:end>(end). &{ n(end). end } }");
    CHECK(check_well_formed(escaped));
    // build !m<a<:t>(s).a by hand: the parser already refuses to scope it
    std::vector<TypeBranch> brs;
    brs.push_back(TypeBranch{"m", "a", type_end(), type_end(), type_var("a"), {}});
    TypePtr bad = type_choice(ChoiceKind::Internal, std::move(brs));
    WfReport r = well_formed(bad, {}, {});
    CHECK(!r.ok);
    CHECK(r.message.find("'a'") != std::string::npos);
    // the recursive input type of the leak fragment is fine
    CHECK(check_well_formed(ty("rec a. &{ arg(a). end }")));
}

TEST_CASE("type substitution") {
    TypePtr t = ty("&{ m(end). end }");
    // (?m(a).end){end/a}
    std::vector<TypeBranch> brs;
    brs.push_back(TypeBranch{"m", "_q", type_top(), type_var("a"), type_end(), {}});
    TypePtr open_payload = type_choice(ChoiceKind::External, std::move(brs));
    TypePtr closed = subst_type(open_payload, "a", type_end());
    CHECK(type_equal(closed, t));

    // mu binders shadow
    TypePtr mu = type_mu("b", type_choice(ChoiceKind::External,
                                          {TypeBranch{"m", "_q2", type_top(), type_var("a"),
                                                      type_var("b"), {}}}));
    TypePtr mu_closed = subst_type(mu, "a", ty("end"));
    CHECK(free_type_vars(mu_closed).empty());
    // substitution for an absent variable returns the very same node
    TypePtr e = ty("end");
    CHECK(subst_type(e, "a", ty("Top")) == e);
}

TEST_CASE("head normalization") {
    // S = rec a. &{ arg(a). end } exposes an external choice whose payload
    // is the whole recursion
    TypePtr s = ty("rec a. &{ arg(a). end }");
    HeadForm hf = head_normal(BoundEnv{}, s);
    const auto* ch = std::get_if<TChoice>(&hf.head->node);
    REQUIRE(ch);
    CHECK(ch->kind == ChoiceKind::External);
    REQUIRE(ch->branches[0].payload.has_value());
    CHECK(type_equal(*ch->branches[0].payload, s));

    // variable promotion is recorded
    Program prog = broker_program();
    BoundEnv delta;
    delta.push("al", ty(prog, "BargainT"));
    HeadForm promoted = head_normal(delta, type_var("al"));
    CHECK(std::holds_alternative<TChoice>(promoted.head->node));
    REQUIRE(promoted.promotions.size() == 1);
    CHECK(promoted.promotions[0] == "al");

    CHECK(std::holds_alternative<TEnd>(head_normal(BoundEnv{}, ty("end")).head->node));
    CHECK_THROWS_AS(head_normal(BoundEnv{}, type_var("zz")), TypeAlgebraError);
}

TEST_CASE("duality of the introduction examples") {
    CHECK(type_equal(dual(ty("end")), ty("end")));

    // S = mu a. ?arg(a).end equals its unfolding, and dual(!arg(S).end) = ?arg(S).end
    TypePtr S = ty("rec a. &{ arg(a). end }");
    CHECK(type_equal(S, ty("&{ arg(rec a. &{ arg(a). end }). end }")));
    TypePtr T = ty("+{ arg(rec a. &{ arg(a). end }). end }");
    CHECK(type_equal(dual(T), ty("&{ arg(rec a. &{ arg(a). end }). end }")));
    CHECK(type_equal(dual(dual(T)), T));

    // duality keeps tags, bounds and payloads; swaps polarities at depth
    Program prog = broker_program();
    TypePtr seller = ty(prog, "SellerT");
    TypePtr co = dual(seller);
    const auto* ch = std::get_if<TChoice>(&head_normal(BoundEnv{}, co).head->node);
    REQUIRE(ch);
    CHECK(ch->kind == ChoiceKind::External);
    CHECK(type_equal(dual(co), seller));

    CHECK_THROWS_AS(dual(ty("Top")), TypeAlgebraError);
    CHECK_THROWS_AS(dual(ty(prog, "nat")), TypeAlgebraError);
    CHECK_THROWS_AS(dual(type_var("a")), TypeAlgebraError);
}

TEST_CASE("duality commutes with instantiating an inner variable") {
    // T = &{ get(b). CellT-ish } with b inner: co(T{s/b}) = co(T){s/b}
    std::vector<TypeBranch> brs;
    brs.push_back(TypeBranch{"get", "_q", type_top(), type_var("b"),
                             ty("rec a. +{ set(end). &{ get(end). a }, free. end }"), {}});
    TypePtr t = type_choice(ChoiceKind::External, std::move(brs));
    for (const char* inst : {"end", "&{ m(end). end }", "rec a. +{ m(end). a }"}) {
        TypePtr s = ty(inst);
        CHECK(type_equal(dual(subst_type(t, "b", s)), subst_type(dual(t), "b", s)));
    }
}

TEST_CASE("duality is deterministic") {
    Program prog = broker_program();
    for (const char* expr : {"SellerT", "BargainT", "rec a. &{ m(a). a }", "end"}) {
        TypePtr t = ty(prog, expr);
        CHECK(canonical_type_string(dual(t)) == canonical_type_string(dual(t)));
    }
}

TEST_CASE("canonical equality is fold/unfold and alpha insensitive") {
    CHECK(type_equal(ty("rec a. &{ m(end). a }"), ty("&{ m(end). rec a. &{ m(end). a } }")));
    CHECK(!type_equal(ty("end"), ty("Top")));
    CHECK(type_equal(ty("+{ m<a>(a). end }"), ty("+{ m<b>(b). end }")));
    CHECK(!type_equal(ty("+{ m(end). end }"), ty("&{ m(end). end }")));
    // branch order is irrelevant
    CHECK(type_equal(ty("+{ m(end). end, n(end). end }"), ty("+{ n(end). end, m(end). end }")));
}

TEST_CASE("subtyping on the bargaining types") {
    Program prog = broker_program();
    TypePtr seller = ty(prog, "SellerT");
    TypePtr bargain = ty(prog, "BargainT");
    CHECK(subtype(seller, bargain));
    CHECK(!subtype(bargain, seller));
    CHECK(subtype(seller, seller));
    CHECK(subtype(bargain, bargain));
}

TEST_CASE("subtyping structural rules") {
    // external choice: fewer tags on the left
    CHECK(subtype(ty("&{ m(end). end }"), ty("&{ m(end). end, n(end). end }")));
    CHECK(!subtype(ty("&{ m(end). end, n(end). end }"), ty("&{ m(end). end }")));
    // internal choice: more tags on the left
    CHECK(subtype(ty("+{ m(end). end, n(end). end }"), ty("+{ m(end). end }")));
    CHECK(!subtype(ty("+{ m(end). end }"), ty("+{ m(end). end, n(end). end }")));
    // payload variance: external covariant, internal contravariant
    CHECK(subtype(ty("&{ m(+{ x(end). end, y(end). end }). end }"),
                  ty("&{ m(+{ x(end). end }). end }")));
    CHECK(subtype(ty("+{ m(+{ x(end). end }). end }"),
                  ty("+{ m(+{ x(end). end, y(end). end }). end }")));
    // everything is below Top
    CHECK(subtype(ty("end"), ty("Top")));
    CHECK(!subtype(ty("Top"), ty("end")));
    // Kernel rule: bounds must agree
    CHECK(subtype(ty("&{ m<a<:end>(a). end }"), ty("&{ m<b<:end>(b). end }")));
    CHECK(!subtype(ty("&{ m<a<:end>(a). end }"), ty("&{ m<b<:Top>(b). end }")));
    // base types relate only reflexively
    Program prog = broker_program();
    CHECK(subtype(ty(prog, "nat"), ty(prog, "nat")));
    CHECK(!subtype(ty(prog, "nat"), ty(prog, "string")));
    CHECK(subtype(ty(prog, "nat"), ty("Top")));
}

TEST_CASE("subtyping promotes variables through the bound environment") {
    Program prog = broker_program();
    BoundEnv delta;
    delta.push("al", ty(prog, "SellerT"));
    CHECK(subtype(delta, type_var("al"), ty(prog, "BargainT")));
    CHECK(!subtype(delta, ty(prog, "BargainT"), type_var("al")));
    CHECK(subtype(delta, type_var("al"), type_var("al")));
}

TEST_CASE("subtyping is transitive on the corpus spot checks") {
    Program prog = broker_program();
    TypePtr seller = ty(prog, "SellerT");
    TypePtr bargain = ty(prog, "BargainT");
    TypePtr top = ty("Top");
    CHECK(subtype(seller, bargain));
    CHECK(subtype(bargain, top));
    CHECK(subtype(seller, top));
}

TEST_CASE("weights of the worked examples") {
    CHECK(weight(ty("end")) == Weight::finite(0));
    CHECK(weight(ty("Top")).is_infinite());
    CHECK(weight(ty("+{ m(Top). rec a. &{ n(a). a } }")) == Weight::finite(0));
    CHECK(weight(ty("&{ m(end). end }")) == Weight::finite(1));
    CHECK(weight(ty("&{ m(&{ m(end). end }). end }")) == Weight::finite(2));
    CHECK(weight(ty("rec a. &{ m(a). end }")).is_infinite());
    CHECK(weight(ty("rec a. &{ m(end). a }")) == Weight::finite(1));
    // an unreachable Top does not exist: any reachable Top is infinite
    CHECK(weight(ty("&{ m(Top). end }")).is_infinite());
    // zero-arity receives add no pointer chain
    CHECK(weight(ty("&{ m. end }")) == Weight::finite(0));
    CHECK(weight(ty("rec a. &{ m. a }")) == Weight::finite(0));
    CHECK(weight(ty("&{ m. end, n(end). end }")) == Weight::finite(1));
}

TEST_CASE("weight of a variable is the weight of its bound") {
    Program prog = broker_program();
    BoundEnv delta;
    delta.push("al", ty(prog, "BargainT"));
    CHECK(weight(delta, type_var("al")) == Weight::finite(0));
    BoundEnv top;
    top.push("al", ty("Top"));
    CHECK(weight(top, type_var("al")).is_infinite());
    // ?m<a<:t>(a).end weighs 1 + |t| when |t| is finite
    BoundEnv empty;
    CHECK(weight(empty, ty("&{ m<a<:end>(a). end }")) == Weight::finite(1));
    CHECK(weight(empty, ty("&{ m<a<:&{ x(end). end }>(a). end }")) == Weight::finite(2));
}

TEST_CASE("weight of the cell examples") {
    TypePtr cell = ty("rec a. +{ set<b>(b). &{ get(b). a }, free. end }");
    CHECK(weight(cell) == Weight::finite(0));
    // &{ get(t). CellT } = |t| + 1 for finite |t|
    for (const char* t : {"end", "&{ m(end). end }", "+{ m(Top). end }"}) {
        TypePtr payload = ty(t);
        std::vector<TypeBranch> brs;
        brs.push_back(TypeBranch{"get", "_q", type_top(), payload, cell, {}});
        TypePtr get_cell = type_choice(ChoiceKind::External, std::move(brs));
        CHECK(weight(get_cell) == weight(payload).plus(1));
    }
}

TEST_CASE("tail computes residual endpoint types") {
    // tail(T, eps) = T
    TypePtr cell = ty("rec a. +{ set<b>(b). &{ get(b). a }, free. end }");
    TailResult r0 = tail(cell, {});
    CHECK(type_equal(std::get<TypePtr>(r0), cell));

    // the worked residual: tail(?m<a<:t>(a).?m(a).end, m(s)) with s <= t
    TypePtr t = ty("&{ x(end). end, y(end). end }");
    TypePtr s = ty("&{ x(end). end }");
    TypePtr subject = ty("&{ m<a<:&{ x(end). end, y(end). end }>(a). &{ m(a). end } }");
    TailResult r1 = tail(subject, {MsgSpec{"m", s}});
    REQUIRE(std::holds_alternative<TypePtr>(r1));
    TypePtr residual = std::get<TypePtr>(r1);
    const auto* ch = std::get_if<TChoice>(&residual->node);
    REQUIRE(ch);
    REQUIRE(ch->branches.size() == 1);
    TypePtr instantiated = *ch->branches[0].payload;
    CHECK(subtype(s, instantiated));
    CHECK(subtype(instantiated, t));

    // failure kinds
    TailResult r2 = tail(ty("&{ m(end). end }"), {MsgSpec{"n", ty("end")}});
    CHECK(std::get<TailFailure>(r2).kind == TailFailure::Kind::TagNotOffered);
    TailResult r3 = tail(ty("+{ m(end). end }"), {MsgSpec{"m", ty("end")}});
    CHECK(std::get<TailFailure>(r3).kind == TailFailure::Kind::NotExternalChoice);
    TailResult r4 = tail(ty("&{ m(end). end }"), {MsgSpec{"m", std::nullopt}});
    CHECK(std::get<TailFailure>(r4).kind == TailFailure::Kind::ArityMismatch);
    TailResult r5 = tail(ty("&{ m(end). end }"), {MsgSpec{"m", ty("Top")}});
    CHECK(std::get<TailFailure>(r5).kind == TailFailure::Kind::NoInstantiation);
}

TEST_CASE("budget exhaustion is reported, not mistaken for false") {
    AlgebraLimits tiny{3};
    TypePtr a = ty("rec a. &{ m(end). a }");
    TypePtr b = ty("rec b. &{ m(end). &{ m(end). b } }");
    CHECK_THROWS_AS((void)subtype(BoundEnv{}, a, b, tiny), BudgetExceeded);
    CHECK_THROWS_AS((void)weight(BoundEnv{}, a, tiny), BudgetExceeded);
}

namespace {

struct WfTypeGen {
    std::mt19937 rng;
    int next = 0;

    explicit WfTypeGen(unsigned seed) : rng(seed) {}

    TypePtr gen(int depth, std::vector<std::string> mu_scope) {
        unsigned pick = rng() % (depth <= 0 ? 1u : 5u);
        if (pick == 0) {
            if (!mu_scope.empty() && rng() % 3 == 0)
                return type_var(mu_scope[rng() % mu_scope.size()]);
            return type_end();
        }
        if (pick == 1) {
            std::string v = "r" + std::to_string(next++);
            mu_scope.push_back(v);
            std::vector<TypeBranch> brs;
            brs.push_back(TypeBranch{"k", "q" + std::to_string(next++), type_top(), std::nullopt,
                                     gen(depth - 1, mu_scope), {}});
            return type_mu(v, type_choice(rng() % 2 ? ChoiceKind::Internal : ChoiceKind::External,
                                          std::move(brs)));
        }
        std::vector<TypeBranch> brs;
        int n = 1 + rng() % 2;
        for (int i = 0; i < n; ++i) {
            std::string binder = "q" + std::to_string(next++);
            std::optional<TypePtr> payload;
            if (rng() % 2) payload = rng() % 2 ? type_var(binder) : gen(depth - 1, {});
            Tag tag = (payload ? "t" : "u") + std::to_string(i);
            brs.push_back(
                TypeBranch{tag, binder, gen(depth - 1, {}), payload, gen(depth - 1, mu_scope), {}});
        }
        return type_choice(rng() % 2 ? ChoiceKind::Internal : ChoiceKind::External,
                           std::move(brs));
    }
};

} // namespace

TEST_CASE("subtyping is reflexive and duality involutive on random types") {
    for (unsigned seed = 0; seed < 120; ++seed) {
        WfTypeGen g(seed);
        TypePtr t = g.gen(3, {});
        if (!check_well_formed(t)) continue;
        CHECK(subtype(t, t));
        CHECK(type_equal(dual(dual(t)), t));
        CHECK(type_equal(t, t));
        // canonical equality is insensitive to one unfolding
        if (std::holds_alternative<TMu>(t->node)) {
            const auto& mu = std::get<TMu>(t->node);
            CHECK(type_equal(t, subst_type(mu.body, mu.var, t)));
        }
    }
}

TEST_CASE("duality is contravariant on random subtype pairs") {
    for (unsigned seed = 0; seed < 80; ++seed) {
        WfTypeGen g(seed);
        TypePtr t = g.gen(3, {});
        TypePtr s = g.gen(3, {});
        if (!check_well_formed(t) || !check_well_formed(s)) continue;
        CHECK(subtype(dual(s), dual(t)) == subtype(t, s));
        CHECK(subtype(dual(t), dual(t)));
    }
}
