#include <doctest.h>

#include "polysing/syntax.hpp"

#include <random>

using namespace polysing;

namespace {

Name loc(const std::string& s) { return location(s); }
Name var(const std::string& s) { return variable(s); }

ProcPtr send1(const Name& subj, const Tag& tag, const Name& arg, ProcPtr cont) {
    return proc_send(subj, tag, std::nullopt, arg, std::move(cont));
}

} // namespace

TEST_CASE("free_names on the basic shapes") {
    CHECK(free_names(proc_idle()).empty());

    auto close_u = proc_close(var("u"));
    CHECK(free_names(close_u) == std::set<Name>{var("u")});

    // open(a,b). a!m(c).0 : the binders disappear, c remains
    auto body = send1(loc("a"), "m", var("c"), proc_idle());
    auto opened = proc_open(loc("a"), loc("b"), nullptr, body);
    CHECK(free_names(opened) == std::set<Name>{var("c")});
}

TEST_CASE("free_names treats receive binders per branch") {
    // u?m(x). x!n(y).0  frees {u, y}
    auto branch_body = send1(var("x"), "n", var("y"), proc_idle());
    ReceiveBranch br{"m", var("x"), branch_body, {}};
    auto recv = proc_receive(var("u"), {br});
    CHECK(free_names(recv) == std::set<Name>{var("u"), var("y")});
}

TEST_CASE("substitute_name replaces exactly the free occurrences") {
    // (x!m(y).0){a/x} = a!m(y).0
    auto p = send1(var("x"), "m", var("y"), proc_idle());
    auto q = substitute_name(p, loc("a"), var("x"));
    const auto& send = std::get<PSend>(q->node);
    CHECK(send.subject == loc("a"));
    CHECK(*send.argument == var("y"));

    // (x!m(y).0){a/z} = unchanged
    CHECK(substitute_name(p, loc("a"), var("z")) == p);

    // (x?m(y). y!m(x).0){a/y}: y is bound, nothing changes
    auto body = send1(var("y"), "m", var("x"), proc_idle());
    ReceiveBranch br{"m", var("y"), body, {}};
    auto recv = proc_receive(var("x"), {br});
    auto substituted = substitute_name(recv, loc("a"), var("y"));
    CHECK(alpha_equal(substituted, recv));
}

TEST_CASE("unfold_rec") {
    // rec X. c?free().close(c), X unused: unfolding drops the binder
    ReceiveBranch fr{"free", std::nullopt, proc_close(var("c")), {}};
    auto body = proc_receive(var("c"), {fr});
    auto rec = proc_rec("X", body);
    CHECK(alpha_equal(unfold_rec(rec), body));

    // the cell: one-step unfolding replaces X by the whole recursion
    auto cell_body = [&](ProcPtr loop) {
        ReceiveBranch set{"set", var("x"),
                          send1(var("c"), "get", var("x"), std::move(loop)), {}};
        ReceiveBranch freeb{"free", std::nullopt, proc_close(var("c")), {}};
        return proc_receive(var("c"), {set, freeb});
    };
    auto cell = proc_rec("X", cell_body(proc_var("X")));
    auto unfolded = unfold_rec(cell);
    CHECK(alpha_equal(unfolded, cell_body(cell)));

    // rec X. X unfolds to itself
    auto diverge = proc_rec("X", proc_var("X"));
    CHECK(alpha_equal(unfold_rec(diverge), diverge));

    CHECK_THROWS_AS(unfold_rec(proc_idle()), std::logic_error);
}

TEST_CASE("parallel_atoms flattens and drops idle") {
    auto p = proc_close(var("p"));
    auto q = proc_close(var("q"));
    auto r = proc_close(var("r"));

    auto t1 = proc_parallel(proc_parallel(p, proc_idle()), q);
    auto atoms = parallel_atoms(t1);
    REQUIRE(atoms.size() == 2);
    CHECK(alpha_equal(atoms[0], p));
    CHECK(alpha_equal(atoms[1], q));

    CHECK(parallel_atoms(proc_idle()).empty());

    auto t2 = proc_parallel(p, proc_parallel(q, r));
    auto atoms2 = parallel_atoms(t2);
    REQUIRE(atoms2.size() == 3);
    CHECK(alpha_equal(atoms2[2], r));
}

namespace {

// Random process generator for the property checks. Binders draw from a
// dedicated pool so the Barendregt convention holds by construction and
// never clashes with the free-name pool.
struct Gen {
    std::mt19937 rng;
    int next_binder = 0;

    explicit Gen(unsigned seed) : rng(seed) {}

    Name fresh_var() { return variable("b" + std::to_string(next_binder++)); }

    Name free_name(const std::vector<Name>& pool) { return pool[rng() % pool.size()]; }

    ProcPtr gen(int depth, std::vector<Name> scope) {
        auto pick = rng() % (depth <= 0 ? 3u : 8u);
        switch (pick) {
        case 0: return proc_idle();
        case 1: return proc_close(free_name(scope));
        case 2: return send1(free_name(scope), "m", free_name(scope), proc_idle());
        case 3: {
            auto x = fresh_var();
            auto inner = scope;
            inner.push_back(x);
            ReceiveBranch br{"m", x, gen(depth - 1, inner), {}};
            ReceiveBranch br2{"n", std::nullopt, gen(depth - 1, scope), {}};
            return proc_receive(free_name(scope), {br, br2});
        }
        case 4: return proc_parallel(gen(depth - 1, scope), gen(depth - 1, scope));
        case 5: return proc_choice(gen(depth - 1, scope), gen(depth - 1, scope));
        case 6: {
            auto a = fresh_var(), b = fresh_var();
            auto inner = scope;
            inner.push_back(a);
            inner.push_back(b);
            return proc_open(a, b, nullptr, gen(depth - 1, inner));
        }
        default: return proc_rec("X" + std::to_string(next_binder++), gen(depth - 1, scope));
        }
    }
};

} // namespace

TEST_CASE("substitution commutes with free names") {
    std::vector<Name> pool{var("x"), var("y"), var("z")};
    for (unsigned seed = 0; seed < 200; ++seed) {
        Gen g(seed);
        ProcPtr p = g.gen(4, pool);
        Name target = var("x");
        Name value = loc("a");
        auto fn = free_names(p);
        auto after = free_names(substitute_name(p, value, target));
        std::set<Name> expected = fn;
        if (fn.count(target)) {
            expected.erase(target);
            expected.insert(value);
        }
        CHECK(after == expected);
    }
}

TEST_CASE("unfold_rec preserves free names") {
    std::vector<Name> pool{var("x"), var("y")};
    for (unsigned seed = 0; seed < 200; ++seed) {
        Gen g(seed);
        ProcPtr body = g.gen(3, pool);
        auto rec = proc_rec("X", body);
        CHECK(free_names(unfold_rec(rec)) == free_names(rec));
    }
}

TEST_CASE("parallel_atoms is idempotent and congruence-invariant") {
    std::vector<Name> pool{var("x"), var("y")};
    for (unsigned seed = 0; seed < 200; ++seed) {
        Gen g(seed);
        ProcPtr p = g.gen(4, pool);
        auto atoms = parallel_atoms(p);

        auto recomposed = compose_atoms(atoms);
        auto again = parallel_atoms(recomposed);
        REQUIRE(atoms.size() == again.size());
        for (std::size_t i = 0; i < atoms.size(); ++i)
            CHECK(alpha_equal(atoms[i], again[i]));

        // A commuted, unit-padded recomposition keeps the multiset.
        ProcPtr shuffled = proc_idle();
        for (const auto& atom : atoms) shuffled = proc_parallel(atom, shuffled);
        auto back = parallel_atoms(shuffled);
        REQUIRE(back.size() == atoms.size());
        std::multiset<std::string> lhs, rhs;
        for (const auto& a : atoms) lhs.insert(canonical_process_string(a));
        for (const auto& a : back) rhs.insert(canonical_process_string(a));
        CHECK(lhs == rhs);
    }
}

TEST_CASE("alpha equality renames binders consistently") {
    auto mk = [](const std::string& bound) {
        ReceiveBranch br{"m", variable(bound),
                         send1(variable(bound), "n", var("y"), proc_idle()), {}};
        return proc_receive(var("u"), {br});
    };
    CHECK(alpha_equal(mk("x"), mk("w")));
    // ...but a free name is not renameable
    CHECK(!alpha_equal(proc_close(var("x")), proc_close(var("w"))));
}
