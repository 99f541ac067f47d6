#include <doctest.h>

#include "polysing/runtime.hpp"
#include "polysing/surface.hpp"

#include <random>

using namespace polysing;

namespace {

Program parse_ok(const std::string& text) {
    ParseResult r = parse_program(text, "<test>");
    if (!r.ok())
        for (const auto& d : r.diagnostics) MESSAGE(d.to_text());
    REQUIRE(r.ok());
    return std::move(*r.program);
}

System system_of(const std::string& text) {
    Program p = parse_ok(text);
    REQUIRE(p.entry.has_value());
    System sys;
    sys.process = *p.entry;
    return sys;
}

Heap pair_heap(const std::string& a, const std::string& b) {
    Heap h;
    h.entries.emplace(location(a), EndpointRecord{location(b), {}});
    h.entries.emplace(location(b), EndpointRecord{location(a), {}});
    return h;
}

} // namespace

TEST_CASE("reachability follows queue contents only") {
    Heap h = pair_heap("a", "b");
    CHECK(reachable({location("a")}, h) == std::set<Name>{location("a")});

    // one queued argument is one edge
    Heap h2 = pair_heap("a", "b");
    h2.entries.merge(pair_heap("c", "d").entries);
    h2.entries[location("a")].queue.push_back(Message{"m", location("c")});
    CHECK(reachable({location("a")}, h2) == std::set<Name>{location("a"), location("c")});

    // the peer reference is not an edge: b stays unreachable from a
    CHECK(reachable({location("b")}, h2) == std::set<Name>{location("b")});
}

TEST_CASE("the leak fragment strands f in its own queue") {
    System sys = system_of("def T = +{ arg<al>(al). end }\n"
                           "proc Main() = open(e : T, f). e!arg<dual(T)>(f). close(e)\n");
    RunResult r = run(sys, 0, 100, true);
    CHECK(r.report.verdict == Verdict::Leak);
    CHECK(r.report.step <= 5);
    REQUIRE(r.report.witness.size() == 1);
    // the witness location sits in its own queue
    const Name& f = r.report.witness[0];
    const auto& rec = r.final_system.heap.entries.at(f);
    REQUIRE(rec.queue.size() == 1);
    CHECK(rec.queue.front().argument == f);
    // and it is unreachable from the roots of the residual process
    std::set<Name> roots;
    for (const auto& n : free_names(r.final_system.process))
        if (n.kind == NameKind::Location) roots.insert(n);
    CHECK(!reachable(roots, r.final_system.heap).count(f));
}

TEST_CASE("enabled redexes") {
    System sys = system_of("proc Main() = open(a : end, b). ( close(a) || close(b) )\n");
    auto rs = enabled(sys);
    REQUIRE(rs.size() == 1);
    CHECK(rs[0].kind == Redex::Kind::Open);

    // a receive on an empty queue is not enabled
    System recv;
    recv.heap = pair_heap("a", "b");
    ReceiveBranch br{"m", std::nullopt, proc_close(location("a")), {}};
    recv.process = proc_receive(location("a"), {br});
    CHECK(enabled(recv).empty());

    // with a matching head it is
    recv.heap.entries[location("a")].queue.push_back(Message{"m", std::nullopt});
    auto rs2 = enabled(recv);
    REQUIRE(rs2.size() == 1);
    CHECK(rs2[0].kind == Redex::Kind::Receive);
    CHECK(*rs2[0].tag == "m");

    // an unmatched head is a communication error, not a redex
    recv.heap.entries[location("a")].queue.front().tag = "other";
    recv.process = proc_parallel(recv.process, proc_close(location("b")));
    CHECK(enabled(recv).empty());
    MonitorReport rep = monitor(recv);
    CHECK(rep.verdict == Verdict::CommunicationError);
    CHECK(rep.witness == std::vector<Name>{location("a")});
}

TEST_CASE("step applies exactly one rule") {
    LocationAllocator alloc;

    SUBCASE("open allocates a mutual pair with empty queues") {
        System sys = system_of("proc Main() = open(a : end, b). ( close(a) || close(b) )\n");
        auto rs = enabled(sys);
        System next = step(sys, rs[0], alloc);
        REQUIRE(next.heap.entries.size() == 2);
        auto it = next.heap.entries.begin();
        const Name& a = it->first;
        const Name& b = it->second.peer;
        CHECK(next.heap.entries.at(b).peer == a);
        CHECK(next.heap.entries.at(a).queue.empty());
        CHECK(next.heap.entries.at(b).queue.empty());
        CHECK(parallel_atoms(next.process).size() == 2);
    }

    SUBCASE("send appends to the peer queue, receive pops the subject's") {
        System sys;
        sys.heap = pair_heap("a", "b");
        sys.heap.entries.merge(pair_heap("c", "d").entries);
        // a!m(c). 0 : c is appended to b's queue, a's untouched
        sys.process = proc_send(location("a"), "m", std::nullopt, location("c"), proc_idle());
        auto rs = enabled(sys);
        REQUIRE(rs.size() == 1);
        System sent = step(sys, rs[0], alloc);
        CHECK(sent.heap.entries.at(location("a")).queue.empty());
        REQUIRE(sent.heap.entries.at(location("b")).queue.size() == 1);
        CHECK(sent.heap.entries.at(location("b")).queue.front().tag == "m");
        CHECK(*sent.heap.entries.at(location("b")).queue.front().argument == location("c"));

        // now receive on b pops the head and substitutes
        ReceiveBranch br{"m", variable("x"), proc_close(variable("x")), {}};
        sent.process = proc_receive(location("b"), {br});
        auto rs2 = enabled(sent);
        REQUIRE(rs2.size() == 1);
        System received = step(sent, rs2[0], alloc);
        CHECK(received.heap.entries.at(location("b")).queue.empty());
        const auto* close = std::get_if<PClose>(&received.process->node);
        REQUIRE(close);
        CHECK(close->subject == location("c"));
    }

    SUBCASE("close never steps") {
        System sys;
        sys.heap = pair_heap("a", "b");
        sys.process = proc_parallel(proc_close(location("a")), proc_close(location("b")));
        CHECK(enabled(sys).empty());
        CHECK(monitor(sys).verdict == Verdict::Terminated);
    }

    SUBCASE("stale redexes are rejected") {
        System sys = system_of("proc Main() = open(a : end, b). ( close(a) || close(b) )\n");
        auto rs = enabled(sys);
        System next = step(sys, rs[0], alloc);
        CHECK_THROWS_AS(step(next, rs[0], alloc), std::logic_error);
    }
}

TEST_CASE("runs are deterministic in the seed") {
    const char* text =
        "def CellT = rec a. +{ set<b>(b). &{ get(b). a }, free. end }\n"
        "proc CELL(c : dual(CellT)) = rec X. ( c?set(x). c!get(x). X + c?free. close(c) )\n"
        "proc USER(d : CellT) = open(g : end, h). ( close(g) || d!set(h). d?get(y). ( close(y) || "
        "d!free. close(d) ) )\n"
        "proc Main() = open(c : dual(CellT), d). ( CELL(c) || USER(d) )\n";
    System sys = system_of(text);
    RunResult r1 = run(sys, 42, 1000, true);
    RunResult r2 = run(sys, 42, 1000, true);
    REQUIRE(r1.trace.size() == r2.trace.size());
    for (std::size_t i = 0; i < r1.trace.size(); ++i) {
        CHECK(r1.trace[i].rule == r2.trace[i].rule);
        CHECK(r1.trace[i].subjects == r2.trace[i].subjects);
        CHECK(r1.trace[i].tag == r2.trace[i].tag);
    }
    CHECK(r1.report.verdict == r2.report.verdict);
    CHECK(r1.report.verdict == Verdict::Terminated);
}

TEST_CASE("step conservation and queue discipline") {
    const char* text =
        "def CellT = rec a. +{ set<b>(b). &{ get(b). a }, free. end }\n"
        "proc CELL(c : dual(CellT)) = rec X. ( c?set(x). c!get(x). X + c?free. close(c) )\n"
        "proc USER(d : CellT) = open(g : end, h). ( close(g) || d!set(h). d?get(y). ( close(y) || "
        "d!free. close(d) ) )\n"
        "proc Main() = open(c : dual(CellT), d). ( CELL(c) || USER(d) )\n";
    System sys = system_of(text);
    LocationAllocator alloc;
    alloc.reserve_all(sys);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 200; ++i) {
        auto rs = enabled(sys);
        if (rs.empty()) break;
        const Redex& pick = rs[rng() % rs.size()];
        System next = step(sys, pick, alloc);
        auto before = sys.heap.domain();
        auto after = next.heap.domain();
        if (pick.kind == Redex::Kind::Open) {
            CHECK(after.size() == before.size() + 2);
        } else {
            CHECK(after == before);
        }
        if (pick.kind == Redex::Kind::Send) {
            int grew = 0;
            for (const auto& [l, rec] : next.heap.entries) {
                auto prev = sys.heap.entries.at(l).queue.size();
                if (rec.queue.size() == prev + 1) {
                    ++grew;
                    // grown at the right end: the old queue is a prefix
                    for (std::size_t k = 0; k < prev; ++k) {
                        CHECK(rec.queue[k].tag == sys.heap.entries.at(l).queue[k].tag);
                    }
                } else {
                    CHECK(rec.queue.size() == prev);
                }
            }
            CHECK(grew == 1);
        }
        if (pick.kind == Redex::Kind::Receive) {
            int shrank = 0;
            for (const auto& [l, rec] : next.heap.entries) {
                auto prev = sys.heap.entries.at(l).queue.size();
                if (rec.queue.size() + 1 == prev) {
                    ++shrank;
                    // shrunk at the left end: the new queue is the old tail
                    for (std::size_t k = 0; k < rec.queue.size(); ++k)
                        CHECK(rec.queue[k].tag == sys.heap.entries.at(l).queue[k + 1].tag);
                } else {
                    CHECK(rec.queue.size() == prev);
                }
            }
            CHECK(shrank == 1);
        }
        sys = std::move(next);
    }
}

TEST_CASE("monitor classifies the terminal shapes") {
    // the empty system is terminated
    System idle;
    idle.process = proc_idle();
    CHECK(monitor(idle).verdict == Verdict::Terminated);

    // a receive against an empty queue at quiescence is a deadlock
    System dead;
    dead.heap = pair_heap("a", "b");
    ReceiveBranch br{"m", std::nullopt, proc_close(location("a")), {}};
    dead.process = proc_parallel(proc_receive(location("a"), {br}),
                                 proc_receive(location("b"), {ReceiveBranch{
                                                  "m", std::nullopt, proc_close(location("b")), {}}}));
    MonitorReport rep = monitor(dead);
    CHECK(rep.verdict == Verdict::Deadlock);
    CHECK(!rep.witness.empty());

    // two atoms holding the same location violate isolation
    System shared;
    shared.heap = pair_heap("a", "b");
    shared.process = proc_parallel(proc_close(location("a")),
                                   proc_parallel(proc_close(location("a")),
                                                 proc_close(location("b"))));
    CHECK(monitor(shared).verdict == Verdict::IsolationViolation);

    // a send on an unallocated endpoint is a fault at quiescence
    System faulty;
    faulty.process =
        proc_send(location("ghost"), "m", std::nullopt, std::nullopt, proc_idle());
    MonitorReport frep = monitor(faulty);
    CHECK(frep.verdict == Verdict::Fault);
}

TEST_CASE("a zero step budget reports exhaustion or termination") {
    System sys = system_of("proc Main() = open(a : end, b). ( close(a) || close(b) )\n");
    RunResult r = run(sys, 0, 0, true);
    CHECK(r.report.verdict == Verdict::BudgetExhausted);
    CHECK(r.trace.empty());

    System done;
    done.process = proc_idle();
    RunResult r2 = run(done, 0, 0, true);
    CHECK(r2.report.verdict == Verdict::Terminated);
}
