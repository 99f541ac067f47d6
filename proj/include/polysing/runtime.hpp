#ifndef POLYSING_RUNTIME_HPP
#define POLYSING_RUNTIME_HPP

#include "polysing/syntax.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace polysing {

/// One enabled reduction, valid only for the system state it was
/// enumerated from.
struct Redex {
    enum class Kind { Open, Send, Receive, Choice, Rec };
    Kind kind;
    int atom = 0;              // index into parallel_atoms of the process
    std::optional<Tag> tag;    // matched tag for Receive
    int side = 0;              // 0 = left, 1 = right for Choice
    std::uint64_t generation = 0;
};

std::string rule_name(Redex::Kind k);

enum class Verdict {
    Ok,
    Leak,
    IsolationViolation,
    Fault,
    CommunicationError,
    Deadlock,
    Terminated,
    BudgetExhausted
};

std::string verdict_name(Verdict v);
bool verdict_is_violation(Verdict v);

struct MonitorReport {
    Verdict verdict = Verdict::Ok;
    std::vector<Name> witness;
    std::uint64_t step = 0;
};

struct TraceEvent {
    std::uint64_t step = 0;
    std::string rule;
    std::vector<Name> subjects;
    std::optional<Tag> tag;
    std::size_t heap_before = 0;
    std::size_t heap_after = 0;
    Verdict verdict = Verdict::Ok;
};

/// Queue-content reachability: c is one step reachable from a iff some
/// message in a's queue carries c. Peer references are not edges.
std::set<Name> reachable(const std::set<Name>& roots, const Heap& heap);

/// Monotonic fresh-location source; never reuses an identifier.
class LocationAllocator {
public:
    void reserve(const std::string& id) { taken_.insert(id); }
    void reserve_all(const System& sys);
    Name fresh();

private:
    std::set<std::string> taken_;
    std::uint64_t next_ = 1;
};

std::vector<Redex> enabled(const System& sys);

/// Applies one reduction. Throws std::logic_error on a stale or invalid
/// redex (enabled() never produces one).
System step(const System& sys, const Redex& r, LocationAllocator& alloc);

/// Definition-of-well-behavedness check on the current state: fault and
/// leak detection, pairwise isolation of parallel atoms, and, only when
/// no reduction is enabled, classification of the stuck state.
MonitorReport monitor(const System& sys);

struct RunResult {
    std::vector<TraceEvent> trace;
    System final_system;
    MonitorReport report;
};

/// Deterministic seeded scheduler: picks uniformly among enabled redexes,
/// stopping at quiescence, at a monitor violation (when monitoring), or
/// when the step budget runs out.
RunResult run(const System& initial, std::uint64_t seed, std::uint64_t max_steps,
              bool monitor_every,
              const std::function<void(const System&)>& observer = nullptr);

} // namespace polysing

#endif
