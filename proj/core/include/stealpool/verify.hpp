#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace stealpool {
class ThreadPool;
}

namespace stealpool::verify {

// A random DAG whose edges all point from a lower to a higher index, which
// makes it acyclic by construction.
struct DagSpec {
    std::size_t node_count = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::uint64_t seed = 0;
};

// Each forward pair (i, j), i < j, becomes an edge with probability
// `edge_probability`. Deterministic for a given seed on every platform.
DagSpec random_dag(std::size_t node_count, double edge_probability, std::uint64_t seed);

// Completion log shared by concurrently running tasks. Capacity is fixed up
// front; record() is safe from any thread.
class OrderLog {
public:
    struct Entry {
        std::size_t task = 0;
        std::uint64_t tick = 0;
    };

    explicit OrderLog(std::size_t capacity = 0) : entries_(capacity) {}

    OrderLog(const OrderLog& other);
    OrderLog& operator=(const OrderLog& other);

    void record(std::size_t task) noexcept;
    void clear() noexcept;

    std::size_t size() const noexcept { return std::min(count_.load(std::memory_order_acquire), entries_.size()); }
    std::size_t capacity() const noexcept { return entries_.size(); }
    // Only meaningful once all recording threads have been synchronized with.
    std::vector<Entry> entries() const;

private:
    std::vector<Entry> entries_;
    std::atomic<std::size_t> count_{0};
    std::atomic<std::uint64_t> clock_{0};
};

class IncompleteLogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TopoCheck {
    // Set when some edge's successor completed no later than its predecessor.
    std::optional<std::pair<std::size_t, std::size_t>> violation;

    bool ok() const noexcept { return !violation.has_value(); }
};

// Throws IncompleteLogError unless the log holds exactly one entry per node.
TopoCheck check_topological(const OrderLog& log, const DagSpec& spec);

// Result of running the accumulator workload over a DAG: each node folds
// its predecessors' values into its own, so any ordering bug changes state.
struct DagExecution {
    OrderLog log;
    std::vector<std::uint64_t> state;
};

// Single-threaded Kahn execution; the reference for pool runs.
DagExecution sequential_execute(const DagSpec& spec);

// Same workload as a TaskGraph on `pool`. Blocks until done.
DagExecution pool_execute(ThreadPool& pool, const DagSpec& spec);

struct DequeStressConfig {
    std::size_t thieves = 1;
    std::size_t items = 1000;
    std::uint64_t seed = 1;
    // Chance that the owner pops after each push. 0 gives a push-only owner.
    double pop_probability = 0.5;
    // Small so the stress run also exercises buffer growth.
    std::size_t initial_capacity = 2;
};

struct DequeStressReport {
    std::size_t items = 0;
    std::vector<std::uint32_t> owner_log;
    std::vector<std::vector<std::uint32_t>> thief_logs;
    std::size_t missing = 0;
    std::size_t duplicates = 0;
    // Thief logs that are not in push order.
    std::size_t order_violations = 0;
    // Observations of the top index going backwards.
    std::size_t top_regressions = 0;
    std::size_t retries = 0;
    std::size_t final_capacity = 0;

    bool conserved() const noexcept { return missing == 0 && duplicates == 0; }
    bool ok() const noexcept { return conserved() && order_violations == 0 && top_regressions == 0; }
    std::size_t stolen() const noexcept;
};

// One owner pushing (and optionally popping) against `thieves` stealers
// until every item is consumed.
DequeStressReport deque_stress(const DequeStressConfig& config);

}  // namespace stealpool::verify
