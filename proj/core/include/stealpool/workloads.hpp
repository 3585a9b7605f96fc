#pragma once

#include <cstdint>
#include <stdexcept>

namespace stealpool {
class ThreadPool;
}

namespace stealpool::bench {

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Largest Fibonacci argument accepted without `allow_large`. fib(n) spawns
// about 3 * fib(n + 1) tasks, so this keeps a run within a few seconds.
inline constexpr unsigned max_fib_param = 35;

// Recursive Fibonacci without memoization: every internal node spawns two
// child tasks plus a join that depends on them. fib(0) = 0, fib(1) = 1.
std::uint64_t fib_workload(ThreadPool& pool, unsigned n, bool allow_large = false);

// (a + b) * (c + d) as a seven-task graph: four loads, two sums, one product.
std::int64_t expr_workload(ThreadPool& pool, std::int64_t a, std::int64_t b, std::int64_t c,
                           std::int64_t d);

// `tasks` independent compute-bound tasks of `work` mixing rounds each.
// Returns the wrapping sum of the per-task results.
std::uint64_t fanout_workload(ThreadPool& pool, std::uint64_t tasks, std::uint64_t work);

// Per-task kernel of the fanout workload.
std::uint64_t fanout_kernel(std::uint64_t task, std::uint64_t work) noexcept;

// Sequential reference values used for checksum verification.
std::uint64_t fib_reference(unsigned n);
std::int64_t expr_reference(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);
std::uint64_t fanout_reference(std::uint64_t tasks, std::uint64_t work);

}  // namespace stealpool::bench
