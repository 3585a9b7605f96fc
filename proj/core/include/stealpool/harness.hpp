#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stealpool/workloads.hpp"

namespace stealpool::bench {

enum class Workload { fib, expr, fanout };

std::string_view to_string(Workload w) noexcept;
// Throws UsageError for unknown names.
Workload parse_workload(std::string_view name);

struct BenchRecord {
    Workload workload = Workload::fib;
    std::uint64_t param = 0;
    std::size_t threads = 0;
    std::size_t iteration = 0;
    std::uint64_t wall_ns = 0;
    std::uint64_t cpu_ns = 0;
    // Workload result, bit-cast to unsigned for the expression workload.
    std::uint64_t checksum = 0;
};

struct BenchConfig {
    Workload workload = Workload::fib;
    // fib: n. expr: a, with b = a + 1, c = a + 2, d = a + 3. fanout: task count.
    std::vector<std::uint64_t> params;
    // fanout: mixing rounds per task. Ignored by the other workloads.
    std::optional<std::uint64_t> param2;
    std::vector<std::size_t> threads;
    std::size_t iterations = 5;
    std::size_t warmup = 1;
    // Empty means no CSV file.
    std::string out_path;
    bool allow_large = false;
};

inline constexpr std::uint64_t default_fanout_work = 200000;

class ChecksumMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::uint64_t default_param(Workload w) noexcept;

// Runs warmup then timed iterations for every (threads, param) pair, one pool
// per thread count. Verifies each checksum against the sequential reference
// and throws ChecksumMismatch on the first difference. Writes the CSV to
// config.out_path when set; an unwritable path is a UsageError raised before
// anything runs.
std::vector<BenchRecord> run_benchmark(const BenchConfig& config);

// Executes one iteration and returns its checksum.
std::uint64_t run_workload(ThreadPool& pool, Workload w, std::uint64_t param,
                           std::optional<std::uint64_t> param2, bool allow_large = false);
std::uint64_t reference_checksum(Workload w, std::uint64_t param,
                                 std::optional<std::uint64_t> param2);

inline constexpr std::string_view csv_header = "workload,param,threads,iteration,wall_ns,cpu_ns,checksum";

void write_csv(std::ostream& out, const std::vector<BenchRecord>& records);

// Nanoseconds of CPU consumed by the whole process so far.
std::uint64_t process_cpu_ns();

// Median wall time of the records matching `threads`; 0 if none match.
double median_wall_ns(const std::vector<BenchRecord>& records, std::size_t threads);

// Parses "1,2,4". Throws UsageError on empty or malformed lists.
std::vector<std::uint64_t> parse_list(std::string_view text);

}  // namespace stealpool::bench
