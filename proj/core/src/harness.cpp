#include "stealpool/harness.hpp"

#include <time.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <fstream>
#include <ostream>

#include "stealpool/thread_pool.hpp"

namespace stealpool::bench {

std::string_view to_string(Workload w) noexcept {
    switch (w) {
        case Workload::fib: return "fib";
        case Workload::expr: return "expr";
        case Workload::fanout: return "fanout";
    }
    return "?";
}

Workload parse_workload(std::string_view name) {
    if (name == "fib") return Workload::fib;
    if (name == "expr") return Workload::expr;
    if (name == "fanout") return Workload::fanout;
    throw UsageError("unknown workload '" + std::string(name) + "'");
}

std::uint64_t default_param(Workload w) noexcept {
    switch (w) {
        case Workload::fib: return 25;
        case Workload::expr: return 1;
        case Workload::fanout: return 256;
    }
    return 0;
}

std::uint64_t run_workload(ThreadPool& pool, Workload w, std::uint64_t param,
                           std::optional<std::uint64_t> param2, bool allow_large) {
    switch (w) {
        case Workload::fib:
            if (param > UINT32_MAX) throw UsageError("fib parameter out of range");
            return fib_workload(pool, static_cast<unsigned>(param), allow_large);
        case Workload::expr: {
            const auto a = static_cast<std::int64_t>(param);
            return std::bit_cast<std::uint64_t>(expr_workload(pool, a, a + 1, a + 2, a + 3));
        }
        case Workload::fanout:
            return fanout_workload(pool, param, param2.value_or(default_fanout_work));
    }
    throw UsageError("unknown workload");
}

std::uint64_t reference_checksum(Workload w, std::uint64_t param,
                                 std::optional<std::uint64_t> param2) {
    switch (w) {
        case Workload::fib: return fib_reference(static_cast<unsigned>(param));
        case Workload::expr: {
            const auto a = static_cast<std::int64_t>(param);
            return std::bit_cast<std::uint64_t>(expr_reference(a, a + 1, a + 2, a + 3));
        }
        case Workload::fanout: return fanout_reference(param, param2.value_or(default_fanout_work));
    }
    throw UsageError("unknown workload");
}

std::uint64_t process_cpu_ns() {
    timespec ts{};
    clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
    return static_cast<std::uint64_t>(ts.tv_sec) * 1'000'000'000ull +
           static_cast<std::uint64_t>(ts.tv_nsec);
}

std::vector<BenchRecord> run_benchmark(const BenchConfig& config) {
    if (config.threads.empty()) throw UsageError("thread list is empty");
    if (std::find(config.threads.begin(), config.threads.end(), 0u) != config.threads.end()) {
        throw UsageError("thread counts must be positive");
    }
    if (config.params.empty()) throw UsageError("parameter list is empty");
    if (config.iterations == 0) throw UsageError("iterations must be positive");
    if (config.workload == Workload::fib && !config.allow_large) {
        for (auto p : config.params) {
            if (p > max_fib_param) {
                throw UsageError("fib parameter " + std::to_string(p) + " exceeds " +
                                 std::to_string(max_fib_param));
            }
        }
    }

    std::ofstream out;
    if (!config.out_path.empty()) {
        out.open(config.out_path, std::ios::out | std::ios::trunc);
        if (!out) throw UsageError("cannot open '" + config.out_path + "' for writing");
    }

    std::vector<std::uint64_t> expected;
    expected.reserve(config.params.size());
    for (auto p : config.params) expected.push_back(reference_checksum(config.workload, p, config.param2));

    std::vector<BenchRecord> records;
    records.reserve(config.threads.size() * config.params.size() * config.iterations);
    for (std::size_t threads : config.threads) {
        ThreadPool pool(threads);
        for (std::size_t pi = 0; pi < config.params.size(); ++pi) {
            const std::uint64_t param = config.params[pi];
            auto check = [&](std::uint64_t got) {
                if (got != expected[pi]) {
                    throw ChecksumMismatch(std::string(to_string(config.workload)) + " param " +
                                           std::to_string(param) + " on " + std::to_string(threads) +
                                           " threads returned " + std::to_string(got) +
                                           ", expected " + std::to_string(expected[pi]));
                }
            };
            for (std::size_t w = 0; w < config.warmup; ++w) {
                check(run_workload(pool, config.workload, param, config.param2, config.allow_large));
            }
            for (std::size_t it = 0; it < config.iterations; ++it) {
                const auto cpu0 = process_cpu_ns();
                const auto wall0 = std::chrono::steady_clock::now();
                const auto sum = run_workload(pool, config.workload, param, config.param2, config.allow_large);
                const auto wall1 = std::chrono::steady_clock::now();
                const auto cpu1 = process_cpu_ns();
                check(sum);
                const auto wall = std::chrono::duration_cast<std::chrono::nanoseconds>(wall1 - wall0).count();
                records.push_back(BenchRecord{config.workload, param, threads, it,
                                              std::max<std::uint64_t>(1, static_cast<std::uint64_t>(wall)),
                                              cpu1 >= cpu0 ? cpu1 - cpu0 : 0, sum});
            }
        }
    }

    if (out.is_open()) {
        write_csv(out, records);
        out.flush();
        if (!out) throw UsageError("failed writing '" + config.out_path + "'");
    }
    return records;
}

void write_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
    out << csv_header << '\n';
    for (const auto& r : records) {
        out << to_string(r.workload) << ',' << r.param << ',' << r.threads << ',' << r.iteration << ','
            << r.wall_ns << ',' << r.cpu_ns << ',';
        if (r.workload == Workload::expr) {
            out << std::bit_cast<std::int64_t>(r.checksum);
        } else {
            out << r.checksum;
        }
        out << '\n';
    }
}

double median_wall_ns(const std::vector<BenchRecord>& records, std::size_t threads) {
    std::vector<std::uint64_t> walls;
    for (const auto& r : records) {
        if (r.threads == threads) walls.push_back(r.wall_ns);
    }
    if (walls.empty()) return 0.0;
    std::sort(walls.begin(), walls.end());
    const std::size_t mid = walls.size() / 2;
    if (walls.size() % 2 == 1) return static_cast<double>(walls[mid]);
    return (static_cast<double>(walls[mid - 1]) + static_cast<double>(walls[mid])) / 2.0;
}

std::vector<std::uint64_t> parse_list(std::string_view text) {
    std::vector<std::uint64_t> values;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const auto item = text.substr(0, comma);
        std::uint64_t v = 0;
        const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc{} || end != item.data() + item.size()) {
            throw UsageError("malformed list element '" + std::string(item) + "'");
        }
        values.push_back(v);
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
        if (text.empty()) throw UsageError("trailing comma in list");
    }
    if (values.empty()) throw UsageError("empty list");
    return values;
}

}  // namespace stealpool::bench
