#include "stealpool/verify.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <string>
#include <thread>

#include "stealpool/deque.hpp"
#include "stealpool/task_graph.hpp"
#include "stealpool/thread_pool.hpp"

namespace stealpool::verify {

namespace {

// Uniform double in [0, 1) from the top 53 bits; unlike the standard
// distributions its output does not depend on the library implementation.
double unit_interval(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t mix(std::uint64_t x) noexcept {
    // splitmix64 finalizer
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::vector<std::vector<std::size_t>> predecessor_lists(const DagSpec& spec) {
    std::vector<std::vector<std::size_t>> preds(spec.node_count);
    for (auto [p, s] : spec.edges) preds[s].push_back(p);
    return preds;
}

std::uint64_t node_value(std::size_t node, const std::vector<std::size_t>& preds,
                         const std::vector<std::uint64_t>& state) {
    std::uint64_t v = mix(node);
    for (std::size_t p : preds) v = mix(v ^ state[p]);
    return v;
}

}  // namespace

DagSpec random_dag(std::size_t node_count, double edge_probability, std::uint64_t seed) {
    if (node_count == 0) throw std::invalid_argument("random_dag: node_count must be at least 1");
    if (!(edge_probability >= 0.0 && edge_probability <= 1.0)) {
        throw std::invalid_argument("random_dag: edge_probability must be in [0, 1]");
    }
    DagSpec spec{node_count, {}, seed};
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < node_count; ++i) {
        for (std::size_t j = i + 1; j < node_count; ++j) {
            if (unit_interval(rng) < edge_probability) spec.edges.emplace_back(i, j);
        }
    }
    return spec;
}

OrderLog::OrderLog(const OrderLog& other)
    : entries_(other.entries()),
      count_(other.size()),
      clock_(other.clock_.load(std::memory_order_acquire)) {
    entries_.resize(other.capacity());
}

OrderLog& OrderLog::operator=(const OrderLog& other) {
    if (this != &other) {
        entries_ = other.entries();
        count_.store(entries_.size(), std::memory_order_release);
        entries_.resize(other.capacity());
        clock_.store(other.clock_.load(std::memory_order_acquire), std::memory_order_release);
    }
    return *this;
}

void OrderLog::record(std::size_t task) noexcept {
    const std::uint64_t tick = clock_.fetch_add(1, std::memory_order_acq_rel);
    const std::size_t slot = count_.fetch_add(1, std::memory_order_acq_rel);
    if (slot < entries_.size()) entries_[slot] = Entry{task, tick};
}

void OrderLog::clear() noexcept {
    count_.store(0, std::memory_order_release);
    clock_.store(0, std::memory_order_release);
}

std::vector<OrderLog::Entry> OrderLog::entries() const {
    return {entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(size())};
}

TopoCheck check_topological(const OrderLog& log, const DagSpec& spec) {
    constexpr auto unset = static_cast<std::uint64_t>(-1);
    std::vector<std::uint64_t> tick(spec.node_count, unset);
    const auto entries = log.entries();
    if (entries.size() != spec.node_count) {
        throw IncompleteLogError("order log has " + std::to_string(entries.size()) +
                                 " entries for " + std::to_string(spec.node_count) + " tasks");
    }
    for (const auto& e : entries) {
        if (e.task >= spec.node_count || tick[e.task] != unset) {
            throw IncompleteLogError("order log entry for task " + std::to_string(e.task) +
                                     " is out of range or repeated");
        }
        tick[e.task] = e.tick;
    }
    for (auto edge : spec.edges) {
        if (tick[edge.first] >= tick[edge.second]) return TopoCheck{edge};
    }
    return {};
}

DagExecution sequential_execute(const DagSpec& spec) {
    DagExecution run{OrderLog(spec.node_count), std::vector<std::uint64_t>(spec.node_count)};
    const auto preds = predecessor_lists(spec);
    std::vector<std::vector<std::size_t>> succs(spec.node_count);
    std::vector<std::size_t> in_degree(spec.node_count);
    for (auto [p, s] : spec.edges) {
        succs[p].push_back(s);
        ++in_degree[s];
    }
    std::vector<std::size_t> queue;
    for (std::size_t i = 0; i < spec.node_count; ++i) {
        if (in_degree[i] == 0) queue.push_back(i);
    }
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const std::size_t n = queue[head];
        run.state[n] = node_value(n, preds[n], run.state);
        run.log.record(n);
        for (std::size_t s : succs[n]) {
            if (--in_degree[s] == 0) queue.push_back(s);
        }
    }
    return run;
}

DagExecution pool_execute(ThreadPool& pool, const DagSpec& spec) {
    DagExecution run{OrderLog(spec.node_count), std::vector<std::uint64_t>(spec.node_count)};
    const auto preds = predecessor_lists(spec);

    TaskGraph graph;
    for (std::size_t i = 0; i < spec.node_count; ++i) {
        graph.add_task([&run, &preds, i] {
            run.state[i] = node_value(i, preds[i], run.state);
            run.log.record(i);
        });
    }
    for (auto [p, s] : spec.edges) graph[s].succeed(&graph[p]);

    pool.submit_graph(graph);
    pool.wait();
    return run;
}

std::size_t DequeStressReport::stolen() const noexcept {
    std::size_t n = 0;
    for (const auto& log : thief_logs) n += log.size();
    return n;
}

DequeStressReport deque_stress(const DequeStressConfig& config) {
    if (config.thieves == 0) throw std::invalid_argument("deque_stress: need at least one thief");
    if (config.items > UINT32_MAX) throw std::invalid_argument("deque_stress: too many items");

    // Items are identified by their address in this array.
    std::vector<std::uint32_t> items(config.items);
    for (std::size_t i = 0; i < items.size(); ++i) items[i] = static_cast<std::uint32_t>(i);

    WorkStealingDeque<std::uint32_t> deque(config.initial_capacity);
    std::atomic<std::size_t> consumed{0};
    std::atomic<bool> go{false};
    // Set if consumption stalls with the deque empty, i.e. an item was lost.
    std::atomic<bool> abandon{false};

    DequeStressReport report;
    report.items = config.items;
    report.thief_logs.resize(config.thieves);
    std::vector<std::size_t> retries(config.thieves, 0);
    std::vector<std::size_t> regressions(config.thieves, 0);

    std::vector<std::thread> thieves;
    thieves.reserve(config.thieves);
    for (std::size_t k = 0; k < config.thieves; ++k) {
        thieves.emplace_back([&, k] {
            auto& log = report.thief_logs[k];
            while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
            std::int64_t last_top = 0;
            while (consumed.load(std::memory_order_acquire) < config.items &&
                   !abandon.load(std::memory_order_acquire)) {
                const std::int64_t top = deque.top_index();
                if (top < last_top) ++regressions[k];
                last_top = top;
                auto r = deque.steal();
                if (r) {
                    log.push_back(*r.item);
                    consumed.fetch_add(1, std::memory_order_acq_rel);
                } else if (r.status == StealStatus::retry) {
                    ++retries[k];
                } else {
                    std::this_thread::yield();
                }
            }
        });
    }

    deque.bind_owner();
    go.store(true, std::memory_order_release);
    std::mt19937_64 rng(config.seed);
    auto owner_pop = [&] {
        if (std::uint32_t* item = deque.pop()) {
            report.owner_log.push_back(*item);
            consumed.fetch_add(1, std::memory_order_acq_rel);
            return true;
        }
        return false;
    };
    for (auto& item : items) {
        deque.push(&item);
        if (config.pop_probability > 0.0 && unit_interval(rng) < config.pop_probability) owner_pop();
    }
    if (config.pop_probability > 0.0) {
        while (owner_pop()) {
        }
    }
    {
        using clock = std::chrono::steady_clock;
        std::size_t last = consumed.load(std::memory_order_acquire);
        auto last_progress = clock::now();
        while (last < config.items) {
            std::this_thread::yield();
            const std::size_t now = consumed.load(std::memory_order_acquire);
            if (now != last) {
                last = now;
                last_progress = clock::now();
            } else if (deque.empty() && clock::now() - last_progress > std::chrono::seconds(2)) {
                abandon.store(true, std::memory_order_release);
                break;
            }
        }
    }
    for (auto& t : thieves) t.join();

    report.final_capacity = deque.capacity();
    for (std::size_t k = 0; k < config.thieves; ++k) {
        report.retries += retries[k];
        report.top_regressions += regressions[k];
        const auto& log = report.thief_logs[k];
        if (!std::is_sorted(log.begin(), log.end()) ||
            std::adjacent_find(log.begin(), log.end()) != log.end()) {
            ++report.order_violations;
        }
    }

    std::vector<std::uint8_t> seen(config.items, 0);
    auto tally = [&](const std::vector<std::uint32_t>& log) {
        for (std::uint32_t id : log) {
            if (seen[id] != 0) ++report.duplicates;
            seen[id] = 1;
        }
    };
    tally(report.owner_log);
    for (const auto& log : report.thief_logs) tally(log);
    report.missing = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), 0));
    return report;
}

}  // namespace stealpool::verify
