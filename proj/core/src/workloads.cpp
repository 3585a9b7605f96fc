#include "stealpool/workloads.hpp"

#include <string>
#include <vector>

#include "stealpool/task_graph.hpp"
#include "stealpool/thread_pool.hpp"

namespace stealpool::bench {

namespace {

struct FibFrame {
    std::uint64_t left = 0;
    std::uint64_t right = 0;
};

// Body of the task computing fib(n) into *out. An internal node hands its
// own successors to a join over its two children, so whoever waits on this
// task really waits for the whole subtree.
void fib_node(ThreadPool& pool, unsigned n, std::uint64_t* out) {
    if (n < 2) {
        *out = n;
        return;
    }
    auto* frame = new FibFrame;
    Task& join = pool.make_task([frame, out] {
        *out = frame->left + frame->right;
        delete frame;
    });
    pool.forward_successors(join);
    Task& left = pool.make_task([&pool, n, frame] { fib_node(pool, n - 1, &frame->left); });
    Task& right = pool.make_task([&pool, n, frame] { fib_node(pool, n - 2, &frame->right); });
    join.succeed(&left, &right);
    pool.submit(left);
    pool.submit(right);
}

}  // namespace

std::uint64_t fib_workload(ThreadPool& pool, unsigned n, bool allow_large) {
    if (n > max_fib_param && !allow_large) {
        throw UsageError("fib parameter " + std::to_string(n) + " exceeds " +
                         std::to_string(max_fib_param) + " without the large-input override");
    }
    std::uint64_t result = 0;
    pool.submit([&pool, n, &result] { fib_node(pool, n, &result); });
    pool.wait();
    return result;
}

std::int64_t expr_workload(ThreadPool& pool, std::int64_t a, std::int64_t b, std::int64_t c,
                           std::int64_t d) {
    std::int64_t va = 0, vb = 0, vc = 0, vd = 0;
    std::int64_t sum_ab = 0, sum_cd = 0, product = 0;

    TaskGraph graph;
    Task& get_a = graph.add_task([&] { va = a; });
    Task& get_b = graph.add_task([&] { vb = b; });
    Task& get_c = graph.add_task([&] { vc = c; });
    Task& get_d = graph.add_task([&] { vd = d; });
    Task& get_sum_ab = graph.add_task([&] { sum_ab = va + vb; });
    Task& get_sum_cd = graph.add_task([&] { sum_cd = vc + vd; });
    Task& get_product = graph.add_task([&] { product = sum_ab * sum_cd; });

    get_sum_ab.succeed(&get_a, &get_b);
    get_sum_cd.succeed(&get_c, &get_d);
    get_product.succeed(&get_sum_ab, &get_sum_cd);

    pool.submit_graph(graph);
    pool.wait();
    return product;
}

std::uint64_t fanout_kernel(std::uint64_t task, std::uint64_t work) noexcept {
    std::uint64_t x = task * 0x9E3779B97F4A7C15ull + 1;
    for (std::uint64_t i = 0; i < work; ++i) {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        x += i;
    }
    return x;
}

std::uint64_t fanout_workload(ThreadPool& pool, std::uint64_t tasks, std::uint64_t work) {
    std::vector<std::uint64_t> results(tasks);
    for (std::uint64_t t = 0; t < tasks; ++t) {
        pool.submit([&results, t, work] { results[t] = fanout_kernel(t, work); });
    }
    pool.wait();
    std::uint64_t sum = 0;
    for (std::uint64_t r : results) sum += r;
    return sum;
}

std::uint64_t fib_reference(unsigned n) {
    std::uint64_t prev = 0, cur = 1;
    if (n == 0) return 0;
    for (unsigned i = 1; i < n; ++i) {
        const std::uint64_t next = prev + cur;
        prev = cur;
        cur = next;
    }
    return cur;
}

std::int64_t expr_reference(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
    return (a + b) * (c + d);
}

std::uint64_t fanout_reference(std::uint64_t tasks, std::uint64_t work) {
    std::uint64_t sum = 0;
    for (std::uint64_t t = 0; t < tasks; ++t) sum += fanout_kernel(t, work);
    return sum;
}

}  // namespace stealpool::bench
