#include <gtest/gtest.h>

#include <atomic>
#include <functional>
#include <random>
#include <set>
#include <thread>
#include <vector>

#include "stealpool/task_graph.hpp"
#include "stealpool/thread_pool.hpp"
#include "stealpool/verify.hpp"

using namespace stealpool;

namespace {

// Independent cycle check: three-colour DFS over an adjacency list.
bool has_cycle_dfs(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    std::vector<std::vector<std::size_t>> adj(n);
    for (auto [a, b] : edges) adj[a].push_back(b);
    std::vector<int> colour(n, 0);
    std::function<bool(std::size_t)> visit = [&](std::size_t u) {
        colour[u] = 1;
        for (std::size_t v : adj[u]) {
            if (colour[v] == 1) return true;
            if (colour[v] == 0 && visit(v)) return true;
        }
        colour[u] = 2;
        return false;
    };
    for (std::size_t u = 0; u < n; ++u) {
        if (colour[u] == 0 && visit(u)) return true;
    }
    return false;
}

struct ExprGraph {
    TaskGraph graph;
    int a = 0, b = 0, c = 0, d = 0, sum_ab = 0, sum_cd = 0, product = 0;
    Task* get_a;
    Task* get_b;
    Task* get_c;
    Task* get_d;
    Task* get_sum_ab;
    Task* get_sum_cd;
    Task* get_product;

    ExprGraph() {
        get_a = &graph.add_task([this] { a = 1; });
        get_b = &graph.add_task([this] { b = 2; });
        get_c = &graph.add_task([this] { c = 3; });
        get_d = &graph.add_task([this] { d = 4; });
        get_sum_ab = &graph.add_task([this] { sum_ab = a + b; });
        get_sum_cd = &graph.add_task([this] { sum_cd = c + d; });
        get_product = &graph.add_task([this] { product = sum_ab * sum_cd; });
        get_sum_ab->succeed(get_a, get_b);
        get_sum_cd->succeed(get_c, get_d);
        get_product->succeed(get_sum_ab, get_sum_cd);
    }
};

}  // namespace

TEST(TaskGraph, AddTaskToEmptyGraph) {
    TaskGraph g;
    Task& t = g.add_task([] {});
    EXPECT_EQ(g.size(), 1u);
    EXPECT_EQ(t.initial_predecessors(), 0u);
    EXPECT_EQ(t.pending_predecessors(), 0u);
    EXPECT_TRUE(t.successors().empty());
    EXPECT_EQ(t.graph(), &g);
}

TEST(TaskGraph, ExpressionGraphHasSevenTasks) {
    ExprGraph e;
    EXPECT_EQ(e.graph.size(), 7u);
    EXPECT_EQ(e.get_product->initial_predecessors(), 2u);
    EXPECT_EQ(e.get_sum_ab->initial_predecessors(), 2u);
    EXPECT_EQ(e.get_a->successors().size(), 1u);
    EXPECT_NO_THROW(e.graph.validate());
}

TEST(TaskGraph, ReferencesStayStableAcrossAdditions) {
    TaskGraph g;
    Task& first = g.add_task([] {});
    std::vector<Task*> seen{&first};
    for (int i = 0; i < 5000; ++i) seen.push_back(&g.add_task([] {}));
    EXPECT_EQ(&g[0], &first);
    for (std::size_t i = 0; i < seen.size(); ++i) {
        ASSERT_EQ(&g[i], seen[i]);
        ASSERT_EQ(seen[i]->index(), i);
    }
}

TEST(TaskGraph, EmptySucceedIsNoOp) {
    TaskGraph g;
    Task& t = g.add_task([] {});
    t.succeed({});
    EXPECT_EQ(t.initial_predecessors(), 0u);
}

TEST(TaskGraph, DiamondInDegreesMatchEdgeEnumeration) {
    TaskGraph g;
    Task& a = g.add_task([] {});
    Task& b = g.add_task([] {});
    Task& c = g.add_task([] {});
    Task& d = g.add_task([] {});
    b.succeed(&a);
    c.succeed(&a);
    d.succeed(&b, &c);

    const std::vector<std::pair<std::size_t, std::size_t>> edges{{0, 1}, {0, 2}, {1, 3}, {2, 3}};
    std::vector<std::size_t> expected(4, 0);
    for (auto [from, to] : edges) ++expected[to];
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(g[i].initial_predecessors(), expected[i]);
    EXPECT_EQ(expected, (std::vector<std::size_t>{0, 1, 1, 2}));
}

TEST(TaskGraph, SelfDependencyRejected) {
    TaskGraph g;
    Task& t = g.add_task([] {});
    EXPECT_THROW(t.succeed(&t), SelfDependencyError);
    EXPECT_EQ(t.initial_predecessors(), 0u);
    EXPECT_TRUE(t.successors().empty());
}

TEST(TaskGraph, CrossGraphRejected) {
    TaskGraph g1, g2;
    Task& a = g1.add_task([] {});
    Task& b = g2.add_task([] {});
    EXPECT_THROW(b.succeed(&a), CrossGraphError);
    EXPECT_TRUE(a.successors().empty());
    EXPECT_EQ(b.initial_predecessors(), 0u);
}

TEST(TaskGraph, RejectedWiringLeavesNoPartialEdges) {
    TaskGraph g1, g2;
    Task& a = g1.add_task([] {});
    Task& t = g1.add_task([] {});
    Task& foreign = g2.add_task([] {});
    EXPECT_THROW(t.succeed(&a, &foreign), CrossGraphError);
    EXPECT_TRUE(a.successors().empty());
    EXPECT_EQ(t.initial_predecessors(), 0u);
}

TEST(TaskGraph, DuplicateEdgesAreCounted) {
    TaskGraph g;
    Task& a = g.add_task([] {});
    Task& b = g.add_task([] {});
    b.succeed(&a, &a);
    EXPECT_EQ(b.initial_predecessors(), 2u);
    EXPECT_EQ(a.successors().size(), 2u);

    std::atomic<int> runs{0};
    TaskGraph g2;
    Task& p = g2.add_task([] {});
    Task& s = g2.add_task([&] { runs.fetch_add(1); });
    s.succeed(&p, &p);
    ThreadPool pool(2);
    pool.submit_graph(g2);
    pool.wait();
    EXPECT_EQ(runs.load(), 1);
}

TEST(TaskGraph, ValidateEmptyGraph) {
    TaskGraph g;
    EXPECT_NO_THROW(g.validate());
}

TEST(TaskGraph, TwoTaskCycleIsReported) {
    TaskGraph g;
    Task& a = g.add_task([] {});
    Task& b = g.add_task([] {});
    a.succeed(&b);
    b.succeed(&a);
    try {
        g.validate();
        FAIL() << "expected CycleError";
    } catch (const CycleError& e) {
        const auto& on_cycle = e.tasks_on_cycle();
        ASSERT_FALSE(on_cycle.empty());
        EXPECT_EQ(std::set<std::size_t>(on_cycle.begin(), on_cycle.end()), (std::set<std::size_t>{0, 1}));
    }
    // Unmodified by validation.
    EXPECT_EQ(a.pending_predecessors(), 1u);
    EXPECT_EQ(b.pending_predecessors(), 1u);
}

TEST(TaskGraph, ReportedCycleIsARealCycle) {
    // 0 -> 1 -> 2 -> 3 -> 1, plus a tail 3 -> 4 hanging off the cycle.
    TaskGraph g;
    for (int i = 0; i < 5; ++i) g.add_task([] {});
    g[1].succeed(&g[0]);
    g[2].succeed(&g[1]);
    g[3].succeed(&g[2]);
    g[1].succeed(&g[3]);
    g[4].succeed(&g[3]);
    try {
        g.validate();
        FAIL() << "expected CycleError";
    } catch (const CycleError& e) {
        const auto& cyc = e.tasks_on_cycle();
        ASSERT_GE(cyc.size(), 1u);
        for (std::size_t k = 0; k < cyc.size(); ++k) {
            const Task& from = g[cyc[k]];
            const Task* to = &g[cyc[(k + 1) % cyc.size()]];
            const auto& succ = from.successors();
            EXPECT_NE(std::find(succ.begin(), succ.end(), to), succ.end())
                << cyc[k] << " -> " << to->index() << " is not an edge";
        }
    }
}

// validate() must agree with a DFS cycle check on arbitrary directed graphs.
TEST(TaskGraphProperty, ValidateAgreesWithDfs) {
    std::mt19937_64 rng(2024);
    int cyclic = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t n = 1 + rng() % 64;
        const double p = (rng() % 100) / 1000.0;  // 0 .. 0.099 over all ordered pairs
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        TaskGraph g;
        for (std::size_t i = 0; i < n; ++i) g.add_task([] {});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                if (static_cast<double>(rng() % 1'000'000) / 1e6 < p) {
                    edges.emplace_back(i, j);
                    g[j].succeed(&g[i]);
                }
            }
        }
        const bool expect_cycle = has_cycle_dfs(n, edges);
        cyclic += expect_cycle;
        bool threw = false;
        try {
            g.validate();
        } catch (const CycleError&) {
            threw = true;
        }
        ASSERT_EQ(threw, expect_cycle) << "trial " << trial << " n=" << n << " edges=" << edges.size();
    }
    // Both branches exercised.
    EXPECT_GT(cyclic, 20);
    EXPECT_LT(cyclic, 380);
}

TEST(TaskGraphProperty, EdgeCountConservation) {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const auto spec = verify::random_dag(40, 0.2, seed);
        TaskGraph g;
        for (std::size_t i = 0; i < spec.node_count; ++i) g.add_task([] {});
        for (auto [p, s] : spec.edges) g[s].succeed(&g[p]);

        std::vector<std::size_t> into(spec.node_count, 0);
        for (auto [p, s] : spec.edges) ++into[s];
        std::size_t sum_in = 0, sum_out = 0;
        for (std::size_t i = 0; i < spec.node_count; ++i) {
            EXPECT_EQ(g[i].initial_predecessors(), into[i]);
            sum_in += g[i].initial_predecessors();
            sum_out += g[i].successors().size();
        }
        EXPECT_EQ(sum_in, sum_out);
        EXPECT_EQ(sum_out, spec.edges.size());
        EXPECT_EQ(g.edge_count(), spec.edges.size());
    }
}

TEST(TaskGraph, ResetOfNeverRunGraphIsNoOp) {
    ExprGraph e;
    std::vector<std::size_t> before;
    for (const Task& t : e.graph) before.push_back(t.pending_predecessors());
    e.graph.reset();
    std::vector<std::size_t> after;
    for (const Task& t : e.graph) after.push_back(t.pending_predecessors());
    EXPECT_EQ(before, after);
}

TEST(TaskGraph, ResetAndResubmitGivesSameResult) {
    ExprGraph e;
    ThreadPool pool(2);
    pool.submit_graph(e.graph);
    pool.wait();
    const int first = e.product;
    EXPECT_EQ(first, 21);
    for (const Task& t : e.graph) EXPECT_EQ(t.pending_predecessors(), 0u);

    e.product = 0;
    e.graph.reset();
    EXPECT_EQ(e.get_product->pending_predecessors(), 2u);
    pool.submit_graph(e.graph);
    pool.wait();
    EXPECT_EQ(e.product, first);
}

TEST(TaskGraph, HundredResetCyclesStayTopological) {
    const auto spec = verify::random_dag(48, 0.15, 77);
    verify::OrderLog log(spec.node_count);
    TaskGraph g;
    for (std::size_t i = 0; i < spec.node_count; ++i) {
        g.add_task([&log, i] { log.record(i); });
    }
    for (auto [p, s] : spec.edges) g[s].succeed(&g[p]);

    ThreadPool pool(4);
    for (int round = 0; round < 100; ++round) {
        log.clear();
        g.reset();
        pool.submit_graph(g);
        pool.wait();
        const auto check = verify::check_topological(log, spec);
        ASSERT_TRUE(check.ok()) << "round " << round << " edge " << check.violation->first << "->"
                                << check.violation->second;
    }
}

TEST(TaskGraph, WiringWhileExecutingIsRejected) {
    std::atomic<bool> release{false};
    std::atomic<bool> started{false};
    TaskGraph g;
    Task& blocker = g.add_task([&] {
        started.store(true);
        while (!release.load()) std::this_thread::yield();
    });
    Task& other = g.add_task([] {});

    ThreadPool pool(1);
    pool.submit_graph(g);
    while (!started.load()) std::this_thread::yield();
    EXPECT_TRUE(g.executing());
    EXPECT_THROW(other.succeed(&blocker), GraphBusyError);
    EXPECT_THROW(g.add_task([] {}), GraphBusyError);
    EXPECT_THROW(g.reset(), GraphBusyError);
    EXPECT_THROW(pool.submit_graph(g), GraphBusyError);
    release.store(true);
    pool.wait();
    EXPECT_FALSE(g.executing());
}
