#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "stealpool/deque.hpp"
#include "stealpool/task_graph.hpp"

namespace stealpool {

class PoolShutdownError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Counters for scheduling decisions. Collected with relaxed atomics, so a
// snapshot taken while tasks run is approximate; after wait() it is exact.
struct PoolStats {
    std::uint64_t executed = 0;
    // Submissions from a worker thread that went to that worker's own deque.
    std::uint64_t local_pushes = 0;
    // Submissions from outside the pool, placed on the injector.
    std::uint64_t injector_pushes = 0;
    std::uint64_t steals = 0;
    // Ready successors run directly on the worker that released them.
    std::uint64_t inline_continuations = 0;
    // Ready successors pushed back to the pool instead.
    std::uint64_t resubmitted_continuations = 0;
    std::vector<std::uint64_t> executed_per_worker;
};

// Work-stealing thread pool that runs independent tasks and task graphs.
//
// Each worker owns a Chase-Lev deque, found through a thread-local slot.
// Submissions from a worker go to its own deque; submissions from any other
// thread go to a shared injector queue. Idle workers pop their deque, then
// drain the injector, then steal, then park after a short spin.
//
// The destructor drains all pending work before joining the workers.
class ThreadPool {
public:
    explicit ThreadPool(std::size_t thread_count = 0);
    ~ThreadPool();

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    static std::size_t default_thread_count() noexcept;

    std::size_t thread_count() const noexcept { return workers_.size(); }

    void submit(Task::Work work);

    // Submits every root of `graph`; the rest run as their predecessors finish.
    // The graph's counters are reset first, so a finished graph can simply be
    // submitted again. Throws CycleError before anything runs.
    void submit_graph(TaskGraph& graph);

    // Detached tasks are owned by the pool and freed once they have run. Every
    // task made here must either be passed to submit(Task&) or be wired as a
    // successor of such a task, otherwise wait() never returns.
    Task& make_task(Task::Work work);
    void submit(Task& task);

    // Called from inside a running detached task: moves that task's successor
    // edges onto `to`, so successors wait for `to` instead. This is how a task
    // that spawns children defers its own completion to a join task.
    void forward_successors(Task& to);

    // Blocks until every submitted task, including ones submitted while
    // waiting, has completed. Rethrows the first exception that escaped a
    // task since the last wait(). Must not be called from a worker thread.
    void wait();

    // Drains, then stops and joins the workers. Idempotent.
    void shutdown();

    PoolStats stats() const;
    void reset_stats() noexcept;

    std::size_t pending() const noexcept { return pending_.load(std::memory_order_acquire); }
    // True when no worker deque and the injector hold tasks.
    bool queues_empty() const;

    // Index of the calling worker in this pool, or -1 from any other thread.
    std::ptrdiff_t current_worker_index() const noexcept;

private:
    struct alignas(64) Worker {
        WorkStealingDeque<Task> queue;
        std::atomic<std::uint64_t> executed{0};
        std::atomic<std::uint64_t> local_pushes{0};
        std::atomic<std::uint64_t> steals{0};
        std::atomic<std::uint64_t> inline_continuations{0};
        std::atomic<std::uint64_t> resubmitted_continuations{0};
        std::uint64_t rng_state = 0;
        // Task whose work is running on this worker. Owner-only.
        Task* current = nullptr;
    };

    void worker_loop(std::size_t index);
    Task* find_task(std::size_t index);
    Task* take_injected();
    void run_task(Worker& self, Task* task);
    void finish_task(Task* task);
    void enqueue_ready(Task* task);
    void enqueue_ready(std::span<Task* const> tasks);
    void notify_workers(std::size_t count);
    void record_error(std::exception_ptr error);
    void acquire_pending(std::size_t count);
    void release_pending() noexcept;
    void drain() noexcept;

    std::vector<std::unique_ptr<Worker>> workers_;
    std::vector<std::thread> threads_;

    std::mutex injector_mutex_;
    std::deque<Task*> injector_;
    std::atomic<std::size_t> injector_size_{0};
    std::atomic<std::uint64_t> injector_pushes_{0};

    std::atomic<std::size_t> pending_{0};
    // Bumped on every enqueue; parked workers sleep on it.
    std::atomic<std::uint64_t> wake_epoch_{0};
    std::atomic<std::size_t> sleepers_{0};

    // Set once shutdown starts; external submissions are refused from then on.
    std::atomic<bool> closing_{false};
    std::atomic<bool> stop_{false};
    std::mutex shutdown_mutex_;
    bool joined_ = false;

    std::mutex error_mutex_;
    std::exception_ptr first_error_;
};

}  // namespace stealpool
