#pragma once

#include <atomic>
#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace stealpool {

class ThreadPool;
class TaskGraph;

class SelfDependencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class CrossGraphError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Raised when a graph is rewired, reset or resubmitted while it is executing.
class GraphBusyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class CycleError : public std::runtime_error {
public:
    CycleError(std::string what, std::vector<std::size_t> tasks_on_cycle)
        : std::runtime_error(std::move(what)), tasks_on_cycle_(std::move(tasks_on_cycle)) {}

    // Indices (in insertion order) of tasks that could not be peeled.
    const std::vector<std::size_t>& tasks_on_cycle() const noexcept { return tasks_on_cycle_; }

private:
    std::vector<std::size_t> tasks_on_cycle_;
};

// A no-argument, no-result callable plus its dependency bookkeeping.
//
// Tasks live either in a TaskGraph or are detached tasks created by
// ThreadPool::make_task. Successor edges may only connect tasks with the same
// owner.
class Task {
    struct Key {
        explicit Key() = default;
    };

public:
    using Work = std::function<void()>;

    Task(Key, Work work, TaskGraph* graph, ThreadPool* pool, std::size_t index)
        : work_(std::move(work)), graph_(graph), pool_(pool), index_(index) {}

    Task(const Task&) = delete;
    Task& operator=(const Task&) = delete;

    // Makes this task depend on every task in `predecessors`. Each edge bumps
    // the in-degree by one; duplicates are counted as given.
    void succeed(std::span<Task* const> predecessors);
    void succeed(std::initializer_list<Task*> predecessors) {
        succeed(std::span<Task* const>(predecessors.begin(), predecessors.size()));
    }
    template <typename... Ts>
        requires(sizeof...(Ts) > 0 && (std::is_convertible_v<Ts, Task*> && ...))
    void succeed(Ts... predecessors) {
        Task* const list[] = {predecessors...};
        succeed(std::span<Task* const>(list));
    }

    const std::vector<Task*>& successors() const noexcept { return successors_; }
    std::size_t initial_predecessors() const noexcept { return initial_predecessors_; }
    std::size_t pending_predecessors() const noexcept {
        return pending_predecessors_.load(std::memory_order_acquire);
    }

    TaskGraph* graph() const noexcept { return graph_; }
    // Position within the owning graph; 0 for detached tasks.
    std::size_t index() const noexcept { return index_; }

private:
    friend class TaskGraph;
    friend class ThreadPool;

    void check_wirable() const;

    Work work_;
    std::vector<Task*> successors_;
    std::atomic<std::size_t> pending_predecessors_{0};
    std::size_t initial_predecessors_ = 0;
    TaskGraph* graph_ = nullptr;
    // Set for detached tasks; the pool deletes them after they run.
    ThreadPool* pool_ = nullptr;
    std::size_t index_ = 0;
};

// Owning collection of tasks. References returned by add_task stay valid for
// the lifetime of the graph, regardless of later additions.
class TaskGraph {
public:
    TaskGraph() = default;
    TaskGraph(const TaskGraph&) = delete;
    TaskGraph& operator=(const TaskGraph&) = delete;

    Task& add_task(Task::Work work);

    // Throws CycleError if the edges do not form a DAG. Does not modify the graph.
    void validate() const;

    // Restores every pending counter to its wired in-degree.
    void reset();

    std::size_t size() const noexcept { return tasks_.size(); }
    bool empty() const noexcept { return tasks_.empty(); }
    std::size_t edge_count() const noexcept;

    Task& operator[](std::size_t i) noexcept { return tasks_[i]; }
    const Task& operator[](std::size_t i) const noexcept { return tasks_[i]; }

    auto begin() noexcept { return tasks_.begin(); }
    auto end() noexcept { return tasks_.end(); }
    auto begin() const noexcept { return tasks_.begin(); }
    auto end() const noexcept { return tasks_.end(); }

    bool executing() const noexcept { return remaining_.load(std::memory_order_acquire) != 0; }

private:
    friend class Task;
    friend class ThreadPool;

    // std::deque keeps element addresses stable across emplace_back.
    std::deque<Task> tasks_;
    // Tasks of the current submission that have not completed yet.
    std::atomic<std::size_t> remaining_{0};
};

}  // namespace stealpool
