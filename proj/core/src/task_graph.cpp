#include "stealpool/task_graph.hpp"

#include <algorithm>

namespace stealpool {

void Task::check_wirable() const {
    if (graph_ != nullptr && graph_->executing()) {
        throw GraphBusyError("cannot add dependencies to a graph while it is executing");
    }
}

void Task::succeed(std::span<Task* const> predecessors) {
    check_wirable();
    for (Task* pred : predecessors) {
        if (pred == this) throw SelfDependencyError("a task cannot succeed itself");
        if (pred == nullptr || pred->graph_ != graph_ || pred->pool_ != pool_) {
            throw CrossGraphError("predecessor belongs to a different graph");
        }
    }
    for (Task* pred : predecessors) pred->successors_.push_back(this);
    initial_predecessors_ += predecessors.size();
    pending_predecessors_.fetch_add(predecessors.size(), std::memory_order_relaxed);
}

Task& TaskGraph::add_task(Task::Work work) {
    if (executing()) throw GraphBusyError("cannot add tasks to a graph while it is executing");
    return tasks_.emplace_back(Task::Key{}, std::move(work), this, nullptr, tasks_.size());
}

std::size_t TaskGraph::edge_count() const noexcept {
    std::size_t edges = 0;
    for (const Task& t : tasks_) edges += t.successors_.size();
    return edges;
}

void TaskGraph::validate() const {
    std::vector<std::size_t> in_degree(tasks_.size());
    for (const Task& t : tasks_) in_degree[t.index_] = t.initial_predecessors_;

    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < in_degree.size(); ++i) {
        if (in_degree[i] == 0) ready.push_back(i);
    }
    std::size_t peeled = 0;
    while (!ready.empty()) {
        const std::size_t i = ready.back();
        ready.pop_back();
        ++peeled;
        for (const Task* s : tasks_[i].successors_) {
            if (--in_degree[s->index_] == 0) ready.push_back(s->index_);
        }
    }
    if (peeled == tasks_.size()) return;

    // Whatever was not peeled is on a cycle or downstream of one.
    std::vector<std::size_t> stuck;
    for (std::size_t i = 0; i < in_degree.size(); ++i) {
        if (in_degree[i] != 0) stuck.push_back(i);
    }
    std::vector<std::size_t> cycle;
    {
        // Every stuck node has a stuck predecessor, so following reverse edges
        // among stuck nodes must revisit one.
        std::vector<std::vector<std::size_t>> preds(tasks_.size());
        for (const Task& t : tasks_) {
            for (const Task* s : t.successors_) {
                if (in_degree[t.index_] != 0 && in_degree[s->index_] != 0) {
                    preds[s->index_].push_back(t.index_);
                }
            }
        }
        std::vector<std::size_t> seen_at(tasks_.size(), static_cast<std::size_t>(-1));
        std::vector<std::size_t> path;
        std::size_t node = stuck.front();
        while (seen_at[node] == static_cast<std::size_t>(-1)) {
            seen_at[node] = path.size();
            path.push_back(node);
            node = preds[node].front();
        }
        cycle.assign(path.begin() + static_cast<std::ptrdiff_t>(seen_at[node]), path.end());
        std::reverse(cycle.begin(), cycle.end());
    }

    std::string msg = "task graph contains a cycle through tasks";
    for (std::size_t i : cycle) msg += " " + std::to_string(i);
    throw CycleError(std::move(msg), std::move(cycle));
}

void TaskGraph::reset() {
    if (executing()) throw GraphBusyError("cannot reset a graph while it is executing");
    for (Task& t : tasks_) {
        t.pending_predecessors_.store(t.initial_predecessors_, std::memory_order_relaxed);
    }
}

}  // namespace stealpool
