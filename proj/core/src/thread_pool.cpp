#include "stealpool/thread_pool.hpp"

#include <algorithm>
#include <utility>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

namespace stealpool {

namespace {

struct WorkerSlot {
    const ThreadPool* pool = nullptr;
    std::size_t index = 0;
};

thread_local WorkerSlot tls_slot;

// Spin rounds before a worker parks. Each round is a full pop/inject/steal scan.
constexpr int spin_rounds = 256;

void cpu_relax() noexcept {
#if defined(__x86_64__) || defined(__i386__)
    _mm_pause();
#elif defined(__aarch64__)
    asm volatile("yield");
#endif
}

void backoff(int round) noexcept {
    if (round < 8) {
        for (int i = 0; i < (1 << round); ++i) cpu_relax();
    } else {
        std::this_thread::yield();
    }
}

std::uint64_t next_random(std::uint64_t& state) noexcept {
    // xorshift64
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
}

}  // namespace

std::size_t ThreadPool::default_thread_count() noexcept {
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

ThreadPool::ThreadPool(std::size_t thread_count) {
    if (thread_count == 0) thread_count = default_thread_count();
    workers_.reserve(thread_count);
    for (std::size_t i = 0; i < thread_count; ++i) {
        workers_.push_back(std::make_unique<Worker>());
        workers_.back()->rng_state = 0x9E3779B97F4A7C15ull * (i + 1);
    }
    threads_.reserve(thread_count);
    try {
        for (std::size_t i = 0; i < thread_count; ++i) {
            threads_.emplace_back([this, i] { worker_loop(i); });
        }
    } catch (...) {
        stop_.store(true, std::memory_order_seq_cst);
        wake_epoch_.fetch_add(1, std::memory_order_seq_cst);
        wake_epoch_.notify_all();
        for (auto& t : threads_) t.join();
        throw;
    }
}

ThreadPool::~ThreadPool() { shutdown(); }

std::ptrdiff_t ThreadPool::current_worker_index() const noexcept {
    return tls_slot.pool == this ? static_cast<std::ptrdiff_t>(tls_slot.index) : -1;
}

void ThreadPool::acquire_pending(std::size_t count) {
    pending_.fetch_add(count, std::memory_order_seq_cst);
    // Workers may keep submitting while the pool drains: their own task is
    // still pending, so the drain cannot have finished yet.
    if (closing_.load(std::memory_order_seq_cst) && current_worker_index() < 0) {
        if (pending_.fetch_sub(count, std::memory_order_acq_rel) == count) pending_.notify_all();
        throw PoolShutdownError("submission to a thread pool that is shutting down");
    }
}

void ThreadPool::release_pending() noexcept {
    if (pending_.fetch_sub(1, std::memory_order_acq_rel) == 1) pending_.notify_all();
}

Task& ThreadPool::make_task(Task::Work work) {
    acquire_pending(1);
    return *new Task(Task::Key{}, std::move(work), nullptr, this, 0);
}

void ThreadPool::submit(Task::Work work) {
    Task& task = make_task(std::move(work));
    enqueue_ready(&task);
}

void ThreadPool::submit(Task& task) {
    if (task.pool_ != this) throw std::invalid_argument("task was not made by this pool");
    if (task.pending_predecessors() != 0) {
        throw std::invalid_argument("task still has uncompleted predecessors");
    }
    enqueue_ready(&task);
}

void ThreadPool::forward_successors(Task& to) {
    const std::ptrdiff_t self = current_worker_index();
    Task* from = self >= 0 ? workers_[static_cast<std::size_t>(self)]->current : nullptr;
    if (from == nullptr) throw std::logic_error("forward_successors() called outside a running task");
    if (from->pool_ != this || to.pool_ != this) {
        throw std::invalid_argument("only detached tasks of this pool can forward successors");
    }
    if (&to == from) return;
    to.successors_.insert(to.successors_.end(), from->successors_.begin(), from->successors_.end());
    from->successors_.clear();
}

void ThreadPool::submit_graph(TaskGraph& graph) {
    if (graph.executing()) throw GraphBusyError("graph is already executing");
    graph.validate();
    const std::size_t n = graph.size();
    if (n == 0) return;

    std::size_t idle = 0;
    if (!graph.remaining_.compare_exchange_strong(idle, n, std::memory_order_acq_rel)) {
        throw GraphBusyError("graph is already executing");
    }
    std::vector<Task*> roots;
    for (Task& t : graph.tasks_) {
        t.pending_predecessors_.store(t.initial_predecessors_, std::memory_order_relaxed);
        if (t.initial_predecessors_ == 0) roots.push_back(&t);
    }
    try {
        acquire_pending(n);
    } catch (...) {
        graph.remaining_.store(0, std::memory_order_release);
        throw;
    }
    enqueue_ready(roots);
}

void ThreadPool::enqueue_ready(Task* task) { enqueue_ready(std::span<Task* const>(&task, 1)); }

void ThreadPool::enqueue_ready(std::span<Task* const> tasks) {
    if (tasks.empty()) return;
    const std::ptrdiff_t self = current_worker_index();
    if (self >= 0) {
        Worker& w = *workers_[static_cast<std::size_t>(self)];
        for (Task* t : tasks) w.queue.push(t);
        w.local_pushes.fetch_add(tasks.size(), std::memory_order_relaxed);
    } else {
        {
            std::lock_guard lock(injector_mutex_);
            injector_.insert(injector_.end(), tasks.begin(), tasks.end());
            injector_size_.fetch_add(tasks.size(), std::memory_order_seq_cst);
        }
        injector_pushes_.fetch_add(tasks.size(), std::memory_order_relaxed);
    }
    notify_workers(tasks.size());
}

void ThreadPool::notify_workers(std::size_t count) {
    // The epoch bump must precede the sleeper check; see worker_loop.
    wake_epoch_.fetch_add(1, std::memory_order_seq_cst);
    if (sleepers_.load(std::memory_order_seq_cst) == 0) return;
    if (count == 1) {
        wake_epoch_.notify_one();
    } else {
        wake_epoch_.notify_all();
    }
}

Task* ThreadPool::take_injected() {
    if (injector_size_.load(std::memory_order_seq_cst) == 0) return nullptr;
    std::lock_guard lock(injector_mutex_);
    if (injector_.empty()) return nullptr;
    Task* t = injector_.front();
    injector_.pop_front();
    injector_size_.fetch_sub(1, std::memory_order_relaxed);
    return t;
}

Task* ThreadPool::find_task(std::size_t index) {
    Worker& self = *workers_[index];
    if (Task* t = self.queue.pop()) return t;
    if (Task* t = take_injected()) return t;

    const std::size_t n = workers_.size();
    if (n == 1) return nullptr;
    const std::size_t start = next_random(self.rng_state) % n;
    bool retry = true;
    while (retry) {
        retry = false;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t victim = (start + k) % n;
            if (victim == index) continue;
            auto result = workers_[victim]->queue.steal();
            if (result) {
                self.steals.fetch_add(1, std::memory_order_relaxed);
                return result.item;
            }
            if (result.status == StealStatus::retry) retry = true;
        }
    }
    return nullptr;
}

void ThreadPool::worker_loop(std::size_t index) {
    tls_slot = WorkerSlot{this, index};
    Worker& self = *workers_[index];
    self.queue.bind_owner();

    while (true) {
        Task* task = find_task(index);
        for (int round = 0; task == nullptr && round < spin_rounds; ++round) {
            backoff(round);
            task = find_task(index);
        }
        if (task != nullptr) {
            run_task(self, task);
            continue;
        }
        if (stop_.load(std::memory_order_seq_cst)) break;

        // Parking protocol: read the epoch, announce ourselves, then look
        // once more. A submitter enqueues, bumps the epoch, then checks for
        // sleepers; either we see its task here or the epoch has moved and
        // wait() returns at once.
        const std::uint64_t epoch = wake_epoch_.load(std::memory_order_seq_cst);
        sleepers_.fetch_add(1, std::memory_order_seq_cst);
        task = find_task(index);
        if (task == nullptr && !stop_.load(std::memory_order_seq_cst)) {
            wake_epoch_.wait(epoch, std::memory_order_seq_cst);
        }
        sleepers_.fetch_sub(1, std::memory_order_seq_cst);
        if (task != nullptr) run_task(self, task);
    }
    tls_slot = WorkerSlot{};
}

void ThreadPool::run_task(Worker& self, Task* task) {
    while (task != nullptr) {
        self.current = task;
        try {
            if (task->work_) task->work_();
        } catch (...) {
            record_error(std::current_exception());
        }
        self.current = nullptr;

        // The first successor released here runs next on this thread; any
        // others go back to this worker's deque where they can be stolen.
        Task* next = nullptr;
        for (Task* succ : task->successors_) {
            if (succ->pending_predecessors_.fetch_sub(1, std::memory_order_acq_rel) != 1) continue;
            if (next == nullptr) {
                next = succ;
                self.inline_continuations.fetch_add(1, std::memory_order_relaxed);
            } else {
                enqueue_ready(succ);
                self.resubmitted_continuations.fetch_add(1, std::memory_order_relaxed);
            }
        }
        self.executed.fetch_add(1, std::memory_order_relaxed);
        finish_task(task);
        task = next;
    }
}

void ThreadPool::finish_task(Task* task) {
    TaskGraph* graph = task->graph_;
    if (task->pool_ != nullptr) delete task;
    if (graph != nullptr) graph->remaining_.fetch_sub(1, std::memory_order_acq_rel);
    release_pending();
}

void ThreadPool::record_error(std::exception_ptr error) {
    std::lock_guard lock(error_mutex_);
    if (!first_error_) first_error_ = std::move(error);
}

void ThreadPool::drain() noexcept {
    for (auto p = pending_.load(std::memory_order_acquire); p != 0;
         p = pending_.load(std::memory_order_acquire)) {
        pending_.wait(p, std::memory_order_acquire);
    }
}

void ThreadPool::wait() {
    if (current_worker_index() >= 0) {
        throw std::logic_error("wait() called from a worker of the same pool");
    }
    drain();
    std::exception_ptr error;
    {
        std::lock_guard lock(error_mutex_);
        error = std::exchange(first_error_, nullptr);
    }
    if (error) std::rethrow_exception(error);
}

void ThreadPool::shutdown() {
    std::lock_guard lock(shutdown_mutex_);
    if (joined_) return;
    if (current_worker_index() >= 0) {
        throw std::logic_error("shutdown() called from a worker of the same pool");
    }
    closing_.store(true, std::memory_order_seq_cst);
    drain();
    stop_.store(true, std::memory_order_seq_cst);
    wake_epoch_.fetch_add(1, std::memory_order_seq_cst);
    wake_epoch_.notify_all();
    for (auto& t : threads_) t.join();
    joined_ = true;
}

bool ThreadPool::queues_empty() const {
    if (injector_size_.load(std::memory_order_acquire) != 0) return false;
    return std::all_of(workers_.begin(), workers_.end(),
                       [](const auto& w) { return w->queue.empty(); });
}

PoolStats ThreadPool::stats() const {
    PoolStats s;
    s.injector_pushes = injector_pushes_.load(std::memory_order_relaxed);
    for (const auto& w : workers_) {
        const auto executed = w->executed.load(std::memory_order_relaxed);
        s.executed += executed;
        s.executed_per_worker.push_back(executed);
        s.local_pushes += w->local_pushes.load(std::memory_order_relaxed);
        s.steals += w->steals.load(std::memory_order_relaxed);
        s.inline_continuations += w->inline_continuations.load(std::memory_order_relaxed);
        s.resubmitted_continuations += w->resubmitted_continuations.load(std::memory_order_relaxed);
    }
    return s;
}

void ThreadPool::reset_stats() noexcept {
    injector_pushes_.store(0, std::memory_order_relaxed);
    for (auto& w : workers_) {
        w->executed.store(0, std::memory_order_relaxed);
        w->local_pushes.store(0, std::memory_order_relaxed);
        w->steals.store(0, std::memory_order_relaxed);
        w->inline_continuations.store(0, std::memory_order_relaxed);
        w->resubmitted_continuations.store(0, std::memory_order_relaxed);
    }
}

}  // namespace stealpool
