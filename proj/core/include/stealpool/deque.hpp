#pragma once

#include <atomic>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <thread>
#include <vector>

namespace stealpool {

enum class StealStatus { success, empty, retry };

template <typename T>
struct StealResult {
    StealStatus status = StealStatus::empty;
    T* item = nullptr;

    explicit operator bool() const noexcept { return status == StealStatus::success; }
};

// Chase-Lev work-stealing deque holding non-owning T*.
//
// The owner thread pushes and pops at the bottom; any other thread may steal
// from the top. Every contended transition uses an atomic operation with its
// own ordering; there are no standalone fences, so the deque is clean under
// ThreadSanitizer.
//
// Growth doubles the circular buffer. Retired buffers stay alive until the
// deque is destroyed, since a thief may still be reading from one.
template <typename T>
class WorkStealingDeque {
public:
    static constexpr std::size_t default_capacity = 64;

    explicit WorkStealingDeque(std::size_t capacity = default_capacity) {
        std::size_t cap = 2;
        while (cap < capacity) cap <<= 1;
        buffers_.push_back(std::make_unique<Buffer>(cap));
        buffer_.store(buffers_.back().get(), std::memory_order_relaxed);
    }

    WorkStealingDeque(const WorkStealingDeque&) = delete;
    WorkStealingDeque& operator=(const WorkStealingDeque&) = delete;

    // Records the calling thread as owner. Only checked in debug builds.
    void bind_owner() noexcept {
#ifndef NDEBUG
        owner_ = std::this_thread::get_id();
#endif
    }

    void push(T* item) {
        assert(item != nullptr);
        assert_owner();
        const std::int64_t b = bottom_.load(std::memory_order_relaxed);
        const std::int64_t t = top_.load(std::memory_order_acquire);
        Buffer* buf = buffer_.load(std::memory_order_relaxed);
        if (b - t >= static_cast<std::int64_t>(buf->capacity())) {
            buf = grow(buf, t, b);
        }
        buf->store(b, item);
        bottom_.store(b + 1, std::memory_order_release);
    }

    T* pop() noexcept {
        assert_owner();
        const std::int64_t b = bottom_.load(std::memory_order_relaxed) - 1;
        Buffer* buf = buffer_.load(std::memory_order_relaxed);
        // Publishing the decremented bottom and then reading top must not be
        // reordered; both are seq_cst so they sit in the single total order
        // together with the thieves' loads.
        bottom_.store(b, std::memory_order_seq_cst);
        std::int64_t t = top_.load(std::memory_order_seq_cst);

        if (t > b) {
            bottom_.store(b + 1, std::memory_order_release);
            return nullptr;
        }
        T* item = buf->load(b);
        if (t == b) {
            // Last element: race the thieves for it.
            if (!top_.compare_exchange_strong(t, t + 1, std::memory_order_seq_cst,
                                              std::memory_order_relaxed)) {
                item = nullptr;
            }
            bottom_.store(b + 1, std::memory_order_release);
        }
        return item;
    }

    StealResult<T> steal() noexcept {
        std::int64_t t = top_.load(std::memory_order_seq_cst);
        const std::int64_t b = bottom_.load(std::memory_order_seq_cst);
        if (t >= b) return {StealStatus::empty, nullptr};

        Buffer* buf = buffer_.load(std::memory_order_acquire);
        T* item = buf->load(t);
        if (!top_.compare_exchange_strong(t, t + 1, std::memory_order_seq_cst,
                                          std::memory_order_relaxed)) {
            return {StealStatus::retry, nullptr};
        }
        return {StealStatus::success, item};
    }

    // Exact for the owner when no steal is in flight; a snapshot otherwise.
    std::size_t size() const noexcept {
        const std::int64_t b = bottom_.load(std::memory_order_acquire);
        const std::int64_t t = top_.load(std::memory_order_acquire);
        return b > t ? static_cast<std::size_t>(b - t) : 0;
    }

    bool empty() const noexcept { return size() == 0; }

    std::size_t capacity() const noexcept {
        return buffer_.load(std::memory_order_acquire)->capacity();
    }

    std::int64_t top_index() const noexcept { return top_.load(std::memory_order_acquire); }

private:
    class Buffer {
    public:
        explicit Buffer(std::size_t capacity)
            : mask_(capacity - 1), slots_(std::make_unique<std::atomic<T*>[]>(capacity)) {}

        std::size_t capacity() const noexcept { return mask_ + 1; }

        void store(std::int64_t index, T* item) noexcept {
            slots_[static_cast<std::size_t>(index) & mask_].store(item, std::memory_order_relaxed);
        }

        T* load(std::int64_t index) const noexcept {
            return slots_[static_cast<std::size_t>(index) & mask_].load(std::memory_order_relaxed);
        }

    private:
        std::size_t mask_;
        std::unique_ptr<std::atomic<T*>[]> slots_;
    };

    Buffer* grow(Buffer* old, std::int64_t top, std::int64_t bottom) {
        auto next = std::make_unique<Buffer>(old->capacity() * 2);
        for (std::int64_t i = top; i < bottom; ++i) next->store(i, old->load(i));
        Buffer* raw = next.get();
        buffers_.push_back(std::move(next));
        buffer_.store(raw, std::memory_order_release);
        return raw;
    }

    void assert_owner() const noexcept {
#ifndef NDEBUG
        assert(owner_ == std::thread::id{} || owner_ == std::this_thread::get_id());
#endif
    }

    alignas(64) std::atomic<std::int64_t> top_{0};
    alignas(64) std::atomic<std::int64_t> bottom_{0};
    alignas(64) std::atomic<Buffer*> buffer_{nullptr};
    // Owner-only. Holds the live buffer and every retired one.
    std::vector<std::unique_ptr<Buffer>> buffers_;
#ifndef NDEBUG
    std::thread::id owner_{};
#endif
};

}  // namespace stealpool
