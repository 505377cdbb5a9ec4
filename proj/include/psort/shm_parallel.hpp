#pragma once

// Shared-memory parallel sorts: even partitioning over a power-of-two worker
// count, a per-worker sequential sort, then log2(p) rounds of pairwise tree
// merging where the set of active workers halves every round.

#include <atomic>
#include <barrier>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "psort/core_sorts.hpp"
#include "psort/errors.hpp"

namespace psort {

inline bool is_power_of_two(std::size_t p) noexcept {
    return p != 0 && std::has_single_bit(p);
}

inline void require_power_of_two(std::size_t p, const char* what) {
    if (!is_power_of_two(p))
        throw ConfigError(std::string(what) + " must be a power of two >= 1, got " +
                          std::to_string(p));
}

/******************************************************************************/
// partitioning

struct PartitionPlan {
    std::size_t total_n = 0;
    std::size_t workers = 0;
    std::vector<Run> ranges;

    //! Index span covered by partitions [first, last).
    Run covering(std::size_t first, std::size_t last) const {
        const std::size_t begin = ranges[first].offset;
        return {begin, ranges[last - 1].end() - begin};
    }
};

//! The first total_n mod p ranges get one extra element.
inline PartitionPlan partition_even(std::size_t total_n, std::size_t p) {
    require_power_of_two(p, "worker count");
    PartitionPlan plan{total_n, p, {}};
    plan.ranges.reserve(p);
    const std::size_t base = total_n / p, extra = total_n % p;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < p; ++i) {
        const std::size_t len = base + (i < extra ? 1 : 0);
        plan.ranges.push_back({offset, len});
        offset += len;
    }
    return plan;
}

/******************************************************************************/
// merge schedule

struct RoundStep {
    std::size_t round = 0; // 1-based
    std::vector<std::pair<std::size_t, std::size_t>> pairs; // (active, partner)
};

struct MergeSchedule {
    std::size_t workers = 0;
    std::vector<RoundStep> rounds;
};

//! In round r worker i is active iff i mod 2^r == 0, and merges with partner
//! i + 2^(r-1).
inline MergeSchedule merge_schedule(std::size_t p) {
    require_power_of_two(p, "worker count");
    MergeSchedule sched{p, {}};
    const auto num_rounds = static_cast<std::size_t>(std::countr_zero(p));
    for (std::size_t r = 1; r <= num_rounds; ++r) {
        RoundStep step{r, {}};
        const std::size_t stride = std::size_t{1} << r, half = stride / 2;
        for (std::size_t i = 0; i < p; i += stride)
            step.pairs.emplace_back(i, i + half);
        sched.rounds.push_back(std::move(step));
    }
    return sched;
}

/******************************************************************************/
// instrumentation

//! Records which worker writes each index in each phase. Two different
//! workers writing the same index within one phase count as a violation.
class OwnershipTracker {
public:
    explicit OwnershipTracker(std::size_t n)
        : owner_(std::make_unique<std::atomic<std::uint64_t>[]>(n)), n_(n) {}

    void claim(std::size_t phase, std::size_t worker, Run run) {
        const std::uint64_t stamp = (std::uint64_t(phase) << 32) | (worker + 1);
        for (std::size_t i = run.offset; i < run.end(); ++i) {
            const std::uint64_t prev = owner_[i].exchange(stamp);
            if (prev != 0 && prev != stamp && (prev >> 32) == phase)
                violations_.fetch_add(1, std::memory_order_relaxed);
        }
        claimed_.fetch_add(run.length, std::memory_order_relaxed);
    }

    std::size_t size() const noexcept { return n_; }
    std::size_t violations() const noexcept { return violations_.load(); }
    std::size_t claimed() const noexcept { return claimed_.load(); }

private:
    std::unique_ptr<std::atomic<std::uint64_t>[]> owner_;
    std::size_t n_;
    std::atomic<std::size_t> violations_{0};
    std::atomic<std::size_t> claimed_{0};
};

//! Snapshot handed to a probe once all workers have parked at a barrier.
//! Round 0 is the end of the local sort phase.
template <Sortable T>
struct RoundView {
    std::size_t round;
    std::span<const T> buffer; // where the current runs live
    const PartitionPlan& plan;
    const MergeSchedule& schedule;
};

template <Sortable T>
struct ShmProbe {
    std::function<void(const RoundView<T>&)> after_round;
    OwnershipTracker* tracker = nullptr;
};

/******************************************************************************/
// parallel sort driver

enum class LocalSort { merge_iterative, quick };

namespace detail {

template <Sortable T>
void sort_shm(std::span<T> data, std::size_t p, LocalSort local,
              const ShmProbe<T>* probe) {
    const PartitionPlan plan = partition_even(data.size(), p);
    const MergeSchedule sched = merge_schedule(p);
    const std::size_t num_rounds = sched.rounds.size();

    std::vector<T> aux_store(num_rounds > 0 ? data.size() : 0);
    const std::span<T> aux = aux_store;

    // odd rounds merge data -> aux, even rounds aux -> data
    auto buffer_after = [&](std::size_t r) -> std::span<const T> {
        return r % 2 == 1 ? std::span<const T>(aux) : std::span<const T>(data);
    };

    std::size_t phase = 0; // advanced only by the barrier completion
    auto on_phase_done = [&]() noexcept {
        if (probe && probe->after_round)
            probe->after_round(RoundView<T>{phase, buffer_after(phase), plan, sched});
        ++phase;
    };
    std::barrier sync(static_cast<std::ptrdiff_t>(p), on_phase_done);

    auto claim = [&](std::size_t ph, std::size_t w, Run run) {
        if (probe && probe->tracker) probe->tracker->claim(ph, w, run);
    };

    auto worker = [&](std::size_t w) {
        const Run own = plan.ranges[w];
        claim(0, w, own);
        auto mine = data.subspan(own.offset, own.length);
        if (local == LocalSort::quick)
            sort_quick<T>(mine);
        else
            sort_merge_iterative<T>(mine);
        sync.arrive_and_wait();

        for (std::size_t r = 1; r <= num_rounds; ++r) {
            const std::size_t stride = std::size_t{1} << r, half = stride / 2;
            if (w % stride == 0) {
                const Run left = plan.covering(w, w + half);
                const Run right = plan.covering(w + half, w + stride);
                const Run both = plan.covering(w, w + stride);
                std::span<const T> src = buffer_after(r - 1);
                std::span<T> dst = (r % 2 == 1) ? aux : data;
                claim(r, w, both);
                merge_runs<T>(src.subspan(left.offset, left.length),
                              src.subspan(right.offset, right.length),
                              dst.subspan(both.offset, both.length));
            }
            sync.arrive_and_wait();
        }

        if (num_rounds % 2 == 1) {
            claim(num_rounds + 1, w, own);
            std::copy(aux.begin() + own.offset, aux.begin() + own.end(),
                      data.begin() + own.offset);
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(p - 1);
    for (std::size_t w = 1; w < p; ++w) pool.emplace_back(worker, w);
    worker(0);
}

} // namespace detail

//! Each worker runs the bottom-up merge sort on its partition, then the tree
//! merge combines the runs. Stable.
template <Sortable T>
void sort_shm_merge(std::span<T> data, std::size_t workers,
                    const ShmProbe<T>* probe = nullptr) {
    detail::sort_shm<T>(data, workers, LocalSort::merge_iterative, probe);
}

//! Each worker quicksorts its partition, then the tree merge combines the
//! runs. Not stable.
template <Sortable T>
void sort_shm_hybrid(std::span<T> data, std::size_t workers,
                     const ShmProbe<T>* probe = nullptr) {
    detail::sort_shm<T>(data, workers, LocalSort::quick, probe);
}

} // namespace psort
