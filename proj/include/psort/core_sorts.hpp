#pragma once

// Sequential kernels: recursive merge sort, bottom-up merge sort, quicksort,
// and the stable two-run merge reused by every parallel variant.

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

namespace psort {

using Key = std::uint64_t;

//! A key with an order tag. Ordering consults the key only; the tag exists so
//! stability can be observed from the outside.
struct SortItem {
    Key key;
    std::uint64_t tag;

    friend bool operator==(const SortItem&, const SortItem&) = default;
};

constexpr Key key_of(Key k) noexcept { return k; }
constexpr Key key_of(const SortItem& item) noexcept { return item.key; }

template <typename T>
concept Sortable = requires(const T& t) {
    { key_of(t) } -> std::same_as<Key>;
} && std::is_nothrow_move_assignable_v<T>;

//! Half-open window [offset, offset + length) of a sequence.
struct Run {
    std::size_t offset = 0;
    std::size_t length = 0;

    std::size_t end() const noexcept { return offset + length; }
    friend bool operator==(const Run&, const Run&) = default;
};

/******************************************************************************/
// merge

//! Merge two sorted runs into out, which must hold left.size() + right.size()
//! elements. On equal keys every left element precedes every right element.
template <Sortable T>
void merge_runs(std::span<const T> left, std::span<const T> right,
                std::span<T> out) {
    auto l = left.begin(), le = left.end();
    auto r = right.begin(), re = right.end();
    auto o = out.begin();
    while (l != le && r != re) {
        if (key_of(*r) < key_of(*l))
            *o++ = *r++;
        else
            *o++ = *l++;
    }
    o = std::copy(l, le, o);
    std::copy(r, re, o);
}

template <Sortable T>
std::vector<T> merge_runs(std::span<const T> left, std::span<const T> right) {
    std::vector<T> out(left.size() + right.size());
    merge_runs<T>(left, right, out);
    return out;
}

/******************************************************************************/
// recursive merge sort

namespace detail {

template <Sortable T>
inline void compare_swap(T& a, T& b) {
    if (key_of(b) < key_of(a)) std::swap(a, b);
}

// Sorts data[lo, hi) using aux[lo, hi) as scratch; result lands in data.
template <Sortable T>
void merge_sort_rec(std::span<T> data, std::span<T> aux, std::size_t lo,
                    std::size_t hi) {
    const std::size_t n = hi - lo;
    if (n <= 2) {
        if (n == 2) compare_swap(data[lo], data[lo + 1]);
        return;
    }
    const std::size_t mid = lo + n / 2;
    merge_sort_rec(data, aux, lo, mid);
    merge_sort_rec(data, aux, mid, hi);
    merge_runs<T>(data.subspan(lo, mid - lo), data.subspan(mid, hi - mid),
                  aux.subspan(lo, n));
    std::copy(aux.begin() + lo, aux.begin() + hi, data.begin() + lo);
}

} // namespace detail

//! Top-down merge sort. Splits into halves [lo, mid) and [mid, hi) until a
//! range holds two elements or fewer. Stable.
template <Sortable T>
void sort_merge_recursive(std::span<T> data) {
    if (data.size() < 2) return;
    std::vector<T> aux(data.size());
    detail::merge_sort_rec<T>(data, aux, 0, data.size());
}

/******************************************************************************/
// bottom-up merge sort

namespace detail {

// One pass at the given width: merges adjacent run pairs src -> dst, copying a
// trailing unpaired run through unchanged.
template <Sortable T>
void merge_pass(std::span<const T> src, std::span<T> dst, std::size_t width) {
    const std::size_t n = src.size();
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
        const std::size_t mid = std::min(lo + width, n);
        const std::size_t hi = std::min(lo + 2 * width, n);
        merge_runs<T>(src.subspan(lo, mid - lo), src.subspan(mid, hi - mid),
                      dst.subspan(lo, hi - lo));
    }
}

} // namespace detail

//! Non-recursive merge sort: compare-swap adjacent pairs, then merge runs of
//! width 2, 4, 8, ... ping-ponging between data and one scratch buffer.
template <Sortable T>
void sort_merge_iterative(std::span<T> data) {
    const std::size_t n = data.size();
    if (n < 2) return;

    for (std::size_t i = 0; i + 1 < n; i += 2)
        detail::compare_swap(data[i], data[i + 1]);

    std::vector<T> aux(n);
    std::span<T> src = data, dst = aux;
    for (std::size_t width = 2; width < n; width *= 2) {
        detail::merge_pass<T>(src, dst, width);
        std::swap(src, dst);
    }
    if (src.data() != data.data())
        std::copy(src.begin(), src.end(), data.begin());
}

/******************************************************************************/
// quicksort

struct QuickStats {
    //! deepest recursive call observed; the top-level call is depth 1
    std::size_t max_depth = 0;
};

namespace detail {

// Orders the first, middle and last elements so the median sits in the
// middle, then runs a Hoare partition around it. Returns the split point s
// with data[lo, s) <= pivot <= data[s, hi), both sides non-empty.
template <Sortable T>
std::size_t partition_median3(std::span<T> data, std::size_t lo,
                              std::size_t hi) {
    const std::size_t mid = lo + (hi - 1 - lo) / 2;
    compare_swap(data[lo], data[mid]);
    compare_swap(data[mid], data[hi - 1]);
    compare_swap(data[lo], data[mid]);
    const Key pivot = key_of(data[mid]);

    std::size_t i = lo, j = hi - 1;
    for (;;) {
        while (key_of(data[i]) < pivot) ++i;
        while (pivot < key_of(data[j])) --j;
        if (i >= j) return j + 1;
        std::swap(data[i], data[j]);
        ++i;
        --j;
    }
}

template <Sortable T>
void quick_sort(std::span<T> data, std::size_t lo, std::size_t hi,
                std::size_t depth, QuickStats* stats) {
    if (stats) stats->max_depth = std::max(stats->max_depth, depth);
    // recurse on the smaller side, loop on the larger one
    while (hi - lo > 2) {
        const std::size_t split = partition_median3(data, lo, hi);
        if (split - lo < hi - split) {
            quick_sort(data, lo, split, depth + 1, stats);
            lo = split;
        } else {
            quick_sort(data, split, hi, depth + 1, stats);
            hi = split;
        }
    }
    if (hi - lo == 2) compare_swap(data[lo], data[lo + 1]);
}

} // namespace detail

//! In-place quicksort with median-of-three pivots. Not stable. Recursion
//! depth stays within log2(n) + 1 because only the smaller side recurses.
template <Sortable T>
void sort_quick(std::span<T> data, QuickStats* stats = nullptr) {
    if (data.size() < 2) {
        if (stats) stats->max_depth = std::max<std::size_t>(stats->max_depth, 1);
        return;
    }
    detail::quick_sort<T>(data, 0, data.size(), 1, stats);
}

/******************************************************************************/
// value-returning convenience forms

template <Sortable T>
std::vector<T> sorted_merge_recursive(std::vector<T> items) {
    sort_merge_recursive<T>(items);
    return items;
}

template <Sortable T>
std::vector<T> sorted_merge_iterative(std::vector<T> items) {
    sort_merge_iterative<T>(items);
    return items;
}

template <Sortable T>
std::vector<T> sorted_quick(std::vector<T> items) {
    sort_quick<T>(items);
    return items;
}

} // namespace psort
