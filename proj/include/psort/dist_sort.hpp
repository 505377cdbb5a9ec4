#pragma once

// Distributed sorts over a TransportGroup.
//
// sort_dist_hybrid: rank 0 scatters even partitions, every rank quicksorts
// its share, and runs are combined by a message-passing tree merge.
//
// sort_cluster_hybrid: rank 0 splits keys into ten buckets by most
// significant decimal digit, hands contiguous digit groups to the nodes, each
// node sorts its group with the shared-memory hybrid sort, and the master
// places every node's result at its prefix-sum offset. Digit groups cover
// disjoint ascending key ranges, so no merge is needed after the gather.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <iterator>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "psort/core_sorts.hpp"
#include "psort/errors.hpp"
#include "psort/shm_parallel.hpp"
#include "psort/transport.hpp"

namespace psort {

inline constexpr unsigned kMaxDigits = 19; // 10^19 is the largest power below 2^64
inline constexpr std::size_t kMaxNodes = 10;

inline Key pow10(unsigned exp) {
    Key v = 1;
    for (unsigned i = 0; i < exp; ++i) v *= 10;
    return v;
}

inline void check_digits(unsigned digits) {
    if (digits < 1 || digits > kMaxDigits)
        throw ConfigError("digit width must be in [1, " + std::to_string(kMaxDigits) +
                          "], got " + std::to_string(digits));
}

/******************************************************************************/
// MSD bucketing

//! floor(key / 10^(digits-1)); keys shorter than `digits` count as
//! zero-padded and land in bucket 0.
inline unsigned msd_bucket_index(Key key, unsigned digits, std::size_t index = 0) {
    check_digits(digits);
    if (key >= pow10(digits)) throw KeyOutOfRange(index, key, digits);
    return static_cast<unsigned>(key / pow10(digits - 1));
}

using Buckets = std::array<std::vector<Key>, 10>;

//! One stable counting pass. Throws KeyOutOfRange for the first key that is
//! not below 10^digits.
inline Buckets msd_partition(std::span<const Key> keys, unsigned digits) {
    check_digits(digits);
    const Key limit = pow10(digits), divisor = pow10(digits - 1);

    std::array<std::size_t, 10> counts{};
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (keys[i] >= limit) throw KeyOutOfRange(i, keys[i], digits);
        ++counts[keys[i] / divisor];
    }
    Buckets buckets;
    for (std::size_t d = 0; d < 10; ++d) buckets[d].reserve(counts[d]);
    for (Key k : keys) buckets[k / divisor].push_back(k);
    return buckets;
}

inline std::array<std::size_t, 10> bucket_sizes(const Buckets& buckets) {
    std::array<std::size_t, 10> sizes{};
    for (std::size_t d = 0; d < 10; ++d) sizes[d] = buckets[d].size();
    return sizes;
}

/******************************************************************************/
// bucket to node assignment

//! Inclusive digit interval [first, last].
struct DigitRange {
    unsigned first = 0;
    unsigned last = 0;
    friend bool operator==(const DigitRange&, const DigitRange&) = default;
};

struct NodeAssignment {
    std::vector<DigitRange> groups; // group i belongs to rank i

    std::size_t node_count() const noexcept { return groups.size(); }

    std::vector<std::size_t> group_totals(std::span<const std::size_t, 10> sizes) const {
        std::vector<std::size_t> totals;
        for (const DigitRange& g : groups)
            totals.push_back(std::accumulate(sizes.begin() + g.first,
                                             sizes.begin() + g.last + 1, std::size_t{0}));
        return totals;
    }
};

namespace detail {

// Walks every way to place `remaining` cut points after position `from`,
// in lexicographic order of the cut sequence.
inline void search_cuts(std::span<const std::size_t, 10> sizes, std::size_t remaining,
                        unsigned from, std::vector<unsigned>& cuts,
                        std::size_t& best_load, std::vector<unsigned>& best) {
    if (remaining == 0) {
        std::size_t load = 0, acc = 0;
        std::size_t next = 0;
        for (unsigned d = 0; d < 10; ++d) {
            acc += sizes[d];
            if (next < cuts.size() && cuts[next] == d) {
                load = std::max(load, acc);
                acc = 0;
                ++next;
            }
        }
        load = std::max(load, acc);
        if (load < best_load) {
            best_load = load;
            best = cuts;
        }
        return;
    }
    // a cut at d ends a group with digit d; the last digit never takes a cut
    for (unsigned d = from; d + remaining <= 9; ++d) {
        cuts.push_back(d);
        search_cuts(sizes, remaining - 1, d + 1, cuts, best_load, best);
        cuts.pop_back();
    }
}

} // namespace detail

//! Splits digits 0..9 into `nodes` contiguous groups minimizing the largest
//! group total. Exhaustive over all C(9, nodes-1) splits; ties go to the
//! lexicographically earliest cut sequence.
inline NodeAssignment assign_buckets(std::span<const std::size_t, 10> sizes,
                                     std::size_t nodes) {
    if (nodes < 1 || nodes > kMaxNodes)
        throw ConfigError("node count must be in [1, 10], got " + std::to_string(nodes));

    std::vector<unsigned> cuts, best;
    std::size_t best_load = std::numeric_limits<std::size_t>::max();
    detail::search_cuts(sizes, nodes - 1, 0, cuts, best_load, best);

    NodeAssignment plan;
    unsigned first = 0;
    for (unsigned cut : best) {
        plan.groups.push_back({first, cut});
        first = cut + 1;
    }
    plan.groups.push_back({first, 9});
    return plan;
}

/******************************************************************************/
// rank driver

namespace detail {

// Runs rank_main(endpoint) for every rank, rank 0 on the calling thread. A
// failing rank closes its endpoint so blocked peers unwind with PeerClosed;
// the first failure by rank order is rethrown.
template <typename RankMain>
void run_ranks(TransportGroup& group, RankMain rank_main) {
    std::vector<std::exception_ptr> errors(group.size());
    auto guarded = [&](Rank r) {
        try {
            rank_main(group.endpoint(r));
        } catch (...) {
            errors[r] = std::current_exception();
            group.endpoint(r).close();
        }
    };
    {
        std::vector<std::jthread> ranks;
        for (Rank r = 1; r < group.size(); ++r) ranks.emplace_back(guarded, r);
        guarded(0);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace detail

/******************************************************************************/
// distributed hybrid quicksort + tree merge

//! Program run by one rank. Rank 0 passes the full input and gets the sorted
//! result back; other ranks pass nothing and return an empty vector.
inline std::vector<Key> dist_hybrid_rank(Endpoint& ep, std::span<const Key> input = {}) {
    const std::size_t p = ep.group_size();
    const Rank me = ep.rank();
    require_power_of_two(p, "process count");

    std::vector<Key> own;
    if (me == 0) {
        const PartitionPlan plan = partition_even(input.size(), p);
        for (Rank r = 1; r < p; ++r) {
            const Run part = plan.ranges[r];
            auto slice = input.subspan(part.offset, part.length);
            ep.send(r, Message{MessageKind::keys, {slice.begin(), slice.end()}});
        }
        auto first = input.subspan(0, plan.ranges[0].length);
        own.assign(first.begin(), first.end());
    } else {
        own = ep.recv(0).payload;
    }

    sort_quick<Key>(own);

    for (std::size_t stride = 2; stride <= p; stride *= 2) {
        const std::size_t half = stride / 2;
        if (me % stride == 0) {
            const Message theirs = ep.recv(me + half);
            own = merge_runs<Key>(own, theirs.payload);
        } else if (me % stride == half) {
            ep.send(me - half, Message{MessageKind::keys, std::move(own)});
            return {};
        }
    }
    return me == 0 ? own : std::vector<Key>{};
}

//! Runs every rank of `group` in its own thread; returns rank 0's result.
inline std::vector<Key> sort_dist_hybrid(std::span<const Key> keys, TransportGroup& group) {
    require_power_of_two(group.size(), "process count");
    std::vector<Key> result;
    detail::run_ranks(group, [&](Endpoint& ep) {
        if (ep.rank() == 0)
            result = dist_hybrid_rank(ep, keys);
        else
            dist_hybrid_rank(ep);
    });
    return result;
}

/******************************************************************************/
// cluster model: one MSD step across nodes, shared hybrid sort within

struct ClusterConfig {
    std::size_t nodes = 1;
    std::size_t threads = 1;
    unsigned digits = 3;

    void validate() const {
        if (nodes < 1 || nodes > kMaxNodes)
            throw ConfigError("node count must be in [1, 10], got " + std::to_string(nodes));
        require_power_of_two(threads, "threads per node");
        check_digits(digits);
    }
};

//! Node-side program for ranks >= 1: receive a digit group, sort it with
//! `threads` workers, send it back.
inline void cluster_node_rank(Endpoint& ep, std::size_t threads) {
    std::vector<Key> keys = ep.recv(0).payload;
    sort_shm_hybrid<Key>(keys, threads);
    ep.send(0, Message{MessageKind::keys, std::move(keys)});
}

//! Master-side program for rank 0.
inline std::vector<Key> cluster_master_rank(Endpoint& ep, std::span<const Key> keys,
                                            const ClusterConfig& cfg) {
    const Buckets buckets = msd_partition(keys, cfg.digits);
    const auto sizes = bucket_sizes(buckets);
    const NodeAssignment plan = assign_buckets(sizes, cfg.nodes);
    const std::vector<std::size_t> totals = plan.group_totals(sizes);

    std::vector<std::size_t> offsets(totals.size() + 1, 0);
    std::partial_sum(totals.begin(), totals.end(), offsets.begin() + 1);

    auto gather_group = [&](const DigitRange& g, auto out) {
        for (unsigned d = g.first; d <= g.last; ++d)
            out = std::copy(buckets[d].begin(), buckets[d].end(), out);
    };

    for (Rank r = 1; r < plan.node_count(); ++r) {
        Message msg{MessageKind::keys, {}};
        msg.payload.reserve(totals[r]);
        gather_group(plan.groups[r], std::back_inserter(msg.payload));
        ep.send(r, msg);
    }

    std::vector<Key> result(keys.size());
    gather_group(plan.groups[0], result.begin());
    sort_shm_hybrid<Key>(std::span<Key>(result).first(totals[0]), cfg.threads);

    for (Rank r = 1; r < plan.node_count(); ++r) {
        const Message sorted = ep.recv(r);
        if (sorted.payload.size() != totals[r])
            throw TransportError("node " + std::to_string(r) + " returned " +
                                 std::to_string(sorted.payload.size()) + " keys, expected " +
                                 std::to_string(totals[r]));
        std::copy(sorted.payload.begin(), sorted.payload.end(),
                  result.begin() + static_cast<std::ptrdiff_t>(offsets[r]));
    }
    return result;
}

//! `group` must have exactly cfg.nodes ranks; rank 0 is the master and also
//! sorts the first digit group.
inline std::vector<Key> sort_cluster_hybrid(std::span<const Key> keys,
                                            const ClusterConfig& cfg,
                                            TransportGroup& group) {
    cfg.validate();
    if (group.size() != cfg.nodes)
        throw ConfigError("transport group has " + std::to_string(group.size()) +
                          " ranks but the cluster has " + std::to_string(cfg.nodes) +
                          " nodes");
    std::vector<Key> result;
    detail::run_ranks(group, [&](Endpoint& ep) {
        if (ep.rank() == 0)
            result = cluster_master_rank(ep, keys, cfg);
        else
            cluster_node_rank(ep, cfg.threads);
    });
    return result;
}

} // namespace psort
