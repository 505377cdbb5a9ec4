#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "oracle.hpp"
#include "psort/core_sorts.hpp"
#include "psort/workbench.hpp"

using namespace psort;

namespace {

std::vector<SortItem> items(std::initializer_list<std::pair<Key, std::uint64_t>> list) {
    std::vector<SortItem> v;
    for (auto [k, t] : list) v.push_back({k, t});
    return v;
}

bool is_stable(const std::vector<SortItem>& out) {
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i].key == out[i - 1].key && out[i].tag < out[i - 1].tag) return false;
    return true;
}

} // namespace

TEST(MergeRuns, InterleavesSortedRuns) {
    const std::vector<Key> l{1, 3, 5}, r{2, 4, 6};
    EXPECT_EQ(merge_runs<Key>(l, r), (std::vector<Key>{1, 2, 3, 4, 5, 6}));
}

TEST(MergeRuns, EmptyLeft) {
    const std::vector<Key> l, r{7, 9};
    EXPECT_EQ(merge_runs<Key>(l, r), (std::vector<Key>{7, 9}));
    EXPECT_EQ(merge_runs<Key>(r, l), (std::vector<Key>{7, 9}));
    EXPECT_TRUE(merge_runs<Key>(l, l).empty());
}

TEST(MergeRuns, LeftWinsTies) {
    // tags a=0, b=1, c=2
    const auto l = items({{2, 0}, {2, 1}}), r = items({{2, 2}});
    EXPECT_EQ(merge_runs<SortItem>(l, r), items({{2, 0}, {2, 1}, {2, 2}}));
    // even when the right run carries smaller tags
    const auto l2 = items({{1, 9}, {2, 8}}), r2 = items({{1, 0}, {2, 1}});
    EXPECT_EQ(merge_runs<SortItem>(l2, r2), items({{1, 9}, {1, 0}, {2, 8}, {2, 1}}));
}

TEST(MergeRecursive, SmallCases) {
    EXPECT_TRUE(sorted_merge_recursive(std::vector<Key>{}).empty());
    EXPECT_EQ(sorted_merge_recursive(std::vector<Key>{3, 1, 2}), (std::vector<Key>{1, 2, 3}));
    EXPECT_EQ(sorted_merge_recursive(std::vector<Key>{2, 1}), (std::vector<Key>{1, 2}));
    EXPECT_EQ(sorted_merge_recursive(std::vector<Key>{4}), (std::vector<Key>{4}));
}

TEST(MergeRecursive, MatchesOracleOnWorkbenchSeed7) {
    const auto keys = gen_keys({256, 3, 7, false});
    EXPECT_EQ(sorted_merge_recursive(keys), oracle::insertion_sort(keys));
}

TEST(MergeIterative, SmallCases) {
    EXPECT_EQ(sorted_merge_iterative(std::vector<Key>{5, 4, 3, 2, 1}),
              (std::vector<Key>{1, 2, 3, 4, 5}));
    // [2,2,1] tagged a,b,c
    EXPECT_EQ(sorted_merge_iterative(items({{2, 0}, {2, 1}, {1, 2}})),
              items({{1, 2}, {2, 0}, {2, 1}}));
}

TEST(MergeIterative, TrailingPartialRuns) {
    for (std::size_t n = 0; n <= 70; ++n) {
        const auto keys = oracle::random_keys(n, 20, n);
        EXPECT_EQ(sorted_merge_iterative(keys), oracle::insertion_sort(keys)) << "n=" << n;
    }
}

TEST(MergeIterative, AgreesWithRecursiveOnSeed11) {
    const auto keys = gen_keys({1000, 3, 11, false});
    const auto a = sorted_merge_iterative(oracle::tagged(keys));
    const auto b = sorted_merge_recursive(oracle::tagged(keys));
    EXPECT_EQ(a, b); // tags included, so the full item sequence matches
    EXPECT_EQ(oracle::keys_only(a), oracle::insertion_sort(keys));
}

TEST(Quick, SmallCases) {
    EXPECT_EQ(sorted_quick(std::vector<Key>{1}), (std::vector<Key>{1}));
    EXPECT_TRUE(sorted_quick(std::vector<Key>{}).empty());
    EXPECT_EQ(sorted_quick(std::vector<Key>{2, 1}), (std::vector<Key>{1, 2}));
    EXPECT_EQ(sorted_quick(std::vector<Key>{3, 3, 3}), (std::vector<Key>{3, 3, 3}));
}

TEST(Quick, MatchesOracleOnWorkbenchSeed3) {
    const auto keys = gen_keys({512, 3, 3, false});
    EXPECT_EQ(sorted_quick(keys), oracle::insertion_sort(keys));
}

TEST(Quick, SortedInputStaysShallow) {
    std::vector<Key> v(100000);
    std::iota(v.begin(), v.end(), 0);
    const auto want = v;
    QuickStats stats;
    sort_quick<Key>(v, &stats);
    EXPECT_EQ(v, want);
    EXPECT_LE(stats.max_depth, 2 * std::log2(100000.0) + 2);
}

TEST(Quick, AdversarialInputsBoundedDepth) {
    const std::size_t n = 50000;
    std::vector<std::vector<Key>> inputs;
    std::vector<Key> desc(n), organ(n), equal(n, 5), sawtooth(n);
    for (std::size_t i = 0; i < n; ++i) {
        desc[i] = n - i;
        organ[i] = i < n / 2 ? i : n - i;
        sawtooth[i] = i % 17;
    }
    for (auto* in : {&desc, &organ, &equal, &sawtooth}) {
        auto v = *in;
        QuickStats stats;
        sort_quick<Key>(v, &stats);
        auto want = *in;
        std::stable_sort(want.begin(), want.end());
        EXPECT_EQ(v, want);
        // smaller side recursion bounds depth by log2(n) + 1 regardless of pivots
        EXPECT_LE(stats.max_depth, std::log2(double(n)) + 2);
    }
}

TEST(Quick, DepthOnRandomInputs) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto v = oracle::random_keys(20000, 1000000, seed);
        QuickStats stats;
        sort_quick<Key>(v, &stats);
        EXPECT_TRUE(std::is_sorted(v.begin(), v.end()));
        EXPECT_LE(stats.max_depth, 2 * std::log2(20000.0) + 2);
    }
}

// Property: 1000 random instances, n in [0, 512], every kernel agrees with
// the insertion-sort oracle; the merge sorts also keep tag order.
TEST(CoreSortsProperty, AgreeWithOracleAndStable) {
    oracle::XorShift rng{12345};
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = rng.below(513);
        const std::uint64_t bound = rep % 3 == 0 ? 8 : 1000;
        const auto keys = oracle::random_keys(n, bound, rep + 1);
        const auto items = oracle::tagged(keys);
        const auto want = oracle::insertion_sort(items);

        const auto rec = sorted_merge_recursive(items);
        const auto iter = sorted_merge_iterative(items);
        const auto quick = sorted_quick(items);
        ASSERT_EQ(rec, want) << "rep " << rep;
        ASSERT_EQ(iter, want) << "rep " << rep;
        ASSERT_EQ(oracle::keys_only(quick), oracle::keys_only(want)) << "rep " << rep;

        auto qtags = quick, wtags = want;
        auto by_tag = [](const SortItem& a, const SortItem& b) { return a.tag < b.tag; };
        std::sort(qtags.begin(), qtags.end(), by_tag);
        std::sort(wtags.begin(), wtags.end(), by_tag);
        ASSERT_EQ(qtags, wtags) << "quick output is not a permutation";
    }
}

TEST(CoreSortsProperty, StableWithManyDuplicates) {
    // 10 distinct keys, 150 copies each
    auto keys = oracle::random_keys(1500, 10, 77);
    const auto items = oracle::tagged(keys);
    EXPECT_TRUE(is_stable(sorted_merge_recursive(items)));
    EXPECT_TRUE(is_stable(sorted_merge_iterative(items)));
}
