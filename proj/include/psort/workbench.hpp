#pragma once

// Benchmark workbench: reproducible key generation, the key-file format,
// output verification, the algorithm registry, timed trials and suites with
// speedups against sequential quicksort, and CSV output.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "psort/core_sorts.hpp"
#include "psort/dist_sort.hpp"
#include "psort/errors.hpp"
#include "psort/shm_parallel.hpp"
#include "psort/transport.hpp"

namespace psort {

/******************************************************************************/
// PRNG and key generation

struct PrngStep {
    std::uint64_t state;
    std::uint64_t output;
};

//! splitmix64, in wrapping 64-bit arithmetic.
constexpr PrngStep prng_next(std::uint64_t state) noexcept {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return {state, z ^ (z >> 31)};
}

struct GenSpec {
    std::size_t n = 0;
    unsigned digits = 3;
    std::uint64_t seed = 42;
    //! keys in [0, 10^D) instead of the fixed-width [10^(D-1), 10^D)
    bool full_range = false;

    std::pair<Key, Key> range() const {
        check_digits(digits);
        return {full_range ? 0 : pow10(digits - 1), pow10(digits)};
    }
};

inline std::vector<Key> gen_keys(const GenSpec& spec) {
    const auto [lo, hi] = spec.range();
    std::vector<Key> keys(spec.n);
    std::uint64_t state = spec.seed;
    for (Key& k : keys) {
        const PrngStep step = prng_next(state);
        state = step.state;
        k = lo + step.output % (hi - lo);
    }
    return keys;
}

/******************************************************************************/
// key files: raw little-endian u64, no header

inline void write_key_file(const std::string& path, std::span<const Key> keys) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    std::vector<unsigned char> buf(8 * keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i)
        for (int b = 0; b < 8; ++b) buf[8 * i + b] = (keys[i] >> (8 * b)) & 0xff;
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error("write to " + path + " failed");
}

inline std::vector<Key> read_key_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() % 8 != 0)
        throw FormatError(path + ": size " + std::to_string(buf.size()) +
                          " is not a multiple of 8 bytes");
    std::vector<Key> keys(buf.size() / 8);
    for (std::size_t i = 0; i < keys.size(); ++i) {
        Key k = 0;
        for (int b = 0; b < 8; ++b) k |= Key(buf[8 * i + b]) << (8 * b);
        keys[i] = k;
    }
    return keys;
}

/******************************************************************************/
// verification

enum class Stability { yes, no, not_applicable };

inline const char* to_string(Stability s) {
    switch (s) {
    case Stability::yes: return "yes";
    case Stability::no: return "no";
    default: return "n/a";
    }
}

struct VerifyReport {
    bool sorted = true;
    bool permutation = true;
    Stability stable = Stability::not_applicable;
    std::optional<std::size_t> first_violation;

    bool pass() const { return sorted && permutation && stable != Stability::no; }
};

namespace detail {

template <Sortable T>
std::vector<Key> keys_of(std::span<const T> items) {
    std::vector<Key> keys(items.size());
    std::transform(items.begin(), items.end(), keys.begin(),
                   [](const T& t) { return key_of(t); });
    return keys;
}

template <Sortable T>
Stability check_stable(std::span<const T> input, std::span<const T> output) {
    if constexpr (std::is_same_v<T, SortItem>) {
        std::unordered_map<std::uint64_t, std::size_t> position;
        position.reserve(input.size());
        for (std::size_t i = 0; i < input.size(); ++i) position.emplace(input[i].tag, i);
        for (std::size_t i = 1; i < output.size(); ++i) {
            if (output[i].key != output[i - 1].key) continue;
            auto a = position.find(output[i - 1].tag), b = position.find(output[i].tag);
            if (a == position.end() || b == position.end() || b->second < a->second)
                return Stability::no;
        }
        return Stability::yes;
    } else {
        return Stability::not_applicable;
    }
}

} // namespace detail

//! Checks that output is sorted and is a permutation of input. The
//! permutation check compares against an independently std::sort-ed copy.
//! Stability is evaluated from tags when requested and T carries them.
template <Sortable T>
VerifyReport verify(std::span<const T> input, std::span<const T> output,
                    bool check_stability = false) {
    VerifyReport rep;
    for (std::size_t i = 1; i < output.size(); ++i) {
        if (key_of(output[i]) < key_of(output[i - 1])) {
            rep.sorted = false;
            rep.first_violation = i;
            break;
        }
    }

    std::vector<Key> want = detail::keys_of(input), got = detail::keys_of(output);
    std::sort(want.begin(), want.end());
    std::sort(got.begin(), got.end());
    if (want != got) {
        rep.permutation = false;
        if (!rep.first_violation) {
            auto [a, b] = std::mismatch(want.begin(), want.end(), got.begin(), got.end());
            rep.first_violation = static_cast<std::size_t>(a - want.begin());
        }
    }

    if (check_stability) rep.stable = detail::check_stable(input, output);
    return rep;
}

template <Sortable T>
VerifyReport verify(const std::vector<T>& input, const std::vector<T>& output,
                    bool check_stability = false) {
    return verify<T>(std::span<const T>(input), std::span<const T>(output),
                     check_stability);
}

/******************************************************************************/
// algorithm registry

enum class Algo {
    merge_rec,
    merge_iter,
    quick,
    shm_merge,
    shm_hybrid,
    dist_hybrid,
    cluster_hybrid,
};

inline constexpr std::array<std::pair<Algo, std::string_view>, 7> kAlgoNames{{
    {Algo::merge_rec, "merge-rec"},
    {Algo::merge_iter, "merge-iter"},
    {Algo::quick, "quick"},
    {Algo::shm_merge, "shm-merge"},
    {Algo::shm_hybrid, "shm-hybrid"},
    {Algo::dist_hybrid, "dist-hybrid"},
    {Algo::cluster_hybrid, "cluster-hybrid"},
}};

inline std::string_view algo_name(Algo a) {
    for (auto [algo, name] : kAlgoNames)
        if (algo == a) return name;
    return "?";
}

inline Algo parse_algo(std::string_view name) {
    for (auto [algo, n] : kAlgoNames)
        if (n == name) return algo;
    throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

inline bool is_distributed(Algo a) {
    return a == Algo::dist_hybrid || a == Algo::cluster_hybrid;
}

enum class TransportKind { local, tcp };

inline TransportKind parse_transport(std::string_view name) {
    if (name == "local") return TransportKind::local;
    if (name == "tcp") return TransportKind::tcp;
    throw ConfigError("unknown transport '" + std::string(name) + "'");
}

inline constexpr std::uint16_t kDefaultPortBase = 45700;

//! threads: workers per node; nodes: process count for dist-hybrid, cluster
//! nodes for cluster-hybrid.
struct RunConfig {
    std::size_t threads = 1;
    std::size_t nodes = 1;
    unsigned digits = 3;
    TransportKind transport = TransportKind::local;
    std::uint16_t port_base = kDefaultPortBase;
};

//! Pins the knobs an algorithm ignores to 1 so equivalent cells coincide.
inline RunConfig normalize(Algo algo, RunConfig cfg) {
    switch (algo) {
    case Algo::merge_rec:
    case Algo::merge_iter:
    case Algo::quick:
        cfg.threads = cfg.nodes = 1;
        break;
    case Algo::shm_merge:
    case Algo::shm_hybrid:
        cfg.nodes = 1;
        break;
    case Algo::dist_hybrid:
        cfg.threads = 1;
        break;
    case Algo::cluster_hybrid:
        break;
    }
    return cfg;
}

inline void validate(Algo algo, const RunConfig& cfg) {
    check_digits(cfg.digits);
    switch (algo) {
    case Algo::shm_merge:
    case Algo::shm_hybrid:
        require_power_of_two(cfg.threads, "thread count");
        break;
    case Algo::dist_hybrid:
        require_power_of_two(cfg.nodes, "process count");
        break;
    case Algo::cluster_hybrid:
        ClusterConfig{cfg.nodes, cfg.threads, cfg.digits}.validate();
        break;
    default:
        break;
    }
}

inline TransportGroup make_group(TransportKind kind, std::size_t size,
                                 std::uint16_t port_base) {
    return kind == TransportKind::tcp ? make_tcp_group(port_base, size)
                                      : make_local_group(size);
}

//! Data-message counts observed during one distributed sort.
struct TrafficSummary {
    std::size_t ranks = 0;
    std::vector<std::size_t> to_master;   // indexed by source rank
    std::vector<std::size_t> from_master; // indexed by destination rank
    std::size_t between_nodes = 0;        // messages not touching rank 0
    std::size_t total = 0;

    static TrafficSummary from(const TrafficProbe& probe) {
        TrafficSummary t;
        t.ranks = probe.size();
        t.to_master.assign(t.ranks, 0);
        t.from_master.assign(t.ranks, 0);
        for (Rank s = 0; s < t.ranks; ++s)
            for (Rank d = 0; d < t.ranks; ++d) {
                const std::size_t c = probe.data_messages(s, d);
                t.total += c;
                if (d == 0) t.to_master[s] += c;
                else if (s == 0) t.from_master[d] += c;
                else t.between_nodes += c;
            }
        return t;
    }
};

struct SortRun {
    std::vector<Key> keys;
    double elapsed_ms = 0;
    std::optional<TrafficSummary> traffic;
};

//! Sorts a copy of input with the given algorithm. The clock covers the sort
//! only: copying the input and building a transport group are excluded, while
//! scatter and gather of the distributed sorts are included.
inline SortRun run_algorithm(Algo algo, std::span<const Key> input, RunConfig cfg) {
    cfg = normalize(algo, cfg);
    validate(algo, cfg);

    using Clock = std::chrono::steady_clock;
    SortRun run;
    auto elapsed_since = [](Clock::time_point t0) {
        const double ms =
            std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        return std::max(ms, 1e-6);
    };

    if (is_distributed(algo)) {
        TransportGroup group = make_group(cfg.transport, cfg.nodes, cfg.port_base);
        const auto t0 = Clock::now();
        if (algo == Algo::dist_hybrid)
            run.keys = sort_dist_hybrid(input, group);
        else
            run.keys = sort_cluster_hybrid(input, {cfg.nodes, cfg.threads, cfg.digits}, group);
        run.elapsed_ms = elapsed_since(t0);
        run.traffic = TrafficSummary::from(group.probe());
        return run;
    }

    run.keys.assign(input.begin(), input.end());
    std::span<Key> data = run.keys;
    const auto t0 = Clock::now();
    switch (algo) {
    case Algo::merge_rec: sort_merge_recursive<Key>(data); break;
    case Algo::merge_iter: sort_merge_iterative<Key>(data); break;
    case Algo::quick: sort_quick<Key>(data); break;
    case Algo::shm_merge: sort_shm_merge<Key>(data, cfg.threads); break;
    case Algo::shm_hybrid: sort_shm_hybrid<Key>(data, cfg.threads); break;
    default: break;
    }
    run.elapsed_ms = elapsed_since(t0);
    return run;
}

/******************************************************************************/
// trials and suites

struct BenchRecord {
    std::string algo;
    std::size_t n = 0;
    unsigned digits = 3;
    std::size_t threads = 1;
    std::size_t nodes = 1;
    std::uint64_t seed = 0;
    int trial = 0; // -1 marks the per-cell median row
    double elapsed_ms = 0;
    std::optional<double> speedup;
};

//! One timed, verified sort. Throws VerificationFailed if the output is not a
//! sorted permutation of the input.
inline BenchRecord run_trial(Algo algo, std::span<const Key> keys, const RunConfig& cfg,
                             std::uint64_t seed = 0, int trial = 0,
                             std::optional<double> baseline_ms = std::nullopt) {
    const RunConfig norm = normalize(algo, cfg);
    SortRun run = run_algorithm(algo, keys, norm);
    const VerifyReport rep = verify<Key>(keys, run.keys);
    if (!rep.pass())
        throw VerificationFailed(
            std::string(algo_name(algo)) + " n=" + std::to_string(keys.size()) +
            " threads=" + std::to_string(norm.threads) + " nodes=" +
            std::to_string(norm.nodes) + " produced a bad result" +
            (rep.first_violation ? " at index " + std::to_string(*rep.first_violation) : ""));

    BenchRecord rec{std::string(algo_name(algo)), keys.size(), norm.digits, norm.threads,
                    norm.nodes, seed, trial, run.elapsed_ms, std::nullopt};
    if (baseline_ms) rec.speedup = *baseline_ms / run.elapsed_ms;
    return rec;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
}

struct SuiteConfig {
    std::vector<std::size_t> sizes;
    std::vector<Algo> algos;
    std::vector<std::size_t> threads{1};
    std::vector<std::size_t> nodes{1};
    unsigned digits = 3;
    std::uint64_t seed = 42;
    std::size_t trials = 3;
    bool full_range = false;
    TransportKind transport = TransportKind::local;
    std::uint16_t port_base = kDefaultPortBase;
};

struct SuiteCell {
    Algo algo;
    RunConfig cfg;
};

//! Expands the grid into distinct normalized cells, validating every one
//! before anything runs.
inline std::vector<SuiteCell> expand_cells(const SuiteConfig& suite) {
    if (suite.trials < 1) throw ConfigError("trials must be >= 1");
    check_digits(suite.digits);
    std::vector<SuiteCell> cells;
    std::set<std::tuple<int, std::size_t, std::size_t>> seen;
    for (Algo algo : suite.algos)
        for (std::size_t t : suite.threads)
            for (std::size_t m : suite.nodes) {
                RunConfig cfg{t, m, suite.digits, suite.transport, suite.port_base};
                cfg = normalize(algo, cfg);
                validate(algo, cfg);
                if (seen.emplace(int(algo), cfg.threads, cfg.nodes).second)
                    cells.push_back({algo, cfg});
            }
    return cells;
}

//! For every size: generate keys, time the sequential quicksort baseline
//! (median of `trials` runs), then run each cell `trials` times followed by a
//! median row (trial = -1). Speedup = baseline / elapsed.
inline std::vector<BenchRecord> run_suite(const SuiteConfig& suite) {
    const std::vector<SuiteCell> cells = expand_cells(suite);
    std::vector<BenchRecord> records;

    for (std::size_t n : suite.sizes) {
        const std::vector<Key> keys =
            gen_keys({n, suite.digits, suite.seed, suite.full_range});

        std::vector<double> base_times;
        for (std::size_t t = 0; t < suite.trials; ++t)
            base_times.push_back(
                run_trial(Algo::quick, keys, {1, 1, suite.digits}, suite.seed).elapsed_ms);
        const double baseline = median(base_times);

        for (const SuiteCell& cell : cells) {
            std::vector<double> times;
            BenchRecord last;
            for (std::size_t t = 0; t < suite.trials; ++t) {
                last = run_trial(cell.algo, keys, cell.cfg, suite.seed, static_cast<int>(t),
                                 baseline);
                times.push_back(last.elapsed_ms);
                records.push_back(last);
            }
            BenchRecord med = last;
            med.trial = -1;
            med.elapsed_ms = median(times);
            med.speedup = baseline / med.elapsed_ms;
            records.push_back(med);
        }
    }
    return records;
}

/******************************************************************************/
// CSV

inline constexpr std::string_view kCsvHeader =
    "algo,n,digits,threads,nodes,seed,trial,elapsed_ms,speedup";

inline std::string csv_row(const BenchRecord& r) {
    char timing[64];
    std::snprintf(timing, sizeof(timing), "%.6f", r.elapsed_ms);
    std::string row = r.algo + ',' + std::to_string(r.n) + ',' + std::to_string(r.digits) +
                      ',' + std::to_string(r.threads) + ',' + std::to_string(r.nodes) + ',' +
                      std::to_string(r.seed) + ',' + std::to_string(r.trial) + ',' + timing +
                      ',';
    if (r.speedup) {
        char sp[64];
        std::snprintf(sp, sizeof(sp), "%.6f", *r.speedup);
        row += sp;
    }
    return row;
}

inline void write_csv(std::ostream& out, std::span<const BenchRecord> records) {
    out << kCsvHeader << '\n';
    for (const BenchRecord& r : records) out << csv_row(r) << '\n';
}

inline void write_csv(const std::string& path, std::span<const BenchRecord> records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    write_csv(out, records);
    if (!out) throw Error("write to " + path + " failed");
}

/******************************************************************************/
// curve shape helpers

//! Number of adjacent decreases in a sequence.
inline std::size_t count_inversions(std::span<const double> curve) {
    std::size_t inv = 0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        if (curve[i] < curve[i - 1]) ++inv;
    return inv;
}

} // namespace psort
