// psort: generate key files, sort them with any registered algorithm, verify
// results, and run speedup benchmarks.
//
// Exit status: 0 success, 1 runtime or data failure, 2 usage or config error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "psort/psort.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Options {
    std::string algo = "quick";
    std::size_t n = 0;
    unsigned digits = 3;
    std::uint64_t seed = 42;
    std::size_t threads = 1;
    std::size_t nodes = 1;
    std::size_t trials = 3;
    std::string in, out, against, csv;
    std::string transport = "local";
    std::uint16_t port_base = psort::kDefaultPortBase;
    bool full_range = false;

    std::vector<std::size_t> sizes;
    std::vector<std::string> algos;
    std::vector<std::size_t> thread_list{1};
    std::vector<std::size_t> node_list{1};
};

int cmd_gen(const Options& o) {
    psort::GenSpec spec{o.n, o.digits, o.seed, o.full_range};
    const auto [lo, hi] = spec.range();
    const auto keys = psort::gen_keys(spec);
    psort::write_key_file(o.out, keys);
    std::printf("wrote %zu keys in [%llu, %llu) to %s\n", keys.size(),
                static_cast<unsigned long long>(lo), static_cast<unsigned long long>(hi),
                o.out.c_str());
    return 0;
}

psort::RunConfig run_config(const Options& o) {
    return {o.threads, o.nodes, o.digits, psort::parse_transport(o.transport), o.port_base};
}

int cmd_sort(const Options& o) {
    const psort::Algo algo = psort::parse_algo(o.algo);
    const psort::RunConfig cfg = psort::normalize(algo, run_config(o));
    psort::validate(algo, cfg);

    const auto keys = psort::read_key_file(o.in);
    const psort::SortRun run = psort::run_algorithm(algo, keys, cfg);
    psort::write_key_file(o.out, run.keys);

    std::printf("%s: sorted %zu keys in %.3f ms (threads=%zu nodes=%zu)\n", o.algo.c_str(),
                run.keys.size(), run.elapsed_ms, cfg.threads, cfg.nodes);
    if (run.traffic) {
        const auto& t = *run.traffic;
        std::printf("messages: %zu data messages total, %zu between non-master ranks\n",
                    t.total, t.between_nodes);
        for (psort::Rank r = 1; r < t.ranks; ++r)
            std::printf("  rank %zu: %zu from master, %zu to master\n", r, t.from_master[r],
                        t.to_master[r]);
    }
    return 0;
}

int cmd_verify(const Options& o) {
    const auto output = psort::read_key_file(o.in);
    const auto input = o.against.empty() ? output : psort::read_key_file(o.against);
    const psort::VerifyReport rep = psort::verify(input, output);

    std::printf("keys=%zu sorted=%s permutation=%s stable=%s\n", output.size(),
                rep.sorted ? "yes" : "no", rep.permutation ? "yes" : "no",
                psort::to_string(rep.stable));
    if (rep.first_violation) std::printf("first violation at index %zu\n", *rep.first_violation);
    return rep.pass() ? 0 : kExitFailure;
}

int cmd_bench(const Options& o) {
    psort::SuiteConfig suite;
    suite.sizes = o.sizes;
    for (const auto& name : o.algos) suite.algos.push_back(psort::parse_algo(name));
    suite.threads = o.thread_list;
    suite.nodes = o.node_list;
    suite.digits = o.digits;
    suite.seed = o.seed;
    suite.trials = o.trials;
    suite.full_range = o.full_range;
    suite.transport = psort::parse_transport(o.transport);
    suite.port_base = o.port_base;
    psort::expand_cells(suite); // reject bad grids before timing anything

    const auto records = psort::run_suite(suite);
    if (!o.csv.empty()) psort::write_csv(o.csv, records);

    std::printf("%-15s %10s %8s %6s %12s %9s\n", "algo", "n", "threads", "nodes",
                "median_ms", "speedup");
    for (const auto& r : records) {
        if (r.trial != -1) continue;
        std::printf("%-15s %10zu %8zu %6zu %12.3f %9.3f\n", r.algo.c_str(), r.n, r.threads,
                    r.nodes, r.elapsed_ms, r.speedup.value_or(0.0));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parallel sorting workbench"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--digits", o.digits, "decimal digit width of keys")
            ->capture_default_str();
        sub->add_option("--transport", o.transport, "local or tcp")->capture_default_str();
        sub->add_option("--port-base", o.port_base, "first TCP loopback port")
            ->capture_default_str();
    };

    auto* gen = app.add_subcommand("gen", "generate a key file");
    gen->add_option("--n", o.n, "number of keys")->required();
    gen->add_option("--digits", o.digits, "decimal digit width of keys")->capture_default_str();
    gen->add_option("--seed", o.seed)->capture_default_str();
    gen->add_option("--out", o.out, "output key file")->required();
    gen->add_flag("--full-range", o.full_range, "draw keys from [0, 10^D)");

    auto* sort = app.add_subcommand("sort", "sort a key file");
    sort->add_option("--algo", o.algo, "algorithm name")->capture_default_str();
    sort->add_option("--in", o.in, "input key file")->required();
    sort->add_option("--out", o.out, "output key file")->required();
    sort->add_option("--threads", o.threads)->capture_default_str();
    sort->add_option("--nodes", o.nodes)->capture_default_str();
    add_common(sort);

    auto* verify = app.add_subcommand("verify", "check a key file is sorted");
    verify->add_option("--in", o.in, "key file to check")->required();
    verify->add_option("--against", o.against, "original keys; also checks permutation");

    auto* bench = app.add_subcommand("bench", "run a benchmark grid");
    bench->add_option("--sizes", o.sizes, "comma separated key counts")
        ->required()
        ->delimiter(',');
    bench->add_option("--algos", o.algos, "comma separated algorithm names")
        ->required()
        ->delimiter(',');
    bench->add_option("--threads", o.thread_list)->delimiter(',')->capture_default_str();
    bench->add_option("--nodes", o.node_list)->delimiter(',')->capture_default_str();
    bench->add_option("--seed", o.seed)->capture_default_str();
    bench->add_option("--trials", o.trials)->capture_default_str();
    bench->add_option("--csv", o.csv, "CSV output path");
    bench->add_flag("--full-range", o.full_range, "draw keys from [0, 10^D)");
    add_common(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*gen) return cmd_gen(o);
        if (*sort) return cmd_sort(o);
        if (*verify) return cmd_verify(o);
        if (*bench) return cmd_bench(o);
    } catch (const psort::ConfigError& e) {
        const auto parsed = app.get_subcommands();
        std::cerr << "error: " << e.what() << "\n"
                  << (parsed.empty() ? app.help() : parsed.front()->help());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
