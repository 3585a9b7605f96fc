// bench: runs the scheduler workloads and writes CSV timings, or runs long
// correctness campaigns with the `verify` subcommand.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "stealpool/harness.hpp"
#include "stealpool/thread_pool.hpp"
#include "stealpool/verify.hpp"

namespace {

constexpr int exit_usage = 2;
constexpr int exit_checksum = 3;
constexpr int exit_violation = 4;

struct VerifyOptions {
    std::string mode = "all";
    std::size_t dags = 1000;
    std::size_t nodes = 64;
    double edge_probability = 0.15;
    std::size_t threads = 4;
    std::uint64_t seed = 1;
    std::size_t thieves = 4;
    std::size_t items = 1'000'000;
    std::size_t runs = 5;
    double pop_probability = 0.5;
};

int run_verify(const VerifyOptions& opt) {
    namespace v = stealpool::verify;
    int status = 0;
    if (opt.mode == "dag" || opt.mode == "all") {
        stealpool::ThreadPool pool(opt.threads);
        std::size_t violations = 0, mismatches = 0;
        for (std::size_t i = 0; i < opt.dags; ++i) {
            const std::uint64_t seed = opt.seed + i;
            // Node counts cycle through 1..nodes so small graphs get coverage too.
            const auto spec = v::random_dag(1 + seed % opt.nodes, opt.edge_probability, seed);
            const auto run = v::pool_execute(pool, spec);
            const auto check = v::check_topological(run.log, spec);
            if (!check.ok()) {
                ++violations;
                std::cerr << "dag seed " << seed << ": edge " << check.violation->first << "->"
                          << check.violation->second << " ran out of order\n";
            }
            if (run.state != v::sequential_execute(spec).state) {
                ++mismatches;
                std::cerr << "dag seed " << seed << ": final state differs from sequential run\n";
            }
        }
        std::cout << "dag: " << opt.dags << " graphs, " << violations << " order violations, "
                  << mismatches << " state mismatches\n";
        if (violations + mismatches != 0) status = exit_violation;
    }
    if (opt.mode == "deque" || opt.mode == "all") {
        for (std::size_t r = 0; r < opt.runs; ++r) {
            v::DequeStressConfig cfg;
            cfg.thieves = opt.thieves;
            cfg.items = opt.items;
            cfg.seed = opt.seed + r;
            cfg.pop_probability = opt.pop_probability;
            const auto rep = v::deque_stress(cfg);
            std::cout << "deque run " << r << ": owner " << rep.owner_log.size() << ", stolen "
                      << rep.stolen() << ", missing " << rep.missing << ", duplicates "
                      << rep.duplicates << ", order violations " << rep.order_violations
                      << ", retries " << rep.retries << '\n';
            if (!rep.ok()) status = exit_violation;
        }
    }
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    namespace b = stealpool::bench;

    CLI::App app{"Work-stealing pool benchmarks (CSV) and correctness campaigns"};
    app.require_subcommand(0, 1);

    std::string workload = "fib";
    std::string params;
    std::vector<std::uint64_t> param2;
    std::string threads = std::to_string(stealpool::ThreadPool::default_thread_count());
    b::BenchConfig config;
    app.add_option("--workload", workload, "fib | expr | fanout")
        ->check(CLI::IsMember({"fib", "expr", "fanout"}));
    app.add_option("--param", params, "comma-separated workload parameters");
    app.add_option("--param2", param2, "secondary parameter (fanout: rounds per task)")->expected(1);
    app.add_option("--threads", threads, "comma-separated worker counts");
    app.add_option("--iterations", config.iterations, "timed runs per configuration");
    app.add_option("--warmup", config.warmup, "untimed runs per configuration");
    app.add_option("--out", config.out_path, "CSV output path (stdout when omitted)");
    app.add_flag("--allow-large", config.allow_large, "lift the fib input guard");

    VerifyOptions vopt;
    auto* verify = app.add_subcommand("verify", "randomized DAG and deque stress campaigns");
    verify->add_option("--mode", vopt.mode, "dag | deque | all")
        ->check(CLI::IsMember({"dag", "deque", "all"}));
    verify->add_option("--dags", vopt.dags, "random DAGs to execute");
    verify->add_option("--nodes", vopt.nodes, "maximum nodes per DAG")->check(CLI::PositiveNumber);
    verify->add_option("--edge-prob", vopt.edge_probability, "forward edge probability")
        ->check(CLI::Range(0.0, 1.0));
    verify->add_option("--threads", vopt.threads, "pool size for DAG runs")->check(CLI::PositiveNumber);
    verify->add_option("--seed", vopt.seed, "first seed");
    verify->add_option("--thieves", vopt.thieves, "stealing threads")->check(CLI::PositiveNumber);
    verify->add_option("--items", vopt.items, "items per deque run");
    verify->add_option("--runs", vopt.runs, "deque runs");
    verify->add_option("--pop-prob", vopt.pop_probability, "owner pop probability per push")
        ->check(CLI::Range(0.0, 1.0));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_usage;
    }

    try {
        if (*verify) return run_verify(vopt);

        config.workload = b::parse_workload(workload);
        config.params = params.empty() ? std::vector<std::uint64_t>{b::default_param(config.workload)}
                                       : b::parse_list(params);
        if (!param2.empty()) config.param2 = param2.front();
        for (auto t : b::parse_list(threads)) config.threads.push_back(static_cast<std::size_t>(t));

        const auto records = b::run_benchmark(config);
        if (config.out_path.empty()) b::write_csv(std::cout, records);
        return 0;
    } catch (const b::ChecksumMismatch& e) {
        std::cerr << "checksum mismatch: " << e.what() << '\n';
        return exit_checksum;
    } catch (const b::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    }
}
