#include <cstdint>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crdtmerge/audit.hpp"
#include "crdtmerge/errors.hpp"
#include "crdtmerge/report.hpp"
#include "crdtmerge/sim.hpp"
#include "crdtmerge/state.hpp"
#include "crdtmerge/strategy.hpp"
#include "crdtmerge/tensor.hpp"

namespace {

using namespace crdtmerge;

// Exit codes: 0 success / all checks passed, 1 findings failure or
// unexpected error, 2 usage error, 3 malformed or semantically invalid data.
constexpr int kExitFindings = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t parse_count(const std::string& token, const char* what) {
    if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) {
        throw UsageError(std::string("invalid ") + what + ": '" + token + "'");
    }
    try {
        return std::stoull(token);
    } catch (const std::exception&) {
        throw UsageError(std::string("invalid ") + what + ": '" + token + "'");
    }
}

// "64x64", "64X64" and "64,64" all parse to {64, 64}.
std::vector<std::size_t> parse_shape(const std::string& text) {
    std::string normalized = text;
    for (char& c : normalized) {
        if (c == 'x' || c == 'X') {
            c = ',';
        }
    }
    std::vector<std::size_t> dims;
    std::stringstream ss(normalized);
    std::string token;
    while (std::getline(ss, token, ',')) {
        const auto dim = parse_count(token, "shape dimension");
        if (dim == 0) {
            throw UsageError("shape dimensions must be positive");
        }
        dims.push_back(static_cast<std::size_t>(dim));
    }
    if (dims.empty()) {
        throw UsageError("empty shape");
    }
    return dims;
}

std::vector<int> parse_ladder(const std::string& text) {
    std::vector<int> ladder;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        const auto n = parse_count(token, "ladder entry");
        if (n < 2) {
            throw UsageError("ladder node counts must be at least 2");
        }
        ladder.push_back(static_cast<int>(n));
    }
    if (ladder.empty()) {
        throw UsageError("empty ladder");
    }
    return ladder;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot read file: " + path);
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot open output file: " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw FormatError("cannot write output file: " + path);
    }
}

void emit(const std::string& text, const std::string& output_path) {
    if (output_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(output_path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot open output file: " + output_path);
    }
    out << text;
    if (!out) {
        throw FormatError("cannot write output file: " + output_path);
    }
}

struct ParamArgs {
    double lambda = 1.0;
    double t = 0.5;
    double drop_p = 0.5;
    double keep_frac = 0.8;
    double linear_w = 0.5;
    int pop_size = 16;
    int generations = 8;
    std::string base_path;
};

void add_param_flags(CLI::App* cmd, ParamArgs& args) {
    cmd->add_option("--lambda", args.lambda, "delta-sum scale (task_arithmetic)")
        ->capture_default_str();
    cmd->add_option("--t", args.t, "interpolation position (slerp)")->capture_default_str();
    cmd->add_option("--drop-p", args.drop_p, "dropout probability (dare variants)")
        ->capture_default_str();
    cmd->add_option("--keep-frac", args.keep_frac, "fraction kept by magnitude trims")
        ->capture_default_str();
    cmd->add_option("--linear-w", args.linear_w, "pairwise linear weight")
        ->capture_default_str();
    cmd->add_option("--pop-size", args.pop_size, "candidates per search generation")
        ->capture_default_str();
    cmd->add_option("--generations", args.generations, "search generations")
        ->capture_default_str();
    cmd->add_option("--base", args.base_path,
                    "base tensor file (CMT1) for delta-based strategies");
}

StrategyParams build_params(const ParamArgs& args) {
    StrategyParams params;
    params.lambda = args.lambda;
    params.t = args.t;
    params.drop_p = args.drop_p;
    params.keep_frac = args.keep_frac;
    params.linear_w = args.linear_w;
    params.pop_size = args.pop_size;
    params.generations = args.generations;
    if (!args.base_path.empty()) {
        params.base = tensor_from_bytes(read_file(args.base_path));
    }
    return params;
}

void add_output_flags(CLI::App* cmd, std::string& format, std::string& output) {
    cmd->add_option("--format", format, "output format")
        ->check(CLI::IsMember({"json", "csv", "table"}))
        ->capture_default_str();
    cmd->add_option("--output", output, "write the report to this file instead of stdout");
}

struct AuditArgs {
    std::string shape = "4x4";
    std::uint64_t seed = 42;
    double atol = 1e-5;
    int trials = 20;
    int repetitions = 5;
    std::vector<std::string> strategies;
    ParamArgs params;
    std::string format = "table";
    std::string output;
};

void add_audit_flags(CLI::App* cmd, AuditArgs& args) {
    cmd->add_option("--shape", args.shape, "tensor shape, e.g. 4x4 or 16")
        ->capture_default_str();
    cmd->add_option("--seed", args.seed, "master seed")
        ->envname("CRDT_MERGE_SEED")
        ->capture_default_str();
    cmd->add_option("--atol", args.atol, "absolute tolerance for law checks")
        ->capture_default_str();
    cmd->add_option("--trials", args.trials, "random input tuples per strategy")
        ->capture_default_str();
    cmd->add_option("--repetitions", args.repetitions,
                    "reruns over the same inputs for stochastic strategies")
        ->capture_default_str();
    cmd->add_option("--strategy", args.strategies,
                    "restrict the audit to these strategy ids (repeatable)");
    add_param_flags(cmd, args.params);
    add_output_flags(cmd, args.format, args.output);
}

AuditConfig build_audit_config(const AuditArgs& args) {
    if (args.trials < 1) {
        throw UsageError("--trials must be at least 1");
    }
    if (args.repetitions < 1) {
        throw UsageError("--repetitions must be at least 1");
    }
    if (!(args.atol >= 0.0)) {
        throw UsageError("--atol must be non-negative");
    }
    AuditConfig cfg;
    cfg.shape = parse_shape(args.shape);
    cfg.seed = args.seed;
    cfg.atol = args.atol;
    cfg.trials = args.trials;
    cfg.repetitions = args.repetitions;
    cfg.strategies = args.strategies;
    cfg.params = build_params(args.params);
    return cfg;
}

int run_phase1_cmd(const AuditArgs& args) {
    const AuditConfig cfg = build_audit_config(args);
    const auto rows = run_phase1(cfg);
    emit(render_audit("phase1", cfg, rows, parse_format(args.format)), args.output);
    // The raw-operator audit exists to surface law failures; finding them
    // is a successful run.
    return 0;
}

int run_phase2_cmd(const AuditArgs& args) {
    const AuditConfig cfg = build_audit_config(args);
    const auto rows = run_phase2(cfg);
    emit(render_audit("phase2", cfg, rows, parse_format(args.format)), args.output);
    return audit_all_pass(rows) ? 0 : kExitFindings;
}

struct SimArgs {
    int nodes = 20;
    std::string shape = "64x64";
    std::string strategy = "slerp";
    int orderings = 20;
    std::uint64_t seed = 7;
    int partitions = 4;
    std::string ladder = "2,5,10,20,30,50";
    ParamArgs params;
    std::string format = "table";
    std::string output;
    bool full_scale = false;
};

void add_sim_flags(CLI::App* cmd, SimArgs& args, bool with_strategy) {
    cmd->add_option("--nodes", args.nodes, "replica count")->capture_default_str();
    cmd->add_option("--shape", args.shape, "tensor shape per contribution")
        ->capture_default_str();
    if (with_strategy) {
        cmd->add_option("--strategy", args.strategy, "resolution strategy id")
            ->capture_default_str();
    }
    cmd->add_option("--seed", args.seed, "master seed")
        ->envname("CRDT_MERGE_SEED")
        ->capture_default_str();
    add_param_flags(cmd, args.params);
    add_output_flags(cmd, args.format, args.output);
}

SimConfig build_sim_config(const SimArgs& args) {
    if (args.nodes < 2) {
        throw UsageError("--nodes must be at least 2");
    }
    SimConfig cfg;
    cfg.nodes = args.nodes;
    cfg.shape = parse_shape(args.shape);
    cfg.strategy = StrategySpec{args.strategy, build_params(args.params)};
    cfg.orderings = args.orderings;
    cfg.seed = args.seed;
    cfg.partitions = args.partitions;
    cfg.ladder = parse_ladder(args.ladder);
    return cfg;
}

int run_converge_cmd(const SimArgs& args, bool orderings_given) {
    SimConfig cfg = build_sim_config(args);
    if (args.full_scale) {
        cfg.nodes = 100;
        cfg.shape = {512, 512};
        if (!orderings_given) {
            // One ordering at this size moves ~10 GB of serialized state;
            // default to a single pass and let --orderings raise it.
            cfg.orderings = 1;
        }
        std::cerr << "full scale: " << cfg.nodes << " nodes, 512x512 tensors, "
                  << cfg.orderings << " ordering(s)\n";
    }
    if (cfg.orderings < 1) {
        throw UsageError("--orderings must be at least 1");
    }
    const auto rows = run_convergence(cfg);
    emit(render_convergence(cfg, rows, args.full_scale, parse_format(args.format)),
         args.output);
    return convergence_all_equal(rows) ? 0 : kExitFindings;
}

int run_partition_cmd(const SimArgs& args) {
    const SimConfig cfg = build_sim_config(args);
    if (cfg.partitions < 2) {
        throw UsageError("--partitions must be at least 2");
    }
    if (cfg.nodes % cfg.partitions != 0) {
        throw UsageError("--partitions must divide --nodes evenly");
    }
    const auto rep = run_partition_healing(cfg);
    emit(render_partition(cfg, rep, parse_format(args.format)), args.output);
    return rep.all_pass() ? 0 : kExitFindings;
}

int run_sweep_cmd(const SimArgs& args) {
    const SimConfig cfg = build_sim_config(args);
    const auto rows = run_strategy_sweep(cfg);
    emit(render_sweep(cfg, rows, parse_format(args.format)), args.output);
    return sweep_all_converged(rows) ? 0 : kExitFindings;
}

int run_bench_cmd(const SimArgs& args) {
    const SimConfig cfg = build_sim_config(args);
    const auto rows = run_scalability(cfg);
    emit(render_bench(cfg, rows, parse_format(args.format)), args.output);
    return bench_all_pass(rows) ? 0 : kExitFindings;
}

struct StateArgs {
    std::string file;
    std::string format = "table";
    std::string strategy = "weight_average";
    ParamArgs params;
    std::string out_path;
};

int run_state_inspect(const StateArgs& args) {
    const auto state = MergeState::deserialize(read_file(args.file));
    std::cout << render_state_summary(state, args.file, parse_format(args.format));
    return 0;
}

int run_state_hash(const StateArgs& args) {
    const auto state = MergeState::deserialize(read_file(args.file));
    std::cout << state.root().hex() << "\n";
    return 0;
}

int run_state_resolve(const StateArgs& args) {
    const auto state = MergeState::deserialize(read_file(args.file));
    const StrategySpec spec{args.strategy, build_params(args.params)};
    const Tensor result = resolve(state, spec);
    if (!args.out_path.empty()) {
        write_file(args.out_path, canonical_bytes(result));
    }
    std::cout << "strategy: " << spec.id << "\n"
              << "output: " << result.describe() << "\n"
              << "content hash: " << content_hash(result).hex() << "\n";
    if (!args.out_path.empty()) {
        std::cout << "written: " << args.out_path << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Replicated model merging: CRDT law audits, gossip simulations and "
                 "state-file tools"};
    app.require_subcommand(1);

    AuditArgs phase1_args;
    auto* phase1_cmd =
        app.add_subcommand("phase1", "Audit merge strategies as raw pairwise operators");
    add_audit_flags(phase1_cmd, phase1_args);

    AuditArgs phase2_args;
    auto* phase2_cmd =
        app.add_subcommand("phase2", "Audit merge strategies through the replicated layer");
    add_audit_flags(phase2_cmd, phase2_args);

    SimArgs converge_args;
    auto* converge_cmd = app.add_subcommand(
        "converge", "Gossip one full round under random delivery orderings");
    add_sim_flags(converge_cmd, converge_args, true);
    converge_cmd->add_option("--orderings", converge_args.orderings,
                             "delivery orderings to test")
        ->capture_default_str();
    converge_cmd->add_flag("--full-scale", converge_args.full_scale,
                           "100 nodes with 512x512 tensors (orderings default to 1)");

    SimArgs partition_args;
    auto* partition_cmd = app.add_subcommand(
        "partition", "Partition the network, heal it and compare against an unpartitioned run");
    add_sim_flags(partition_cmd, partition_args, true);
    partition_cmd->add_option("--partitions", partition_args.partitions, "partition count")
        ->capture_default_str();

    SimArgs sweep_args;
    sweep_args.nodes = 10;
    auto* sweep_cmd =
        app.add_subcommand("sweep", "One gossip-and-resolve run per registered strategy");
    add_sim_flags(sweep_cmd, sweep_args, false);

    SimArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "Scalability ladder over node counts");
    add_sim_flags(bench_cmd, bench_args, true);
    bench_cmd->add_option("--ladder", bench_args.ladder, "comma-separated node counts")
        ->capture_default_str();

    StateArgs state_args;
    auto* state_cmd = app.add_subcommand("state", "Inspect, hash or resolve state files");
    state_cmd->require_subcommand(1);
    auto* inspect_cmd = state_cmd->add_subcommand("inspect", "Summarize a state file");
    inspect_cmd->add_option("file", state_args.file, "state file (CMS1)")->required();
    inspect_cmd->add_option("--format", state_args.format, "output format")
        ->check(CLI::IsMember({"json", "csv", "table"}))
        ->capture_default_str();
    auto* hash_cmd =
        state_cmd->add_subcommand("hash", "Print the Merkle root of a state file");
    hash_cmd->add_option("file", state_args.file, "state file (CMS1)")->required();
    auto* resolve_cmd =
        state_cmd->add_subcommand("resolve", "Resolve a state file to a single tensor");
    resolve_cmd->add_option("file", state_args.file, "state file (CMS1)")->required();
    resolve_cmd->add_option("--strategy", state_args.strategy, "resolution strategy id")
        ->capture_default_str();
    add_param_flags(resolve_cmd, state_args.params);
    resolve_cmd->add_option("--out", state_args.out_path,
                            "write the resolved tensor (CMT1) to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*phase1_cmd) return run_phase1_cmd(phase1_args);
        if (*phase2_cmd) return run_phase2_cmd(phase2_args);
        if (*converge_cmd) {
            return run_converge_cmd(converge_args, converge_cmd->count("--orderings") > 0);
        }
        if (*partition_cmd) return run_partition_cmd(partition_args);
        if (*sweep_cmd) return run_sweep_cmd(sweep_args);
        if (*bench_cmd) return run_bench_cmd(bench_args);
        if (*inspect_cmd) return run_state_inspect(state_args);
        if (*hash_cmd) return run_state_hash(state_args);
        if (*resolve_cmd) return run_state_resolve(state_args);
        std::cerr << "error: no command selected\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
