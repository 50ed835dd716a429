// phsrl: learning, exact solution, evaluation and audits for the two-user
// multiaccess broadcast channel.
//
// Exit codes: 0 success, 1 property violation, 2 usage or configuration error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "phsrl/config.hpp"
#include "phsrl/io.hpp"
#include "phsrl/learning.hpp"
#include "phsrl/mabc.hpp"
#include "phsrl/oracle.hpp"

namespace {

using namespace phsrl;

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> iterations;
    std::string out = ".";
    std::optional<double> epsilon;
    std::optional<int> n;
};

struct Resolved {
    ExperimentConfig config;
    mabc::MabcConfig mabc;
    std::uint64_t seed;
    std::uint64_t iterations;
};

Resolved resolve(const CommonOptions& o) {
    Resolved r{o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path), {}, 0, 0};
    r.mabc = r.config.mabc;
    r.mabc.N = resolve_level(r.config, o.n, o.epsilon);
    r.mabc.validate();
    r.seed = o.seed.value_or(r.config.seed);
    r.iterations = o.iterations.value_or(r.config.iterations);
    return r;
}

void print_header(const char* command, const Resolved& r, const mabc::MabcProblem& problem) {
    const auto& m = r.mabc;
    fmt::print("# phsrl {}: p=({}, {}) l=({}, {}, {}) beta={} L={} N={} |S_N|={} |G|={} eps_N={:.6g}\n", command, m.p1,
               m.p2, m.l1, m.l2, m.l3, m.beta, m.L, m.N, problem.mdp.state_count(), problem.mdp.action_count(),
               error_bound(m.beta, m.N, m.L));
    for (const auto& w : m.validate()) fmt::print(stderr, "warning: {}\n", w);
}

std::string action_label(const mabc::MabcProblem& problem, std::size_t g) {
    return mabc::action_of(problem.prescriptions[g]).label();
}

void print_classes(const mabc::MabcProblem& problem, const TransitionKernel& kernel, const LearnedStrategy& psi) {
    const auto classes = recurrent_class(problem.mdp, kernel, psi);
    for (const auto& c : classes) {
        std::string members;
        for (std::size_t s : c)
            members += fmt::format("{}{} -> {}", members.empty() ? "" : ", ", problem.mdp.label(s),
                                   action_label(problem, psi.actions[s]));
        fmt::print("recurrent class ({} states): {}\n", c.size(), members);
    }
}

std::filesystem::path output_dir(const CommonOptions& o) {
    std::filesystem::path dir(o.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError(fmt::format("cannot create output directory '{}': {}", o.out, ec.message()));
    return dir;
}

int cmd_learn(const CommonOptions& o) {
    const Resolved r = resolve(o);
    const auto dir = output_dir(o);
    const auto problem = mabc::make_problem(r.mabc);
    print_header("learn", r, problem);
    LearningOptions opts;
    opts.snapshot_every = r.config.snapshot_every;
    const auto result = mabc::run_algorithm2(problem, r.seed, r.iterations, opts);
    const auto& learning = result.learning;

    // render everything first so a failure leaves no partial output
    const std::string files[][2] = {
        {"qtable.csv", qtable_csv(problem, learning.q)},
        {"strategy.csv", strategy_csv(problem, learning.strategy)},
        {"trajectory.jsonl", trajectory_jsonl(problem, learning.trajectory)},
        {"plot_data.csv", plot_data_csv(problem, learning.trajectory)},
    };
    for (const auto& [name, content] : files) write_atomic((dir / name).string(), content);

    fmt::print("iterations {} resets {} seed {}\n", learning.iterations_run, learning.resets, r.seed);
    fmt::print("greedy strategy:\n");
    for (std::size_t s = 0; s < problem.mdp.state_count(); ++s)
        fmt::print("  {:>12} {}  visits {}\n", problem.mdp.label(s), action_label(problem, learning.strategy.actions[s]),
                   learning.q.state_visits(s));
    const auto kernel = build_kernel(problem.mdp, *problem.ier, *problem.model);
    print_classes(problem, kernel, learning.strategy);
    return kOk;
}

int cmd_solve(const CommonOptions& o, double tol) {
    const Resolved r = resolve(o);
    const auto dir = output_dir(o);
    const auto problem = mabc::make_problem(r.mabc);
    print_header("solve", r, problem);
    const auto kernel = build_kernel(problem.mdp, *problem.ier, *problem.model);
    const auto solved = value_iterate(kernel, r.mabc.beta, tol);
    write_atomic((dir / "values.csv").string(), values_csv(problem, solved.value, solved.strategy));
    fmt::print("V(s*) = {:.12g}  residual {:.3g} after {} sweeps\n", solved.value.values[0], solved.value.residual,
               solved.value.sweeps);
    print_classes(problem, kernel, solved.strategy);
    if (!solved.value.converged) {
        fmt::print(stderr, "value iteration did not reach tolerance {}\n", tol);
        return kViolation;
    }
    return kOk;
}

int cmd_eval(const CommonOptions& o, const std::string& strategy_path, std::size_t replications, double tail_tol) {
    if (replications == 0) throw ConfigError("--replications must be at least 1");
    const Resolved r = resolve(o);
    const auto problem = mabc::make_problem(r.mabc);
    print_header("eval", r, problem);
    const auto kernel = build_kernel(problem.mdp, *problem.ier, *problem.model);
    const LearnedStrategy psi = strategy_path.empty() ? value_iterate(kernel, r.mabc.beta).strategy
                                                      : read_strategy_csv(strategy_path, problem);
    const auto lp = problem.learning_problem();
    McSetup setup;
    const auto config = r.mabc;
    setup.make_env = [config] { return std::make_unique<mabc::MabcEnvironment>(config); };
    setup.problem = &lp;
    setup.beta = r.mabc.beta;
    setup.cost_bound = r.mabc.L;
    const int horizon = mc_horizon(r.mabc.beta, r.mabc.L, tail_tol);
    const auto est = policy_evaluate_mc(setup, psi, horizon, replications, RandomStream(r.seed));
    const double model_value = evaluate_strategy(kernel, psi, r.mabc.beta)[problem.mdp.initial_index()];
    fmt::print("strategy {}\n", strategy_path.empty() ? "oracle" : strategy_path);
    fmt::print("mc mean {:.9g} +/- {:.6g} (95%), {} replications, horizon {}, tail bound {:.3g}\n", est.mean,
               est.half_width, est.replications, est.horizon, est.tail_bound);
    fmt::print("truncated-model value {:.9g}  eps_N {:.6g}\n", model_value, error_bound(r.mabc.beta, r.mabc.N, r.mabc.L));
    return kOk;
}

int cmd_bound(const CommonOptions& o) {
    const Resolved r = resolve(o);
    fmt::print("# truncation error bound 2 beta^N L / (1 - beta), beta={} L={}\n", r.mabc.beta, r.mabc.L);
    fmt::print("N,bound\n");
    for (int n = 1; n <= r.mabc.N; ++n) fmt::print("{},{:.12g}\n", n, error_bound(r.mabc.beta, n, r.mabc.L));
    if (o.epsilon) fmt::print("smallest N for epsilon {}: {}\n", *o.epsilon, r.mabc.N);
    return kOk;
}

// Decodes with a perturbed belief; used to check that the audit can fail.
class CorruptedIer final : public IerDefinition {
public:
    explicit CorruptedIer(std::shared_ptr<const mabc::MabcIer> inner) : inner_(std::move(inner)) {}
    std::size_t prescription_count() const override { return inner_->prescription_count(); }
    std::size_t observation_count() const override { return inner_->observation_count(); }
    IerState initial() const override { return inner_->initial(); }
    IerState step(const IerState& s, std::size_t g, std::size_t z) const override { return inner_->step(s, g, z); }
    BeliefState decode(const IerState& s) const override {
        auto pi = mabc::marginals(inner_->decode(s));
        pi[0] = std::min(1.0, pi[0] + 1e-6);
        return mabc::to_joint(pi);
    }
    std::string label(const IerState& s) const override { return inner_->label(s); }

private:
    std::shared_ptr<const mabc::MabcIer> inner_;
};

int cmd_consistency(const CommonOptions& o, bool corrupt, bool seed_mismatch, int trials, int horizon,
                    std::uint64_t replica_iterations) {
    const Resolved r = resolve(o);
    const auto problem = mabc::make_problem(r.mabc);
    print_header("consistency", r, problem);
    bool ok = true;

    RandomStream rng(r.seed);
    const CorruptedIer corrupted(problem.ier);
    const IerDefinition& ier = corrupt ? static_cast<const IerDefinition&>(corrupted) : *problem.ier;
    const auto report = ier_consistency_check(ier, *problem.model, horizon, trials, rng);
    fmt::print("ier consistency: {} ({} sequences, max deviation {:.3g}) {}\n", report.passed ? "pass" : "FAIL",
               report.sequences_checked, report.max_deviation, report.message);
    ok = ok && report.passed;

    if (r.mabc.N >= 2) {
        mabc::MabcEnvironment env(r.mabc);
        RandomStream nature = RandomStream(r.seed).fork(0x6e6174757265ULL);
        LearningOptions opts;
        opts.iterations = replica_iterations;
        opts.snapshot_every = r.config.snapshot_every;
        opts.beta = r.mabc.beta;
        opts.cost_bound = r.mabc.L;
        const std::vector<std::uint64_t> seeds{r.seed, seed_mismatch ? r.seed + 1 : r.seed};
        const auto replicas = run_decentralized_replicas(problem.learning_problem(), env, seeds, nature, opts);
        fmt::print("replicas: {} {}\n", replicas.passed ? "pass" : "FAIL", replicas.message);
        ok = ok && replicas.passed;
    }
    return ok ? kOk : kViolation;
}

void add_common(CLI::App* sub, CommonOptions& o) {
    sub->add_option("--config", o.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "shared random seed");
    sub->add_option("--iterations", o.iterations, "learning iterations");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--epsilon", o.epsilon, "target truncation error; derives N");
    sub->add_option("--n", o.n, "truncation level N (overrides --epsilon)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized Q-learning for the two-user multiaccess broadcast channel"};
    app.require_subcommand(1);
    CommonOptions common;

    auto* learn = app.add_subcommand("learn", "run decentralized Q-learning and write tables");
    auto* solve = app.add_subcommand("solve", "solve the truncated model exactly");
    auto* eval = app.add_subcommand("eval", "Monte Carlo evaluation on the true channel");
    auto* bound = app.add_subcommand("bound", "print the truncation error bound table");
    auto* consistency = app.add_subcommand("consistency", "audit the representation and agent replication");
    for (auto* sub : {learn, solve, eval, bound, consistency}) add_common(sub, common);

    double solve_tol = 1e-12;
    solve->add_option("--tol", solve_tol, "Bellman residual tolerance")->check(CLI::PositiveNumber);

    std::string strategy_path;
    std::size_t replications = 1000;
    double tail_tol = 1e-3;
    eval->add_option("--strategy", strategy_path, "strategy.csv to evaluate (default: exact optimum)");
    eval->add_option("--replications", replications, "independent replications");
    eval->add_option("--tail", tail_tol, "discounted tail allowance")->check(CLI::PositiveNumber);

    bool corrupt = false;
    bool seed_mismatch = false;
    int trials = 1000;
    int horizon = 50;
    std::uint64_t replica_iterations = 100000;
    consistency->add_flag("--corrupt-decode", corrupt, "perturb decoded beliefs (audit self-test)");
    consistency->add_flag("--seed-mismatch", seed_mismatch, "give the second agent a different seed");
    consistency->add_option("--trials", trials, "random sequences")->check(CLI::PositiveNumber);
    consistency->add_option("--horizon", horizon, "sequence length")->check(CLI::PositiveNumber);
    consistency->add_option("--replica-iterations", replica_iterations, "iterations per replica run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*learn) return cmd_learn(common);
        if (*solve) return cmd_solve(common, solve_tol);
        if (*eval) return cmd_eval(common, strategy_path, replications, tail_tol);
        if (*bound) return cmd_bound(common);
        if (*consistency)
            return cmd_consistency(common, corrupt, seed_mismatch, trials, horizon, replica_iterations);
    } catch (const ConfigError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kUsage;
    } catch (const std::logic_error& e) {
        fmt::print(stderr, "violation: {}\n", e.what());
        return kViolation;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kViolation;
    }
    return kUsage;
}
