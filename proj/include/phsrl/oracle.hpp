#pragma once

// Known-model validation: exact dynamic programming on Δ_N, Monte Carlo
// evaluation of decentralized strategies on the true simulator, and
// recurrent-class extraction. Nothing here is available to learners.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "phsrl/ier.hpp"
#include "phsrl/learning.hpp"
#include "phsrl/phs_model.hpp"
#include "phsrl/qlearning.hpp"

namespace phsrl {

/// Next-state distributions and expected costs of Δ_N for every (s, g).
class TransitionKernel {
public:
    using Row = std::vector<std::pair<std::size_t, double>>; // (next state, probability)

    TransitionKernel(std::size_t states, std::size_t actions);

    std::size_t state_count() const { return states_; }
    std::size_t action_count() const { return actions_; }
    const Row& row(std::size_t s, std::size_t g) const { return rows_.at(s * actions_ + g); }
    double cost(std::size_t s, std::size_t g) const { return costs_.at(s * actions_ + g); }
    /// False for states whose common history has probability zero; those rows
    /// are zero-cost self loops.
    bool decodable(std::size_t s) const { return decodable_.at(s); }

    void set(std::size_t s, std::size_t g, Row row, double cost);
    void mark_undecodable(std::size_t s);

private:
    std::size_t states_;
    std::size_t actions_;
    std::vector<Row> rows_;
    std::vector<double> costs_;
    std::vector<bool> decodable_;
};

/// For each (s, g): P(z | B(s), g) pushed through Δ_N's (remapped) transition
/// table, plus ℓ̃(s, g) = ℓ̂(B(s), g).
TransitionKernel build_kernel(const TruncatedMdp& mdp, const IerDefinition& ier,
                              const CoordinatedModel& model);

struct ValueFunction {
    std::vector<double> values;
    std::vector<double> q;   // [s * |G| + g], Bellman right-hand side at the final sweep
    double residual = 0.0;   // sup-norm of the last Bellman update
    int sweeps = 0;
    bool converged = false;

    double q_value(std::size_t s, std::size_t g, std::size_t actions) const { return q[s * actions + g]; }
};

struct SolveResult {
    ValueFunction value;
    LearnedStrategy strategy;
};

/// Value iteration to sup-norm residual <= tol; greedy strategy with
/// lowest-index tie-breaking. A run that hits max_sweeps returns with
/// converged = false.
SolveResult value_iterate(const TransitionKernel& kernel, double beta, double tol = 1e-12,
                          int max_sweeps = 1000000);

/// V_psi for a fixed stationary strategy (iterative evaluation).
std::vector<double> evaluate_strategy(const TransitionKernel& kernel, const LearnedStrategy& psi, double beta,
                                      double tol = 1e-12);

struct McEstimate {
    double mean = 0.0;
    double half_width = 0.0;  // normal-approximation 95% half-width
    double tail_bound = 0.0;  // beta^H L / (1 - beta)
    std::size_t replications = 0;
    int horizon = 0;
};

/// Horizon H with beta^H L / (1 - beta) <= tol.
int mc_horizon(double beta, double cost_bound, double tol);

struct McSetup {
    std::function<std::unique_ptr<EnvironmentModel>()> make_env;
    const LearningProblem* problem = nullptr;
    double beta = 0.9;
    double cost_bound = 1.0;
    unsigned threads = 0; // 0: hardware concurrency
};

/// Independent replications of the true system under the translated
/// strategy g^i(s, m^i) = psi(s)^i(m^i). Leaving S_N runs the reset sequence
/// with its real costs. Replication r draws from rng.fork(r), so results do
/// not depend on the thread count.
McEstimate policy_evaluate_mc(const McSetup& setup, const LearnedStrategy& psi, int horizon,
                              std::size_t replications, const RandomStream& rng);

/// Closed communicating classes of the strategy-induced chain reachable from
/// s*, each sorted, ordered by smallest member.
std::vector<std::vector<std::size_t>> recurrent_class(const TruncatedMdp& mdp, const TransitionKernel& kernel,
                                                      const LearnedStrategy& psi);

} // namespace phsrl
