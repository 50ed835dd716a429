#pragma once

// Finite-state learning loop over a truncated IER MDP, strategy translation to
// per-agent rules, and shared-seed replication across non-communicating agents.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "phsrl/ier.hpp"
#include "phsrl/phs_model.hpp"
#include "phsrl/qlearning.hpp"
#include "phsrl/random.hpp"

namespace phsrl {

/// g^i(s, m^i): agent i's action at truncated state s with local info m^i.
class AgentStrategy {
public:
    AgentStrategy(std::size_t agents, std::size_t states);

    int action(std::size_t agent, std::size_t s, int local_info) const;
    void set(std::size_t agent, std::size_t s, std::vector<int> rule);
    std::size_t agent_count() const { return rules_.size(); }
    std::size_t state_count() const { return states_; }

    JointAction joint_action(std::size_t s, const LocalInfo& info) const;

private:
    std::size_t states_;
    std::vector<std::vector<std::vector<int>>> rules_; // [agent][state][m]
};

/// g^i(s, m^i) = (component i of psi(s))(m^i).
AgentStrategy translate_strategy(const LearnedStrategy& psi, const PrescriptionSpace& prescriptions);

struct TrajectoryRecord {
    std::uint64_t iteration = 0;
    std::size_t state = 0;
    std::size_t action = 0;
    double cost = 0.0;
    std::size_t next_state = 0;
    bool reset = false;
};

/// A finite controlled process seen through the learner's eyes.
class TabularProcess {
public:
    struct Step {
        double cost;
        std::size_t next;
        bool reset; // the raw successor left the state set and the process was reset
    };
    virtual ~TabularProcess() = default;
    virtual std::size_t state_count() const = 0;
    virtual std::size_t action_count() const = 0;
    virtual std::size_t current() const = 0;
    virtual Step act(std::size_t action) = 0;
};

struct LearningOptions {
    std::uint64_t iterations = 100000;
    std::uint64_t snapshot_every = 0; // 0: no trajectory records
    double beta = 0.9;
    double cost_bound = 1.0;
    StepSizeSchedule step_size{};

    /// Off by default: uniform exploration over all actions.
    bool epsilon_greedy = false;
    double epsilon = 0.1;

    /// Stop early when max |ΔQ| over the last `stop_window` updates drops
    /// below `stop_threshold`.
    bool early_stop = false;
    std::uint64_t stop_window = 10000;
    double stop_threshold = 1e-4;
};

struct LearningResult {
    QTable q;
    LearnedStrategy strategy;
    std::vector<TrajectoryRecord> trajectory;
    std::uint64_t iterations_run = 0;
    std::uint64_t resets = 0;
    bool stopped_early = false;
};

/// Picks the action for one iteration. Uniform mode consumes one tick;
/// epsilon-greedy always consumes two so replicas stay aligned.
std::size_t choose_action(const QTable& q, std::size_t s, SharedRandomSource& rng,
                          const LearningOptions& options);

/// Tabular Q-learning on an arbitrary process. Throws std::logic_error if an
/// iterate leaves the bound L/(1 − β) + L.
LearningResult run_q_learning(TabularProcess& process, SharedRandomSource& rng,
                              const LearningOptions& options,
                              const std::function<void(std::uint64_t, const QTable&)>& on_snapshot = {});

/// What all agents jointly know when learning on Δ_N.
struct LearningProblem {
    const TruncatedMdp* mdp = nullptr;
    const PrescriptionSpace* prescriptions = nullptr;
    /// Prescriptions executed when the IER state leaves S_N; the environment
    /// guarantees the resulting belief is d*.
    std::vector<std::size_t> reset_sequence;

    void validate(const EnvironmentModel& env) const;
};

/// Adapter: the true environment driven through Δ_N's state and prescriptions.
/// Costs incurred during a reset are dropped and the process lands at d*.
class TruncatedProcess final : public TabularProcess {
public:
    TruncatedProcess(const LearningProblem& problem, EnvironmentModel& env, RandomStream& nature);

    std::size_t state_count() const override { return problem_.mdp->state_count(); }
    std::size_t action_count() const override { return problem_.mdp->action_count(); }
    std::size_t current() const override { return state_; }
    Step act(std::size_t action) override;

    std::uint64_t reset_steps() const { return reset_steps_; }

private:
    const LearningProblem& problem_;
    EnvironmentModel& env_;
    RandomStream& nature_;
    std::size_t state_;
    std::uint64_t reset_steps_ = 0;
};

/// One learner on Δ_N driving `env` from a fresh restart.
LearningResult run_learning(const LearningProblem& problem, EnvironmentModel& env,
                            SharedRandomSource& explore, RandomStream& nature,
                            const LearningOptions& options,
                            const std::function<void(std::uint64_t, const QTable&)>& on_snapshot = {});

struct ReplicaReport {
    bool passed = true;
    std::size_t agents = 0;
    std::uint64_t iterations_run = 0;
    std::optional<std::uint64_t> first_divergence;
    std::uint64_t snapshots_compared = 0;
    std::string message;
    std::vector<QTable> tables;
};

/// One learner per agent, each with its own Q-table and exploration source
/// seeded from `seeds[i]`. Agent i only applies component i of its own
/// learner's prescription to its own local information; the only shared
/// signals are the common observation and the realized cost. The report
/// audits that all learners stay identical.
ReplicaReport run_decentralized_replicas(const LearningProblem& problem, EnvironmentModel& env,
                                         const std::vector<std::uint64_t>& seeds,
                                         RandomStream& nature, const LearningOptions& options);

} // namespace phsrl
