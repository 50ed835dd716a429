#include "phsrl/learning.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace phsrl {

AgentStrategy::AgentStrategy(std::size_t agents, std::size_t states)
    : states_(states), rules_(agents, std::vector<std::vector<int>>(states)) {}

int AgentStrategy::action(std::size_t agent, std::size_t s, int local_info) const {
    return rules_.at(agent).at(s).at(static_cast<std::size_t>(local_info));
}

void AgentStrategy::set(std::size_t agent, std::size_t s, std::vector<int> rule) {
    rules_.at(agent).at(s) = std::move(rule);
}

JointAction AgentStrategy::joint_action(std::size_t s, const LocalInfo& info) const {
    JointAction u;
    for (std::size_t i = 0; i < rules_.size(); ++i) u.per_agent.push_back(action(i, s, info.per_agent.at(i)));
    return u;
}

AgentStrategy translate_strategy(const LearnedStrategy& psi, const PrescriptionSpace& prescriptions) {
    const std::size_t agents = prescriptions[0].per_agent.size();
    AgentStrategy g(agents, psi.actions.size());
    for (std::size_t s = 0; s < psi.actions.size(); ++s) {
        const Prescription& gamma = prescriptions[psi.actions[s]];
        for (std::size_t i = 0; i < agents; ++i) g.set(i, s, gamma.per_agent[i]);
    }
    return g;
}

std::size_t choose_action(const QTable& q, std::size_t s, SharedRandomSource& rng,
                          const LearningOptions& options) {
    if (!options.epsilon_greedy) return explore_action(rng, q.action_count());
    const double coin = rng.uniform();
    const std::size_t random_action = explore_action(rng, q.action_count());
    return coin < options.epsilon ? random_action : q.argmin(s);
}

namespace {

void check_bounded(const QTable& q, const LearningOptions& options) {
    const double limit = options.cost_bound / (1.0 - options.beta) + options.cost_bound;
    if (q.max_abs_value() > limit + 1e-9)
        throw std::logic_error(fmt::format("Q iterate {} exceeds the bound {}", q.max_abs_value(), limit));
}

} // namespace

LearningResult run_q_learning(TabularProcess& process, SharedRandomSource& rng,
                              const LearningOptions& options,
                              const std::function<void(std::uint64_t, const QTable&)>& on_snapshot) {
    if (!(options.beta > 0.0 && options.beta < 1.0)) throw ConfigError("discount must lie in (0,1)");
    LearningResult result{QTable(process.state_count(), process.action_count()), {}, {}, 0, 0, false};
    QTable& q = result.q;
    const double limit = options.cost_bound / (1.0 - options.beta) + options.cost_bound;

    // sliding window of per-update changes for the optional stopping rule
    std::deque<double> window;
    std::multiset<double> window_sorted;

    for (std::uint64_t k = 1; k <= options.iterations; ++k) {
        const std::size_t s = process.current();
        const std::size_t a = choose_action(q, s, rng, options);
        const auto step = process.act(a);
        if (std::abs(step.cost) > options.cost_bound + 1e-12)
            throw std::logic_error("observed cost exceeds the declared bound");
        const double change = q.update(s, a, step.cost, step.next, options.beta, options.step_size);
        if (std::abs(q.value(s, a)) > limit + 1e-9)
            throw std::logic_error(fmt::format("Q({}, {}) = {} exceeds the bound {}", s, a, q.value(s, a), limit));
        if (step.reset) ++result.resets;
        result.iterations_run = k;

        if (options.snapshot_every > 0 && k % options.snapshot_every == 0) {
            result.trajectory.push_back({k, s, a, step.cost, step.next, step.reset});
            if (on_snapshot) on_snapshot(k, q);
        }

        if (options.early_stop) {
            window.push_back(change);
            window_sorted.insert(change);
            if (window.size() > options.stop_window) {
                window_sorted.erase(window_sorted.find(window.front()));
                window.pop_front();
            }
            if (window.size() == options.stop_window && *window_sorted.rbegin() < options.stop_threshold) {
                result.stopped_early = true;
                break;
            }
        }
    }
    check_bounded(q, options);
    result.strategy = greedy_strategy(q);
    return result;
}

void LearningProblem::validate(const EnvironmentModel& env) const {
    if (!mdp || !prescriptions) throw ConfigError("learning problem is incomplete");
    if (mdp->action_count() != prescriptions->size())
        throw ConfigError("truncated MDP and prescription space disagree on |G|");
    if (mdp->observation_count() != env.structure().observation_count)
        throw ConfigError("truncated MDP and environment disagree on |Z|");
    if (mdp->level() > 1 && reset_sequence.empty()) {
        // a truncation that can leave S_N needs a way back in
        bool can_leave = false;
        for (std::size_t s = 0; s < mdp->state_count() && !can_leave; ++s)
            for (std::size_t g = 0; g < mdp->action_count() && !can_leave; ++g)
                for (std::size_t z = 0; z < mdp->observation_count() && !can_leave; ++z)
                    can_leave = mdp->transition(s, g, z).remapped;
        if (can_leave) throw ConfigError("environment provides no reset sequence but Δ_N remaps transitions");
    }
    for (std::size_t g : reset_sequence)
        if (g >= prescriptions->size()) throw ConfigError("reset sequence uses an unknown prescription");
}

TruncatedProcess::TruncatedProcess(const LearningProblem& problem, EnvironmentModel& env,
                                   RandomStream& nature)
    : problem_(problem), env_(env), nature_(nature), state_(problem.mdp->initial_index()) {
    problem_.validate(env_);
}

TabularProcess::Step TruncatedProcess::act(std::size_t action) {
    const Prescription& gamma = (*problem_.prescriptions)[action];
    const StepResult outcome = env_.step(gamma.apply(env_.local_info()), nature_);
    const auto t = problem_.mdp->transition(state_, action, outcome.observation.value);
    if (t.remapped) {
        // learning is paused while the reset sequence runs
        for (std::size_t g : problem_.reset_sequence) {
            env_.step((*problem_.prescriptions)[g].apply(env_.local_info()), nature_);
            ++reset_steps_;
        }
    }
    state_ = t.next;
    return {outcome.cost, t.next, t.remapped};
}

LearningResult run_learning(const LearningProblem& problem, EnvironmentModel& env,
                            SharedRandomSource& explore, RandomStream& nature,
                            const LearningOptions& options,
                            const std::function<void(std::uint64_t, const QTable&)>& on_snapshot) {
    env.restart(nature);
    TruncatedProcess process(problem, env, nature);
    return run_q_learning(process, explore, options, on_snapshot);
}

ReplicaReport run_decentralized_replicas(const LearningProblem& problem, EnvironmentModel& env,
                                         const std::vector<std::uint64_t>& seeds,
                                         RandomStream& nature, const LearningOptions& options) {
    problem.validate(env);
    const std::size_t agents = env.structure().agent_count();
    if (seeds.size() != agents) throw ConfigError("one exploration seed per agent is required");
    const TruncatedMdp& mdp = *problem.mdp;
    const PrescriptionSpace& G = *problem.prescriptions;

    struct Learner {
        QTable q;
        SharedRandomSource rng;
        std::size_t state;
    };
    std::vector<Learner> learners;
    for (std::size_t i = 0; i < agents; ++i)
        learners.push_back({QTable(mdp.state_count(), mdp.action_count()), SharedRandomSource(seeds[i]),
                            mdp.initial_index()});

    ReplicaReport report;
    report.agents = agents;
    env.restart(nature);

    auto diverged = [&](std::uint64_t k, const std::string& why) {
        report.passed = false;
        report.first_divergence = k;
        report.message = fmt::format("replicas diverged at iteration {}: {}", k, why);
    };

    std::vector<std::size_t> chosen(agents);
    for (std::uint64_t k = 1; k <= options.iterations; ++k) {
        for (std::size_t i = 0; i < agents; ++i)
            chosen[i] = choose_action(learners[i].q, learners[i].state, learners[i].rng, options);
        // audit only: agents never read each other's choices
        if (std::adjacent_find(chosen.begin(), chosen.end(), std::not_equal_to<>{}) != chosen.end()) {
            diverged(k, "agents picked different prescriptions");
            report.iterations_run = k;
            break;
        }

        const LocalInfo info = env.local_info();
        JointAction u;
        for (std::size_t i = 0; i < agents; ++i)
            u.per_agent.push_back(G[chosen[i]].action_for(i, info.per_agent[i]));
        const StepResult outcome = env.step(u, nature);

        bool reset_needed = false;
        for (std::size_t i = 0; i < agents; ++i) {
            Learner& learner = learners[i];
            const auto t = mdp.transition(learner.state, chosen[i], outcome.observation.value);
            learner.q.update(learner.state, chosen[i], outcome.cost, t.next, options.beta, options.step_size);
            learner.state = t.next;
            reset_needed = reset_needed || t.remapped;
        }
        if (reset_needed) {
            for (std::size_t g : problem.reset_sequence) {
                const LocalInfo now = env.local_info();
                JointAction r;
                for (std::size_t i = 0; i < agents; ++i) r.per_agent.push_back(G[g].action_for(i, now.per_agent[i]));
                env.step(r, nature);
            }
        }
        report.iterations_run = k;

        const bool snapshot = options.snapshot_every > 0 && k % options.snapshot_every == 0;
        if (snapshot || k == options.iterations) {
            ++report.snapshots_compared;
            bool same = true;
            for (std::size_t i = 1; i < agents; ++i)
                same = same && learners[i].q.identical(learners[0].q) &&
                       greedy_strategy(learners[i].q) == greedy_strategy(learners[0].q);
            if (!same) {
                diverged(k, "Q-tables differ at snapshot");
                break;
            }
        }
    }
    if (report.passed)
        report.message = fmt::format("{} replicas identical over {} iterations", agents, report.iterations_run);
    for (auto& learner : learners) report.tables.push_back(std::move(learner.q));
    return report;
}

} // namespace phsrl
