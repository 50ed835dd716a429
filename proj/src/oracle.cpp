#include "phsrl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

namespace phsrl {

namespace {
constexpr double kZeroProbability = 1e-15;
}

TransitionKernel::TransitionKernel(std::size_t states, std::size_t actions)
    : states_(states), actions_(actions), rows_(states * actions), costs_(states * actions, 0.0),
      decodable_(states, true) {}

void TransitionKernel::set(std::size_t s, std::size_t g, Row row, double cost) {
    rows_.at(s * actions_ + g) = std::move(row);
    costs_.at(s * actions_ + g) = cost;
}

void TransitionKernel::mark_undecodable(std::size_t s) {
    decodable_.at(s) = false;
    for (std::size_t g = 0; g < actions_; ++g) set(s, g, {{s, 1.0}}, 0.0);
}

TransitionKernel build_kernel(const TruncatedMdp& mdp, const IerDefinition& ier, const CoordinatedModel& model) {
    if (mdp.action_count() != model.prescription_count() || mdp.observation_count() != model.observation_count())
        throw ConfigError("kernel: model and truncated MDP disagree on |G| or |Z|");
    TransitionKernel kernel(mdp.state_count(), mdp.action_count());
    for (std::size_t s = 0; s < mdp.state_count(); ++s) {
        BeliefState belief;
        try {
            belief = ier.decode(mdp.state(s));
        } catch (const InconsistencyError&) {
            kernel.mark_undecodable(s);
            continue;
        }
        for (std::size_t g = 0; g < mdp.action_count(); ++g) {
            const auto probs = model.observation_probabilities(belief, g);
            std::map<std::size_t, double> next;
            for (std::size_t z = 0; z < probs.size(); ++z)
                if (probs[z] > 0.0) next[mdp.transition(s, g, z).next] += probs[z];
            TransitionKernel::Row row(next.begin(), next.end());
            kernel.set(s, g, std::move(row), expected_cost(model, belief, g));
        }
    }
    return kernel;
}

namespace {

double backup(const TransitionKernel& kernel, const std::vector<double>& v, std::size_t s, std::size_t g,
              double beta) {
    double expectation = 0.0;
    for (const auto& [next, p] : kernel.row(s, g)) expectation += p * v[next];
    return kernel.cost(s, g) + beta * expectation;
}

} // namespace

SolveResult value_iterate(const TransitionKernel& kernel, double beta, double tol, int max_sweeps) {
    if (!(tol > 0.0)) throw std::invalid_argument("value_iterate: tolerance must be positive");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("value_iterate: beta must lie in (0,1)");
    const std::size_t S = kernel.state_count();
    const std::size_t A = kernel.action_count();
    SolveResult out;
    ValueFunction& vf = out.value;
    vf.values.assign(S, 0.0);
    vf.q.assign(S * A, 0.0);
    std::vector<double> next(S);

    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        double residual = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t g = 0; g < A; ++g) {
                const double q = backup(kernel, vf.values, s, g, beta);
                vf.q[s * A + g] = q;
                best = std::min(best, q);
            }
            next[s] = best;
            residual = std::max(residual, std::abs(best - vf.values[s]));
        }
        vf.values.swap(next);
        vf.residual = residual;
        vf.sweeps = sweep;
        if (residual <= tol) {
            vf.converged = true;
            break;
        }
    }

    out.strategy.actions.resize(S);
    for (std::size_t s = 0; s < S; ++s) {
        std::size_t best = 0;
        for (std::size_t g = 1; g < A; ++g)
            if (vf.q[s * A + g] < vf.q[s * A + best]) best = g;
        out.strategy.actions[s] = best;
    }
    return out;
}

std::vector<double> evaluate_strategy(const TransitionKernel& kernel, const LearnedStrategy& psi, double beta,
                                      double tol) {
    const std::size_t S = kernel.state_count();
    if (psi.actions.size() != S) throw std::invalid_argument("evaluate_strategy: strategy must be total");
    std::vector<double> v(S, 0.0), next(S);
    while (true) {
        double residual = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            next[s] = backup(kernel, v, s, psi.actions[s], beta);
            residual = std::max(residual, std::abs(next[s] - v[s]));
        }
        v.swap(next);
        if (residual <= tol) return v;
    }
}

int mc_horizon(double beta, double cost_bound, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("mc_horizon: tolerance must be positive");
    if (cost_bound <= 0.0) return 1;
    const double h = std::log(tol * (1.0 - beta) / cost_bound) / std::log(beta);
    return std::max(1, static_cast<int>(std::ceil(h)));
}

McEstimate policy_evaluate_mc(const McSetup& setup, const LearnedStrategy& psi, int horizon,
                              std::size_t replications, const RandomStream& rng) {
    if (!setup.make_env || !setup.problem) throw std::invalid_argument("policy_evaluate_mc: incomplete setup");
    if (replications == 0) throw std::invalid_argument("policy_evaluate_mc: need at least one replication");
    if (horizon < 1) throw std::invalid_argument("policy_evaluate_mc: horizon must be positive");
    const LearningProblem& problem = *setup.problem;
    const TruncatedMdp& mdp = *problem.mdp;
    const PrescriptionSpace& G = *problem.prescriptions;
    const AgentStrategy agents = translate_strategy(psi, G);

    auto replicate = [&](std::size_t r) {
        auto env = setup.make_env();
        RandomStream nature = rng.fork(r);
        env->restart(nature);
        std::size_t s = mdp.initial_index();
        double total = 0.0;
        double discount = 1.0;
        int t = 0;
        auto act = [&](const JointAction& u) {
            const StepResult out = env->step(u, nature);
            total += discount * out.cost;
            discount *= setup.beta;
            ++t;
            return out;
        };
        while (t < horizon) {
            const StepResult out = act(agents.joint_action(s, env->local_info()));
            const auto tr = mdp.transition(s, psi.actions[s], out.observation.value);
            if (tr.remapped) {
                for (std::size_t g : problem.reset_sequence) {
                    if (t >= horizon) break;
                    act(G[g].apply(env->local_info()));
                }
            }
            s = tr.next;
        }
        return total;
    };

    std::vector<double> returns(replications);
    unsigned threads = setup.threads ? setup.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, replications));
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < threads; ++w)
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t r = w; r < replications; r += threads) returns[r] = replicate(r);
        }));
    for (auto& job : jobs) job.get();

    McEstimate est;
    est.replications = replications;
    est.horizon = horizon;
    double sum = 0.0;
    for (double x : returns) sum += x;
    est.mean = sum / static_cast<double>(replications);
    if (replications > 1) {
        double ss = 0.0;
        for (double x : returns) ss += (x - est.mean) * (x - est.mean);
        const double sd = std::sqrt(ss / static_cast<double>(replications - 1));
        est.half_width = 1.96 * sd / std::sqrt(static_cast<double>(replications));
    }
    est.tail_bound = std::pow(setup.beta, horizon) * setup.cost_bound / (1.0 - setup.beta);
    return est;
}

std::vector<std::vector<std::size_t>> recurrent_class(const TruncatedMdp& mdp, const TransitionKernel& kernel,
                                                      const LearnedStrategy& psi) {
    const std::size_t S = mdp.state_count();
    if (psi.actions.size() != S) throw std::invalid_argument("recurrent_class: strategy must be total");
    std::vector<std::vector<std::size_t>> succ(S);
    for (std::size_t s = 0; s < S; ++s)
        for (const auto& [next, p] : kernel.row(s, psi.actions[s]))
            if (p > kZeroProbability) succ[s].push_back(next);

    // states reachable from s*
    std::vector<bool> reachable(S, false);
    std::vector<std::size_t> stack{mdp.initial_index()};
    reachable[mdp.initial_index()] = true;
    while (!stack.empty()) {
        const std::size_t s = stack.back();
        stack.pop_back();
        for (std::size_t n : succ[s])
            if (!reachable[n]) {
                reachable[n] = true;
                stack.push_back(n);
            }
    }

    // Tarjan, iterative
    constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> index(S, kUnvisited), low(S, 0), component(S, kUnvisited);
    std::vector<bool> on_stack(S, false);
    std::vector<std::size_t> tarjan_stack;
    std::size_t counter = 0;
    std::size_t components = 0;
    for (std::size_t root = 0; root < S; ++root) {
        if (!reachable[root] || index[root] != kUnvisited) continue;
        std::vector<std::pair<std::size_t, std::size_t>> call{{root, 0}};
        index[root] = low[root] = counter++;
        tarjan_stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            auto& [v, edge] = call.back();
            if (edge < succ[v].size()) {
                const std::size_t w = succ[v][edge++];
                if (index[w] == kUnvisited) {
                    index[w] = low[w] = counter++;
                    tarjan_stack.push_back(w);
                    on_stack[w] = true;
                    call.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                std::size_t w;
                do {
                    w = tarjan_stack.back();
                    tarjan_stack.pop_back();
                    on_stack[w] = false;
                    component[w] = components;
                } while (w != v);
                ++components;
            }
            const std::size_t finished = v;
            call.pop_back();
            if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[finished]);
        }
    }

    std::vector<bool> closed(components, true);
    std::vector<std::vector<std::size_t>> members(components);
    for (std::size_t s = 0; s < S; ++s) {
        if (!reachable[s]) continue;
        members[component[s]].push_back(s);
        for (std::size_t n : succ[s])
            if (component[n] != component[s]) closed[component[s]] = false;
    }
    std::vector<std::vector<std::size_t>> classes;
    for (std::size_t c = 0; c < components; ++c)
        if (closed[c]) classes.push_back(members[c]);
    std::sort(classes.begin(), classes.end());
    return classes;
}

} // namespace phsrl
