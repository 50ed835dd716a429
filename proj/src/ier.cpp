#include "phsrl/ier.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace phsrl {

std::size_t IerStateHash::operator()(const IerState& s) const {
    auto combine = [](std::size_t seed, std::uint64_t v) {
        return seed ^ (std::hash<std::uint64_t>{}(v) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
    };
    if (const auto* tag = std::get_if<SymbolicTag>(&s.repr)) {
        return combine(combine(0x51, static_cast<std::uint64_t>(tag->first)),
                       static_cast<std::uint64_t>(tag->second));
    }
    std::size_t h = 0x7f;
    for (const auto& [g, z] : std::get<History>(s.repr))
        h = combine(h, (static_cast<std::uint64_t>(g) << 32) | z);
    return h;
}

HistoryIer::HistoryIer(std::shared_ptr<const CoordinatedModel> model) : model_(std::move(model)) {
    if (!model_) throw std::invalid_argument("HistoryIer needs a model");
}

IerState HistoryIer::initial() const { return IerState{History{}, 1}; }

IerState HistoryIer::step(const IerState& s, std::size_t g, std::size_t z) const {
    const auto* history = std::get_if<History>(&s.repr);
    if (!history) throw std::invalid_argument("HistoryIer::step: not a history state");
    History next = *history;
    next.emplace_back(static_cast<std::uint32_t>(g), static_cast<std::uint32_t>(z));
    const int k = static_cast<int>(next.size()) + 1;
    return IerState{std::move(next), k};
}

BeliefState HistoryIer::decode(const IerState& s) const {
    const auto* history = std::get_if<History>(&s.repr);
    if (!history) throw std::invalid_argument("HistoryIer::decode: not a history state");
    BeliefState belief = model_->initial_belief();
    for (const auto& [g, z] : *history) belief = belief_update(*model_, belief, g, CommonObservation{z});
    return belief;
}

std::string HistoryIer::label(const IerState& s) const {
    const auto& history = std::get<History>(s.repr);
    if (history.empty()) return "()";
    std::string out;
    for (const auto& [g, z] : history) out += fmt::format("({},{})", g, z);
    return out;
}

ConsistencyReport ier_consistency_check(const IerDefinition& ier, const CoordinatedModel& model,
                                        int horizon, int trials, RandomStream& rng,
                                        double tolerance) {
    if (horizon < 1) throw std::invalid_argument("consistency check needs horizon >= 1");
    ConsistencyReport report;
    for (int trial = 0; trial < trials; ++trial) {
        IerState s = ier.initial();
        BeliefState belief = model.initial_belief();
        History path;
        for (int t = 0; t <= horizon; ++t) {
            const double deviation = ier.decode(s).max_abs_difference(belief);
            report.max_deviation = std::max(report.max_deviation, deviation);
            if (!(deviation <= tolerance)) {
                report.passed = false;
                report.counterexample = path;
                report.message = fmt::format("trial {} step {}: decode({}) deviates by {:.3e}", trial,
                                             t, ier.label(s), deviation);
                report.sequences_checked = static_cast<std::size_t>(trial) + 1;
                return report;
            }
            if (t == horizon) break;

            const std::size_t g = rng.index(ier.prescription_count());
            const auto probs = model.observation_probabilities(belief, g);
            // inverse-CDF draw; one tick regardless of the outcome
            const double u = rng.uniform();
            std::size_t z = 0;
            double acc = 0.0;
            for (std::size_t k = 0; k < probs.size(); ++k) {
                if (probs[k] <= 0.0) continue;
                z = k;
                acc += probs[k];
                if (u < acc) break;
            }
            path.emplace_back(static_cast<std::uint32_t>(g), static_cast<std::uint32_t>(z));
            belief = belief_update(model, belief, g, CommonObservation{z});
            s = ier.step(s, g, z);
        }
    }
    report.sequences_checked = static_cast<std::size_t>(trials);
    return report;
}

std::optional<std::size_t> TruncatedMdp::index_of(const IerState& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

double TruncatedMdp::cost(std::size_t s, std::size_t g) const {
    if (costs_.empty()) throw std::logic_error("truncated MDP was built without a cost oracle");
    return costs_.at(s * action_count_ + g);
}

void TruncatedMdp::serialize(std::ostream& out) const {
    out << "# truncated-mdp v1\n";
    out << fmt::format("N {} states {} actions {} observations {} beta {:.17g} dstar {}\n", level_,
                       states_.size(), action_count_, observation_count_, beta_, dstar_);
    for (std::size_t s = 0; s < states_.size(); ++s)
        out << fmt::format("state {} {} k={}\n", s, labels_[s], states_[s].expansion_index);
    for (std::size_t s = 0; s < states_.size(); ++s)
        for (std::size_t g = 0; g < action_count_; ++g)
            for (std::size_t z = 0; z < observation_count_; ++z) {
                const auto t = transition(s, g, z);
                out << fmt::format("{} {} {} -> {} {}\n", s, g, z, t.next, t.remapped ? 1 : 0);
            }
}

std::string TruncatedMdp::serialize() const {
    std::ostringstream out;
    serialize(out);
    return out.str();
}

TruncatedMdp build_truncated(const IerDefinition& ier, int level, const IerState& dstar, double beta,
                             const CostOracle& cost) {
    if (level < 1) throw ConfigError("truncation level must be at least 1");
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("discount must lie strictly inside (0,1)");

    TruncatedMdp mdp;
    mdp.level_ = level;
    mdp.beta_ = beta;
    mdp.action_count_ = ier.prescription_count();
    mdp.observation_count_ = ier.observation_count();

    auto intern = [&mdp, &ier](const IerState& s) {
        auto [it, inserted] = mdp.index_.emplace(s, mdp.states_.size());
        if (inserted) {
            mdp.states_.push_back(s);
            mdp.labels_.push_back(ier.label(s));
        }
        return it->second;
    };

    // Breadth-first discovery; targets beyond S_N are recorded as pending
    // (sentinel) and patched to d* once S_N is complete.
    constexpr std::size_t kOutside = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> raw;
    const IerState root = ier.initial();
    if (root.expansion_index != 1) throw std::logic_error("initial IER state must lie in S_1");
    intern(root);
    for (std::size_t s = 0; s < mdp.states_.size(); ++s) {
        const IerState current = mdp.states_[s];
        for (std::size_t g = 0; g < mdp.action_count_; ++g)
            for (std::size_t z = 0; z < mdp.observation_count_; ++z) {
                const IerState next = ier.step(current, g, z);
                if (next.expansion_index > current.expansion_index + 1)
                    throw std::logic_error(fmt::format("IER step from {} skips an expansion level",
                                                       ier.label(current)));
                raw.push_back(next.expansion_index <= level ? intern(next) : kOutside);
            }
    }

    auto dstar_it = mdp.index_.find(dstar);
    if (dstar.expansion_index > level || dstar_it == mdp.index_.end())
        throw ConfigError(fmt::format("reset target {} is not in S_{}", ier.label(dstar), level));
    mdp.dstar_ = dstar_it->second;

    mdp.table_.reserve(raw.size());
    for (std::size_t target : raw) {
        if (target == kOutside)
            mdp.table_.push_back({mdp.dstar_, true});
        else
            mdp.table_.push_back({target, false});
    }

    if (cost) {
        mdp.costs_.reserve(mdp.states_.size() * mdp.action_count_);
        for (const auto& s : mdp.states_)
            for (std::size_t g = 0; g < mdp.action_count_; ++g) mdp.costs_.push_back(cost(s, g));
    }
    return mdp;
}

double error_bound(double beta, int k, double cost_bound) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::domain_error("error_bound: beta must lie in (0,1)");
    if (k < 1) throw std::domain_error("error_bound: truncation level must be >= 1");
    if (!(cost_bound >= 0.0)) throw std::domain_error("error_bound: cost bound must be >= 0");
    return 2.0 * std::pow(beta, k) * cost_bound / (1.0 - beta);
}

int min_truncation_level(double beta, double cost_bound, double epsilon) {
    if (!(epsilon > 0.0)) throw std::domain_error("min_truncation_level: epsilon must be positive");
    if (!(beta > 0.0 && beta < 1.0)) throw std::domain_error("min_truncation_level: beta must lie in (0,1)");
    if (cost_bound == 0.0) return 1;
    // closed-form guess, then settle on the exact boundary by scanning
    const double guess = std::log(epsilon * (1.0 - beta) / (2.0 * cost_bound)) / std::log(beta);
    int n = std::max(1, static_cast<int>(std::ceil(guess)));
    while (n > 1 && error_bound(beta, n - 1, cost_bound) <= epsilon) --n;
    while (error_bound(beta, n, cost_bound) > epsilon) ++n;
    return n;
}

TauEstimate tau_n_estimate(const TruncatedMdp& mdp, const std::vector<std::size_t>& strategy,
                           int horizon_cap) {
    if (strategy.size() != mdp.state_count())
        throw std::invalid_argument("tau_n_estimate: strategy must be total on S_N");
    // Shortest-path search: the earliest exit over all observation paths is
    // the smallest depth of a reachable state with a remapped transition.
    std::vector<int> depth(mdp.state_count(), -1);
    std::deque<std::size_t> frontier{mdp.initial_index()};
    depth[mdp.initial_index()] = 1;
    while (!frontier.empty()) {
        const std::size_t s = frontier.front();
        frontier.pop_front();
        if (depth[s] > horizon_cap) return TauEstimate{false, horizon_cap, true};
        const std::size_t g = strategy[s];
        for (std::size_t z = 0; z < mdp.observation_count(); ++z) {
            const auto t = mdp.transition(s, g, z);
            if (t.remapped) return TauEstimate{false, depth[s], false};
            if (depth[t.next] < 0) {
                depth[t.next] = depth[s] + 1;
                frontier.push_back(t.next);
            }
        }
    }
    return TauEstimate{true, 0, false};
}

} // namespace phsrl
