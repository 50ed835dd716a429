#include "phsrl/phs_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace phsrl {

void InformationStructure::validate() const {
    if (action_counts.empty()) throw ConfigError("information structure needs at least one agent");
    if (local_info_counts.size() != action_counts.size())
        throw ConfigError("one local-information alphabet per agent is required");
    for (std::size_t i = 0; i < action_counts.size(); ++i) {
        if (action_counts[i] < 1 || local_info_counts[i] < 1)
            throw ConfigError(fmt::format("agent {} has an empty alphabet", i));
    }
    if (observation_count < 1) throw ConfigError("common-observation alphabet is empty");
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("discount must lie strictly inside (0,1)");
    if (!(cost_bound >= 0.0)) throw ConfigError("cost bound must be nonnegative");
}

int Prescription::action_for(std::size_t agent, int local_info) const {
    const auto& table = per_agent.at(agent);
    return table.at(static_cast<std::size_t>(local_info));
}

JointAction Prescription::apply(const LocalInfo& info) const {
    if (info.per_agent.size() != per_agent.size())
        throw std::invalid_argument("local information does not match the number of agents");
    JointAction u;
    u.per_agent.reserve(per_agent.size());
    for (std::size_t i = 0; i < per_agent.size(); ++i)
        u.per_agent.push_back(action_for(i, info.per_agent[i]));
    return u;
}

std::string default_prescription_label(const Prescription& p) {
    std::string out = "[";
    for (std::size_t i = 0; i < p.per_agent.size(); ++i) {
        if (i) out += '|';
        for (std::size_t m = 0; m < p.per_agent[i].size(); ++m) {
            if (m) out += ' ';
            out += std::to_string(p.per_agent[i][m]);
        }
    }
    return out + "]";
}

PrescriptionSpace::PrescriptionSpace(const InformationStructure& info,
                                     std::vector<Prescription> members, Labeler labeler)
    : members_(std::move(members)), labeler_(std::move(labeler)) {
    info.validate();
    if (members_.empty()) throw ConfigError("prescription space is empty");
    for (const auto& p : members_) {
        if (p.per_agent.size() != info.agent_count())
            throw ConfigError("prescription has the wrong number of agents");
        for (std::size_t i = 0; i < p.per_agent.size(); ++i) {
            const auto& table = p.per_agent[i];
            if (table.size() != static_cast<std::size_t>(info.local_info_counts[i]))
                throw ConfigError(fmt::format("prescription for agent {} is not total", i));
            for (int u : table) {
                if (u < 0 || u >= info.action_counts[i])
                    throw ConfigError(fmt::format("prescription for agent {} maps outside U", i));
            }
        }
    }
    std::sort(members_.begin(), members_.end());
    if (std::adjacent_find(members_.begin(), members_.end()) != members_.end())
        throw ConfigError("duplicate prescription");
}

PrescriptionSpace PrescriptionSpace::enumerate(
    const InformationStructure& info,
    const std::function<bool(std::size_t, int, int)>& admissible, Labeler labeler) {
    info.validate();
    std::vector<std::pair<std::size_t, int>> slots; // (agent, local info)
    for (std::size_t i = 0; i < info.agent_count(); ++i)
        for (int m = 0; m < info.local_info_counts[i]; ++m) slots.emplace_back(i, m);

    std::vector<std::vector<int>> choices(slots.size());
    for (std::size_t k = 0; k < slots.size(); ++k) {
        const auto [agent, m] = slots[k];
        for (int u = 0; u < info.action_counts[agent]; ++u)
            if (!admissible || admissible(agent, m, u)) choices[k].push_back(u);
        if (choices[k].empty())
            throw ConfigError(fmt::format("agent {} has no admissible action for local info {}", agent, m));
    }

    std::size_t total = 1;
    for (const auto& c : choices) total *= c.size();

    std::vector<Prescription> members;
    members.reserve(total);
    for (std::size_t code = 0; code < total; ++code) {
        Prescription p;
        p.per_agent.resize(info.agent_count());
        // mixed radix, last slot fastest
        std::vector<std::size_t> digit(slots.size());
        std::size_t rest = code;
        for (std::size_t k = slots.size(); k-- > 0;) {
            digit[k] = rest % choices[k].size();
            rest /= choices[k].size();
        }
        for (std::size_t k = 0; k < slots.size(); ++k)
            p.per_agent[slots[k].first].push_back(choices[k][digit[k]]);
        members.push_back(std::move(p));
    }
    return PrescriptionSpace(info, std::move(members), std::move(labeler));
}

std::size_t PrescriptionSpace::index_of(const Prescription& p) const {
    auto it = std::lower_bound(members_.begin(), members_.end(), p);
    if (it == members_.end() || !(*it == p)) throw std::out_of_range("prescription not in G");
    return static_cast<std::size_t>(it - members_.begin());
}

std::string PrescriptionSpace::label(std::size_t i) const {
    return labeler_ ? labeler_(members_.at(i)) : default_prescription_label(members_.at(i));
}

bool BeliefState::is_normalized(double tol) const {
    if (probabilities.empty()) return false;
    double sum = 0.0;
    for (double p : probabilities) {
        if (!(p >= -tol && p <= 1.0 + tol)) return false;
        sum += p;
    }
    return std::abs(sum - 1.0) <= tol;
}

double BeliefState::max_abs_difference(const BeliefState& other) const {
    if (other.probabilities.size() != probabilities.size())
        throw std::invalid_argument("beliefs over different supports");
    double worst = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i)
        worst = std::max(worst, std::abs(probabilities[i] - other.probabilities[i]));
    return worst;
}

StepResult EnvironmentModel::step(const JointAction& action, RandomStream& rng) {
    const auto& info = structure();
    if (action.per_agent.size() != info.agent_count())
        throw std::invalid_argument(fmt::format("joint action has {} entries, expected {}",
                                                action.per_agent.size(), info.agent_count()));
    for (std::size_t i = 0; i < action.per_agent.size(); ++i) {
        const int u = action.per_agent[i];
        if (u < 0 || u >= info.action_counts[i])
            throw FeasibilityError(i, fmt::format("agent {} action {} is outside its action set", i, u));
    }
    check_feasible(action);
    StepResult result = do_step(action, rng);
    if (std::abs(result.cost) > info.cost_bound + 1e-12)
        throw std::logic_error(fmt::format("realized cost {} exceeds the declared bound {}",
                                           result.cost, info.cost_bound));
    return result;
}

BeliefState belief_update(const CoordinatedModel& model, const BeliefState& belief,
                          std::size_t g, CommonObservation z) {
    if (!belief.is_normalized()) throw std::invalid_argument("belief_update: belief is not normalized");
    if (g >= model.prescription_count()) throw std::out_of_range("belief_update: prescription index");
    const auto probs = model.observation_probabilities(belief, g);
    if (z.value >= probs.size()) throw std::out_of_range("belief_update: observation index");
    if (!(probs[z.value] > 0.0))
        throw InconsistencyError(fmt::format(
            "observation {} has zero probability under prescription {}", z.value, g));
    BeliefState next = model.update(belief, g, z.value);
    if (!next.is_normalized()) throw std::logic_error("belief_update produced an unnormalized belief");
    return next;
}

double expected_cost(const CoordinatedModel& model, const BeliefState& belief, std::size_t g) {
    if (!belief.is_normalized()) throw std::invalid_argument("expected_cost: belief is not normalized");
    if (g >= model.prescription_count()) throw std::out_of_range("expected_cost: prescription index");
    const double c = model.expected_cost(belief, g);
    if (std::abs(c) > model.cost_bound() + 1e-12)
        throw std::logic_error("expected cost exceeds the declared bound");
    return c;
}

} // namespace phsrl
