#pragma once

// Decentralized-system and coordinated-system abstractions for partial
// history sharing.
//
// Two views of the same system live here:
//  * EnvironmentModel: the true system as a black-box simulator. Learners
//    only see InformationStructure plus per-step costs and observations.
//  * CoordinatedModel: the known-model view used by oracles. It exposes the
//    coordinator's belief update and expected per-step cost.

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phsrl/random.hpp"

namespace phsrl {

class FeasibilityError : public std::runtime_error {
public:
    FeasibilityError(std::size_t agent, const std::string& what)
        : std::runtime_error(what), agent_(agent) {}
    std::size_t agent() const { return agent_; }

private:
    std::size_t agent_;
};

/// Raised when an observation has zero probability under the coordinator's
/// belief: either the model is wrong or the caller fed an impossible history.
class InconsistencyError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct JointAction {
    std::vector<int> per_agent;
    bool operator==(const JointAction&) const = default;
};

struct LocalInfo {
    std::vector<int> per_agent;
    bool operator==(const LocalInfo&) const = default;
};

struct CommonObservation {
    std::size_t value = 0;
    bool operator==(const CommonObservation&) const = default;
};

/// What every agent knows in the learning setup: sizes of the action,
/// local-information and common-observation alphabets, the discount and a
/// bound on the per-step cost. Nothing about the model itself.
struct InformationStructure {
    std::vector<int> action_counts;     // |U^i|
    std::vector<int> local_info_counts; // |M^i|
    std::size_t observation_count = 0;  // |Z|
    double beta = 0.9;
    double cost_bound = 1.0;            // L

    std::size_t agent_count() const { return action_counts.size(); }
    void validate() const;
};

/// gamma = (gamma^1, ..., gamma^n); per_agent[i][m] is agent i's action when
/// its local information is m.
struct Prescription {
    std::vector<std::vector<int>> per_agent;

    int action_for(std::size_t agent, int local_info) const;
    JointAction apply(const LocalInfo& info) const;
    bool operator==(const Prescription&) const = default;
    auto operator<=>(const Prescription&) const = default;
};

/// A finite set of prescriptions G in canonical order.
///
/// Canonical order is lexicographic over (agent, local-info value, action),
/// i.e. over the flattened tables gamma^1(0), gamma^1(1), ..., gamma^n(...).
/// Every replica of a learner sees the same order, which is what makes
/// "lowest index wins" a shared tie-breaking rule.
class PrescriptionSpace {
public:
    using Labeler = std::function<std::string(const Prescription&)>;

    PrescriptionSpace(const InformationStructure& info, std::vector<Prescription> members,
                      Labeler labeler = {});

    /// All prescriptions allowed by `admissible` (every total map when empty).
    static PrescriptionSpace enumerate(
        const InformationStructure& info,
        const std::function<bool(std::size_t agent, int local_info, int action)>& admissible = {},
        Labeler labeler = {});

    std::size_t size() const { return members_.size(); }
    const Prescription& operator[](std::size_t i) const { return members_.at(i); }
    std::size_t index_of(const Prescription& p) const;
    std::string label(std::size_t i) const;
    const std::vector<Prescription>& members() const { return members_; }

private:
    std::vector<Prescription> members_;
    Labeler labeler_;
};

std::string default_prescription_label(const Prescription& p);

/// Coordinator's information state: a probability vector over the joint
/// (system state, local information) support of a particular model.
struct BeliefState {
    std::vector<double> probabilities;

    static constexpr double kTolerance = 1e-12;

    bool is_normalized(double tol = kTolerance) const;
    double max_abs_difference(const BeliefState& other) const;
};

struct StepResult {
    double cost = 0.0;
    CommonObservation observation;
    LocalInfo local_info; // local information at the next step
};

/// The true decentralized system. Model parameters stay behind this
/// interface; callers see costs, common observations and local information.
class EnvironmentModel {
public:
    virtual ~EnvironmentModel() = default;

    virtual const InformationStructure& structure() const = 0;

    /// Current joint local information M_t.
    virtual LocalInfo local_info() const = 0;

    /// Sample a fresh initial hidden state.
    virtual void restart(RandomStream& rng) = 0;

    /// Advance the hidden state one step. Validates the joint action and
    /// asserts the realized cost respects the declared bound.
    StepResult step(const JointAction& action, RandomStream& rng);

protected:
    /// Throw FeasibilityError naming the offending agent if `action` cannot
    /// be taken in the current hidden state.
    virtual void check_feasible(const JointAction& action) const = 0;
    virtual StepResult do_step(const JointAction& action, RandomStream& rng) = 0;
};

/// Known-model view of the coordinated system. Prescriptions and
/// observations are referred to by their index in G and Z.
class CoordinatedModel {
public:
    virtual ~CoordinatedModel() = default;

    virtual std::size_t prescription_count() const = 0;
    virtual std::size_t observation_count() const = 0;
    virtual double beta() const = 0;
    virtual double cost_bound() const = 0;
    virtual BeliefState initial_belief() const = 0;

    /// P(Z_t = z | Pi_t = belief, Gamma_t = g) for every z.
    virtual std::vector<double> observation_probabilities(const BeliefState& belief,
                                                          std::size_t g) const = 0;

    /// phi(belief, g, z). Implementations may assume z has positive probability.
    virtual BeliefState update(const BeliefState& belief, std::size_t g, std::size_t z) const = 0;

    /// l-hat(belief, g).
    virtual double expected_cost(const BeliefState& belief, std::size_t g) const = 0;
};

/// Validated phi: rejects unnormalized beliefs and zero-probability
/// observations, and checks the result is normalized.
BeliefState belief_update(const CoordinatedModel& model, const BeliefState& belief,
                          std::size_t g, CommonObservation z);

/// Validated l-hat; checks |result| <= L.
double expected_cost(const CoordinatedModel& model, const BeliefState& belief, std::size_t g);

} // namespace phsrl
