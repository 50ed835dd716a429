#pragma once

// Two-user multiaccess broadcast channel.
//
// Each user holds at most one packet, packets arrive as independent Bernoulli
// streams, and simultaneous transmissions collide. Transmission decisions are
// broadcast, so the common information is the history of joint transmissions
// and each user's local information is its own buffer.
//
// Coordinator actions are A = (a1, a2): user i transmits iff a_i = 1 and it
// holds a packet. Observations are the joint transmissions U, indexed 2*u1 + u2.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phsrl/ier.hpp"
#include "phsrl/learning.hpp"
#include "phsrl/phs_model.hpp"

namespace phsrl::mabc {

struct MabcConfig {
    double p1 = 0.3;
    double p2 = 0.6;
    double l1 = -1.0;
    double l2 = -1.0;
    double l3 = 0.0;
    double beta = 0.99;
    double b1 = 0.25; // plot embedding only
    double b2 = 0.83;
    int N = 20;
    double L = 1.0;

    /// Throws ConfigError on hard violations; returns warnings (e.g. a
    /// collision cost that makes collisions attractive).
    std::vector<std::string> validate() const;
};

/// Largest |l_j|; the tightest admissible cost bound.
double tight_cost_bound(const MabcConfig& config);

using Pair = std::array<int, 2>;
using BeliefPair = std::array<double, 2>; // (P(X1 = 1), P(X2 = 1))

/// Coordinator action (a1, a2).
struct MabcAction {
    int a1 = 0;
    int a2 = 0;
    bool operator==(const MabcAction&) const = default;
    std::string label() const;
};

inline constexpr MabcAction kIdle{0, 0};
inline constexpr MabcAction kUser2{0, 1};
inline constexpr MabcAction kUser1{1, 0};
inline constexpr MabcAction kBoth{1, 1};

inline std::size_t observation_index(const Pair& u) { return static_cast<std::size_t>(2 * u[0] + u[1]); }
inline Pair observation_pair(std::size_t z) { return {static_cast<int>(z >> 1), static_cast<int>(z & 1)}; }

/// Belief that a silent user's buffer is full one step later:
/// 1 - (1 - p)(1 - q), the complement of "empty and nothing arrived".
double idle_update(double q, double p);

/// Belief update, coordinator side.
BeliefPair mabc_phi(const BeliefPair& pi, MabcAction a, const Pair& u, const MabcConfig& config);

/// Expected per-step cost under belief pi.
double mabc_cost_hat(const BeliefPair& pi, MabcAction a, const MabcConfig& config);

/// Realized cost of joint transmission u.
double mabc_cost(const Pair& u, const MabcConfig& config);

struct TrueStep {
    double cost;
    Pair next;
    Pair observed; // broadcast to both users
};

/// One step of the true system with explicit arrivals w.
TrueStep mabc_true_step(const Pair& x, const Pair& u, const Pair& w, const MabcConfig& config);

/// Symbolic IER state in the (k1, k2) coordinates: k1 counts steps since user
/// 2's belief was last reset to p2 (top edge), k2 likewise for user 1 (right
/// edge); kInfinite marks a certain packet. The edge names are views
/// on the same pair.
class SymbolicState {
public:
    static constexpr std::int64_t kInfinite = -1;

    enum class Tag { Origin, TopEdge, RightEdge, TopLimit, RightLimit, Corner, Interior };

    static SymbolicState origin() { return {0, 0}; }
    static SymbolicState top_edge(std::int64_t n) { return {n, 0}; }
    static SymbolicState right_edge(std::int64_t n) { return {0, n}; }
    static SymbolicState top_limit() { return {kInfinite, 0}; }
    static SymbolicState right_limit() { return {0, kInfinite}; }
    static SymbolicState corner() { return {kInfinite, kInfinite}; }
    static SymbolicState grid(std::int64_t k1, std::int64_t k2) { return {k1, k2}; }

    std::int64_t k1() const { return k1_; }
    std::int64_t k2() const { return k2_; }
    Tag tag() const;
    int expansion_index() const;
    std::string label() const;

    IerState to_ier() const { return IerState::symbolic(k1_, k2_, expansion_index()); }
    static SymbolicState from_ier(const IerState& s);

    bool operator==(const SymbolicState&) const = default;

private:
    SymbolicState(std::int64_t k1, std::int64_t k2) : k1_(k1), k2_(k2) {}
    std::int64_t k1_;
    std::int64_t k2_;
};

SymbolicState mabc_ier_step(const SymbolicState& s, MabcAction a, const Pair& u);
BeliefPair mabc_decode(const SymbolicState& s, const MabcConfig& config);

/// Plot coordinates (1 - b2^k2, 1 - b1^k1); infinite indices map to 1.
std::pair<double, double> mabc_embedding(const SymbolicState& s, double b1, double b2);

/// Membership of pi in the reachable set from (p1, p2), searching edge
/// indices up to max_index.
bool in_reachable_set(const BeliefPair& pi, const MabcConfig& config, int max_index, double tol = 1e-12);

InformationStructure mabc_information_structure(const MabcConfig& config);

/// Coordinator actions as prescriptions (gamma^i(0) = 0, gamma^i(1) = a_i) in
/// canonical order; (0,0) only when include_idle.
PrescriptionSpace mabc_prescriptions(const MabcConfig& config, bool include_idle = false);
MabcAction action_of(const Prescription& p);

BeliefState to_joint(const BeliefPair& pi);
BeliefPair marginals(const BeliefState& belief);

/// Known-model coordinated system. Beliefs are distributions over the joint
/// buffer state x, indexed 2*x1 + x2.
class MabcCoordinatedModel final : public CoordinatedModel {
public:
    MabcCoordinatedModel(MabcConfig config, bool include_idle = false);

    std::size_t prescription_count() const override { return actions_.size(); }
    std::size_t observation_count() const override { return 4; }
    double beta() const override { return config_.beta; }
    double cost_bound() const override { return config_.L; }
    BeliefState initial_belief() const override;
    std::vector<double> observation_probabilities(const BeliefState& belief, std::size_t g) const override;
    BeliefState update(const BeliefState& belief, std::size_t g, std::size_t z) const override;
    double expected_cost(const BeliefState& belief, std::size_t g) const override;

    MabcAction action(std::size_t g) const { return actions_.at(g); }
    const MabcConfig& config() const { return config_; }

private:
    MabcConfig config_;
    std::vector<MabcAction> actions_;
};

/// The symbolic IER. Stepping uses only the action and observation; decode
/// needs the arrival probabilities.
class MabcIer final : public IerDefinition {
public:
    MabcIer(MabcConfig config, bool include_idle = false);

    std::size_t prescription_count() const override { return actions_.size(); }
    std::size_t observation_count() const override { return 4; }
    IerState initial() const override { return SymbolicState::origin().to_ier(); }
    IerState step(const IerState& s, std::size_t g, std::size_t z) const override;
    BeliefState decode(const IerState& s) const override;
    std::string label(const IerState& s) const override;

    MabcAction action(std::size_t g) const { return actions_.at(g); }

private:
    MabcConfig config_;
    std::vector<MabcAction> actions_;
};

/// The true channel; buffers are hidden from everything but the users.
class MabcEnvironment final : public EnvironmentModel {
public:
    explicit MabcEnvironment(MabcConfig config);

    const InformationStructure& structure() const override { return info_; }
    LocalInfo local_info() const override { return LocalInfo{{x_[0], x_[1]}}; }

    /// Empty buffers, then one arrival step.
    void restart(RandomStream& rng) override;

    // test hooks
    void set_hidden_state(const Pair& x) { x_ = x; }
    const Pair& hidden_state() const { return x_; }

    /// Step with explicit arrivals instead of sampled ones.
    StepResult step_with_arrivals(const JointAction& u, const Pair& w);

protected:
    void check_feasible(const JointAction& action) const override;
    StepResult do_step(const JointAction& action, RandomStream& rng) override;

private:
    MabcConfig config_;
    InformationStructure info_;
    Pair x_{0, 0};
};

/// Prescription indices of the reset sequence: user 1 transmits, then user 2.
std::vector<std::size_t> mabc_reset_sequence(const PrescriptionSpace& prescriptions);

/// Where the reset sequence lands: the right-edge state (1 - b2, 0).
SymbolicState mabc_reset_target();

/// Everything needed to learn or solve on Δ_N for one configuration.
struct MabcProblem {
    MabcConfig config;
    std::shared_ptr<const MabcCoordinatedModel> model;
    std::shared_ptr<const MabcIer> ier;
    PrescriptionSpace prescriptions;
    TruncatedMdp mdp;
    std::vector<std::size_t> reset_sequence;

    LearningProblem learning_problem() const;
};

/// Builds Δ_N (with ℓ̃ attached) for `config.N`; `dstar` defaults to the
/// reset target.
MabcProblem make_problem(const MabcConfig& config, bool include_idle = false,
                         std::optional<SymbolicState> dstar = std::nullopt);

struct Algorithm2Result {
    LearningResult learning;
    AgentStrategy agents;
};

/// Decentralized Q-learning on the channel: uniform shared-seed exploration
/// over the three actions, u_i = a_i * x_i, reset on leaving S_N.
Algorithm2Result run_algorithm2(const MabcProblem& problem, std::uint64_t seed, std::uint64_t iterations,
                                LearningOptions options = {});

} // namespace phsrl::mabc
