#pragma once

// Incrementally expanding representations (IERs) of the coordinator's belief.
//
// An IER replaces beliefs by symbolic states that can be propagated without
// knowing the model: S_1 = {s*} ⊊ S_2 ⊊ ..., a step map f̃ that moves S_k into
// S_{k+1}, and a decoder B that recovers the belief once the model is known.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "phsrl/phs_model.hpp"
#include "phsrl/random.hpp"

namespace phsrl {

/// Environment-specific symbolic coordinates (e.g. the MABC pair (k1, k2)).
struct SymbolicTag {
    std::int64_t first = 0;
    std::int64_t second = 0;
    auto operator<=>(const SymbolicTag&) const = default;
};

/// One (prescription index, observation index) pair of a common history.
using HistoryStep = std::pair<std::uint32_t, std::uint32_t>;
using History = std::vector<HistoryStep>;

struct IerState {
    std::variant<SymbolicTag, History> repr;
    int expansion_index = 1; // smallest k with state in S_k

    static IerState symbolic(std::int64_t first, std::int64_t second, int expansion_index) {
        return IerState{SymbolicTag{first, second}, expansion_index};
    }

    bool operator==(const IerState& other) const { return repr == other.repr; }
};

struct IerStateHash {
    std::size_t operator()(const IerState& s) const;
};

/// <{S_k}, B, f̃>. `step` and `initial` never consult model parameters; only
/// `decode` does.
class IerDefinition {
public:
    virtual ~IerDefinition() = default;

    virtual std::size_t prescription_count() const = 0;
    virtual std::size_t observation_count() const = 0;
    virtual IerState initial() const = 0;
    virtual IerState step(const IerState& s, std::size_t g, std::size_t z) const = 0;
    virtual BeliefState decode(const IerState& s) const = 0;
    virtual std::string label(const IerState& s) const = 0;
};

/// The model-free IER every PHS system has: states are common histories,
/// f̃(s, g, z) = s ∘ (g, z), and B folds phi over the history from pi_1.
class HistoryIer final : public IerDefinition {
public:
    explicit HistoryIer(std::shared_ptr<const CoordinatedModel> model);

    std::size_t prescription_count() const override { return model_->prescription_count(); }
    std::size_t observation_count() const override { return model_->observation_count(); }
    IerState initial() const override;
    IerState step(const IerState& s, std::size_t g, std::size_t z) const override;
    BeliefState decode(const IerState& s) const override;
    std::string label(const IerState& s) const override;

private:
    std::shared_ptr<const CoordinatedModel> model_;
};

struct ConsistencyReport {
    bool passed = true;
    double max_deviation = 0.0;
    std::size_t sequences_checked = 0;
    /// First violating (g, z) sequence, truncated at the violating step.
    History counterexample;
    std::string message;
};

/// Samples `trials` random (g, z) sequences of length `horizon` (g uniform,
/// z drawn from the model given the current belief) and checks
/// decode(s_t) == phi-fold(pi_1) within `tolerance` at every step.
ConsistencyReport ier_consistency_check(const IerDefinition& ier, const CoordinatedModel& model,
                                        int horizon, int trials, RandomStream& rng,
                                        double tolerance = BeliefState::kTolerance);

using CostOracle = std::function<double(const IerState&, std::size_t g)>;

/// Finite truncation Δ_N of the countable MDP induced by an IER. Transitions
/// that would leave S_N are redirected to a single reset target d*.
/// Immutable after construction.
class TruncatedMdp {
public:
    struct Transition {
        std::size_t next;
        bool remapped;
    };

    int level() const { return level_; }
    double beta() const { return beta_; }
    std::size_t state_count() const { return states_.size(); }
    std::size_t action_count() const { return action_count_; }
    std::size_t observation_count() const { return observation_count_; }
    std::size_t initial_index() const { return 0; }
    std::size_t dstar_index() const { return dstar_; }

    const IerState& state(std::size_t i) const { return states_.at(i); }
    const std::string& label(std::size_t i) const { return labels_.at(i); }
    std::optional<std::size_t> index_of(const IerState& s) const;

    Transition transition(std::size_t s, std::size_t g, std::size_t z) const {
        return table_[(s * action_count_ + g) * observation_count_ + z];
    }

    bool has_costs() const { return !costs_.empty(); }
    /// ℓ̃ restricted to S_N × G; only available when built with a cost oracle.
    double cost(std::size_t s, std::size_t g) const;

    /// Deterministic text dump: header, then one line per (s, g, z).
    void serialize(std::ostream& out) const;
    std::string serialize() const;

private:
    friend TruncatedMdp build_truncated(const IerDefinition&, int, const IerState&, double,
                                        const CostOracle&);
    int level_ = 1;
    double beta_ = 0.9;
    std::size_t action_count_ = 0;
    std::size_t observation_count_ = 0;
    std::size_t dstar_ = 0;
    std::vector<IerState> states_;
    std::vector<std::string> labels_;
    std::vector<Transition> table_;
    std::vector<double> costs_;
    std::unordered_map<IerState, std::size_t, IerStateHash> index_;
};

/// Enumerates S_N breadth-first from s* in canonical (g, z) order and remaps
/// every transition leaving S_N to `dstar`. Throws ConfigError when dstar is
/// not in S_N or N < 1.
TruncatedMdp build_truncated(const IerDefinition& ier, int level, const IerState& dstar,
                             double beta, const CostOracle& cost = {});

/// 2 β^k L / (1 − β).
double error_bound(double beta, int k, double cost_bound);

/// Smallest N >= 1 with error_bound(beta, N, L) <= epsilon.
int min_truncation_level(double beta, double cost_bound, double epsilon);

struct TauEstimate {
    bool infinite = false;
    int value = 0;          // meaningful when !infinite
    bool capped = false;    // search stopped at the horizon cap; value is a lower bound
};

/// Longest time the chain started at s* stays inside S_N under `strategy`,
/// over every observation sample path. Infinite when the set of states
/// reachable under the strategy is closed in S_N.
TauEstimate tau_n_estimate(const TruncatedMdp& mdp, const std::vector<std::size_t>& strategy,
                           int horizon_cap);

} // namespace phsrl
