#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "phsrl/random.hpp"

namespace phsrl {

/// Step-size rule applied after each visit. Harmonic is 1/(1 + visits),
/// i.e. 1/alpha grows by one per visit.
struct StepSizeSchedule {
    enum class Kind { Harmonic, Constant, Polynomial };
    Kind kind = Kind::Harmonic;
    double constant = 0.1;  // Constant
    double exponent = 0.8;  // Polynomial: 1/(1 + visits)^exponent

    double at(std::uint64_t visits) const;
};

/// Dense Q(s, a) with per-pair step sizes and visit counts.
class QTable {
public:
    QTable(std::size_t states, std::size_t actions);

    std::size_t state_count() const { return states_; }
    std::size_t action_count() const { return actions_; }

    double value(std::size_t s, std::size_t a) const { return q_[at(s, a)]; }
    double step_size(std::size_t s, std::size_t a) const { return alpha_[at(s, a)]; }
    std::uint64_t visits(std::size_t s, std::size_t a) const { return visits_[at(s, a)]; }
    std::uint64_t state_visits(std::size_t s) const;

    double min_value(std::size_t s) const;
    /// Lowest-index minimizer.
    std::size_t argmin(std::size_t s) const;

    /// Overwrite one entry; alpha follows `schedule` at the given visit count.
    void set_entry(std::size_t s, std::size_t a, double value, std::uint64_t visits,
                   const StepSizeSchedule& schedule = {});

    /// One Q-learning update at (s, a); returns |ΔQ(s, a)|.
    double update(std::size_t s, std::size_t a, double cost, std::size_t next, double beta,
                  const StepSizeSchedule& schedule = {});

    std::span<const double> values() const { return q_; }
    std::span<const std::uint64_t> visit_counts() const { return visits_; }
    double max_abs_value() const;

    /// Bitwise equality of values, step sizes and visit counts.
    bool identical(const QTable& other) const;

private:
    std::size_t at(std::size_t s, std::size_t a) const;

    std::size_t states_;
    std::size_t actions_;
    std::vector<double> q_;
    std::vector<double> alpha_;
    std::vector<std::uint64_t> visits_;
};

/// Free-function form of QTable::update.
double q_update(QTable& q, std::size_t s, std::size_t a, double cost, std::size_t next, double beta,
                const StepSizeSchedule& schedule = {});

/// Uniform action index; consumes exactly one tick of `rng`.
std::size_t explore_action(SharedRandomSource& rng, std::size_t action_count);

/// Coordinator strategy on S_N: state index -> prescription index.
struct LearnedStrategy {
    std::vector<std::size_t> actions;
    std::string tie_break = "lowest-index";

    std::size_t operator()(std::size_t s) const { return actions.at(s); }
    bool operator==(const LearnedStrategy& other) const { return actions == other.actions; }
};

/// Per state, the Q-minimizing action; ties go to the lowest index.
LearnedStrategy greedy_strategy(const QTable& q);

} // namespace phsrl
