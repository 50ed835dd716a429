#include "phsrl/qlearning.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <fmt/format.h>

namespace phsrl {

double StepSizeSchedule::at(std::uint64_t visits) const {
    switch (kind) {
    case Kind::Harmonic: return 1.0 / (1.0 + static_cast<double>(visits));
    case Kind::Constant: return constant;
    case Kind::Polynomial: return std::pow(1.0 + static_cast<double>(visits), -exponent);
    }
    return 1.0;
}

QTable::QTable(std::size_t states, std::size_t actions)
    : states_(states), actions_(actions), q_(states * actions, 0.0), alpha_(states * actions, 1.0),
      visits_(states * actions, 0) {
    if (states == 0 || actions == 0) throw std::invalid_argument("QTable needs states and actions");
}

std::size_t QTable::at(std::size_t s, std::size_t a) const {
    if (s >= states_ || a >= actions_)
        throw std::out_of_range(fmt::format("QTable index ({}, {}) out of range", s, a));
    return s * actions_ + a;
}

std::uint64_t QTable::state_visits(std::size_t s) const {
    std::uint64_t total = 0;
    for (std::size_t a = 0; a < actions_; ++a) total += visits_[at(s, a)];
    return total;
}

double QTable::min_value(std::size_t s) const { return q_[at(s, argmin(s))]; }

std::size_t QTable::argmin(std::size_t s) const {
    const std::size_t base = at(s, 0);
    std::size_t best = 0;
    for (std::size_t a = 1; a < actions_; ++a)
        if (q_[base + a] < q_[base + best]) best = a;
    return best;
}

void QTable::set_entry(std::size_t s, std::size_t a, double value, std::uint64_t visits,
                       const StepSizeSchedule& schedule) {
    const std::size_t i = at(s, a);
    q_[i] = value;
    visits_[i] = visits;
    alpha_[i] = schedule.at(visits);
}

double QTable::update(std::size_t s, std::size_t a, double cost, std::size_t next, double beta,
                      const StepSizeSchedule& schedule) {
    const std::size_t i = at(s, a);
    const double alpha = alpha_[i];
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::logic_error("step size outside (0, 1]");
    const double target = cost + beta * min_value(next);
    const double old = q_[i];
    q_[i] = (1.0 - alpha) * old + alpha * target;
    ++visits_[i];
    alpha_[i] = schedule.at(visits_[i]);
    return std::abs(q_[i] - old);
}

double QTable::max_abs_value() const {
    double worst = 0.0;
    for (double v : q_) worst = std::max(worst, std::abs(v));
    return worst;
}

bool QTable::identical(const QTable& other) const {
    return states_ == other.states_ && actions_ == other.actions_ &&
           std::memcmp(q_.data(), other.q_.data(), q_.size() * sizeof(double)) == 0 &&
           std::memcmp(alpha_.data(), other.alpha_.data(), alpha_.size() * sizeof(double)) == 0 &&
           visits_ == other.visits_;
}

double q_update(QTable& q, std::size_t s, std::size_t a, double cost, std::size_t next, double beta,
                const StepSizeSchedule& schedule) {
    return q.update(s, a, cost, next, beta, schedule);
}

std::size_t explore_action(SharedRandomSource& rng, std::size_t action_count) {
    if (action_count == 0) throw std::invalid_argument("explore_action: no actions");
    return rng.index(action_count);
}

LearnedStrategy greedy_strategy(const QTable& q) {
    LearnedStrategy psi;
    psi.actions.reserve(q.state_count());
    for (std::size_t s = 0; s < q.state_count(); ++s) psi.actions.push_back(q.argmin(s));
    return psi;
}

} // namespace phsrl
