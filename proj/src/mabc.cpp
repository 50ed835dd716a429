#include "phsrl/mabc.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace phsrl::mabc {

std::vector<std::string> MabcConfig::validate() const {
    auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!open_unit(p1) || !open_unit(p2)) throw ConfigError("arrival probabilities must lie strictly inside (0,1)");
    if (!open_unit(beta)) throw ConfigError("beta must lie strictly inside (0,1)");
    if (!open_unit(b1) || !open_unit(b2)) throw ConfigError("b1 and b2 must lie strictly inside (0,1)");
    if (l1 > 0.0 || l2 > 0.0) throw ConfigError("successful-transmission costs l1 and l2 must be <= 0");
    if (!(L >= 0.0)) throw ConfigError("cost bound L must be nonnegative");
    if (std::abs(l1) > L || std::abs(l2) > L || std::abs(l3) > L)
        throw ConfigError(fmt::format("|l_j| must not exceed L = {}", L));
    if (N < 1) throw ConfigError("truncation level N must be at least 1");

    std::vector<std::string> warnings;
    if (l3 < std::max(l1, l2))
        warnings.push_back(fmt::format("collision cost l3 = {} is below max(l1, l2); collisions look attractive", l3));
    return warnings;
}

double tight_cost_bound(const MabcConfig& config) {
    return std::max({std::abs(config.l1), std::abs(config.l2), std::abs(config.l3)});
}

std::string MabcAction::label() const { return fmt::format("({},{})", a1, a2); }

double idle_update(double q, double p) { return 1.0 - (1.0 - p) * (1.0 - q); }

BeliefPair mabc_phi(const BeliefPair& pi, MabcAction a, const Pair& u, const MabcConfig& config) {
    if (a == kIdle) return {idle_update(pi[0], config.p1), idle_update(pi[1], config.p2)};
    if (a == kUser1) return {config.p1, idle_update(pi[1], config.p2)};
    if (a == kUser2) return {idle_update(pi[0], config.p1), config.p2};
    if (u[0] == 1 && u[1] == 1) return {1.0, 1.0};
    return {config.p1, config.p2};
}

double mabc_cost_hat(const BeliefPair& pi, MabcAction a, const MabcConfig& config) {
    if (a == kIdle) return 0.0;
    if (a == kUser1) return config.l1 * pi[0];
    if (a == kUser2) return config.l2 * pi[1];
    return config.l1 * pi[0] + config.l2 * pi[1] + (config.l3 - config.l1 - config.l2) * pi[0] * pi[1];
}

double mabc_cost(const Pair& u, const MabcConfig& config) {
    if (u[0] == 1 && u[1] == 1) return config.l3;
    if (u[0] == 1) return config.l1;
    if (u[1] == 1) return config.l2;
    return 0.0;
}

TrueStep mabc_true_step(const Pair& x, const Pair& u, const Pair& w, const MabcConfig& config) {
    for (int i = 0; i < 2; ++i)
        if (u[i] > x[i])
            throw FeasibilityError(static_cast<std::size_t>(i),
                                   fmt::format("agent {} cannot transmit from an empty buffer", i));
    TrueStep out{mabc_cost(u, config), {}, u};
    const int both = u[0] * u[1];
    for (int i = 0; i < 2; ++i) out.next[i] = std::min(x[i] - u[i] + both + w[i], 1);
    return out;
}

// ---------------------------------------------------------------------------

SymbolicState::Tag SymbolicState::tag() const {
    const bool inf1 = k1_ == kInfinite;
    const bool inf2 = k2_ == kInfinite;
    if (inf1 && inf2) return Tag::Corner;
    if (inf1 && k2_ == 0) return Tag::TopLimit;
    if (inf2 && k1_ == 0) return Tag::RightLimit;
    if (k1_ == 0 && k2_ == 0) return Tag::Origin;
    if (!inf1 && k1_ > 0 && k2_ == 0) return Tag::TopEdge;
    if (!inf2 && k2_ > 0 && k1_ == 0) return Tag::RightEdge;
    return Tag::Interior;
}

int SymbolicState::expansion_index() const {
    if (k1_ == 0 && k2_ == 0) return 1;
    std::int64_t finite = 0;
    if (k1_ != kInfinite) finite = std::max(finite, k1_);
    if (k2_ != kInfinite) finite = std::max(finite, k2_);
    return static_cast<int>(std::max<std::int64_t>(2, finite + 1));
}

std::string SymbolicState::label() const {
    auto idx = [](std::int64_t k) { return k == kInfinite ? std::string("inf") : std::to_string(k); };
    switch (tag()) {
    case Tag::Origin: return "origin";
    case Tag::TopEdge: return fmt::format("top({})", k1_);
    case Tag::RightEdge: return fmt::format("right({})", k2_);
    case Tag::TopLimit: return "top-limit";
    case Tag::RightLimit: return "right-limit";
    case Tag::Corner: return "corner";
    case Tag::Interior: break;
    }
    return fmt::format("grid({},{})", idx(k1_), idx(k2_));
}

SymbolicState SymbolicState::from_ier(const IerState& s) {
    const auto* tag = std::get_if<SymbolicTag>(&s.repr);
    if (!tag) throw std::invalid_argument("not a symbolic channel state");
    return SymbolicState(tag->first, tag->second);
}

namespace {

std::int64_t advance(std::int64_t k) { return k == SymbolicState::kInfinite ? k : k + 1; }

double iterate_idle(double start, double p, std::int64_t k) {
    if (k == SymbolicState::kInfinite) return 1.0;
    double q = start;
    for (std::int64_t i = 0; i < k; ++i) q = idle_update(q, p);
    return q;
}

} // namespace

SymbolicState mabc_ier_step(const SymbolicState& s, MabcAction a, const Pair& u) {
    if (a == kUser1) return SymbolicState::grid(advance(s.k1()), 0);
    if (a == kUser2) return SymbolicState::grid(0, advance(s.k2()));
    if (a == kIdle) return SymbolicState::grid(advance(s.k1()), advance(s.k2()));
    if (u[0] == 1 && u[1] == 1) return SymbolicState::corner();
    return SymbolicState::origin();
}

BeliefPair mabc_decode(const SymbolicState& s, const MabcConfig& config) {
    return {iterate_idle(config.p1, config.p1, s.k2()), iterate_idle(config.p2, config.p2, s.k1())};
}

std::pair<double, double> mabc_embedding(const SymbolicState& s, double b1, double b2) {
    auto coord = [](double b, std::int64_t k) {
        return k == SymbolicState::kInfinite ? 1.0 : 1.0 - std::pow(b, static_cast<double>(k));
    };
    return {coord(b2, s.k2()), coord(b1, s.k1())};
}

bool in_reachable_set(const BeliefPair& pi, const MabcConfig& config, int max_index, double tol) {
    auto near = [tol](const BeliefPair& a, const BeliefPair& b) {
        return std::abs(a[0] - b[0]) <= tol && std::abs(a[1] - b[1]) <= tol;
    };
    const BeliefPair fixed[] = {{1.0, 1.0}, {config.p1, 1.0}, {1.0, config.p2}, {config.p1, config.p2}};
    for (const auto& f : fixed)
        if (near(pi, f)) return true;
    double top = config.p2;
    double right = config.p1;
    for (int n = 1; n <= max_index; ++n) {
        top = idle_update(top, config.p2);
        right = idle_update(right, config.p1);
        if (near(pi, {config.p1, top}) || near(pi, {right, config.p2})) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------

InformationStructure mabc_information_structure(const MabcConfig& config) {
    InformationStructure info;
    info.action_counts = {2, 2};
    info.local_info_counts = {2, 2};
    info.observation_count = 4;
    info.beta = config.beta;
    info.cost_bound = config.L;
    return info;
}

MabcAction action_of(const Prescription& p) {
    if (p.per_agent.size() != 2 || p.per_agent[0].size() != 2 || p.per_agent[1].size() != 2)
        throw std::invalid_argument("not a channel prescription");
    if (p.per_agent[0][0] != 0 || p.per_agent[1][0] != 0)
        throw std::invalid_argument("channel prescriptions must keep empty buffers silent");
    return {p.per_agent[0][1], p.per_agent[1][1]};
}

PrescriptionSpace mabc_prescriptions(const MabcConfig& config, bool include_idle) {
    const auto info = mabc_information_structure(config);
    auto labeler = [](const Prescription& p) { return action_of(p).label(); };
    const auto all = PrescriptionSpace::enumerate(
        info, [](std::size_t, int m, int u) { return m == 1 || u == 0; }, labeler);
    std::vector<Prescription> kept;
    for (const auto& p : all.members())
        if (include_idle || !(action_of(p) == kIdle)) kept.push_back(p);
    return PrescriptionSpace(info, std::move(kept), labeler);
}

BeliefState to_joint(const BeliefPair& pi) {
    const double a = pi[0];
    const double b = pi[1];
    return BeliefState{{(1 - a) * (1 - b), (1 - a) * b, a * (1 - b), a * b}};
}

BeliefPair marginals(const BeliefState& belief) {
    const auto& p = belief.probabilities;
    if (p.size() != 4) throw std::invalid_argument("channel beliefs have four entries");
    return {p[2] + p[3], p[1] + p[3]};
}

namespace {

std::vector<MabcAction> actions_from(const PrescriptionSpace& space) {
    std::vector<MabcAction> actions;
    for (const auto& p : space.members()) actions.push_back(action_of(p));
    return actions;
}

} // namespace

MabcCoordinatedModel::MabcCoordinatedModel(MabcConfig config, bool include_idle)
    : config_(std::move(config)), actions_(actions_from(mabc_prescriptions(config_, include_idle))) {
    config_.validate();
}

BeliefState MabcCoordinatedModel::initial_belief() const { return to_joint({config_.p1, config_.p2}); }

std::vector<double> MabcCoordinatedModel::observation_probabilities(const BeliefState& belief,
                                                                    std::size_t g) const {
    const MabcAction a = actions_.at(g);
    std::vector<double> probs(4, 0.0);
    for (int x1 = 0; x1 < 2; ++x1)
        for (int x2 = 0; x2 < 2; ++x2)
            probs[observation_index({a.a1 * x1, a.a2 * x2})] += belief.probabilities.at(2 * x1 + x2);
    return probs;
}

BeliefState MabcCoordinatedModel::update(const BeliefState& belief, std::size_t g, std::size_t z) const {
    return to_joint(mabc_phi(marginals(belief), actions_.at(g), observation_pair(z), config_));
}

double MabcCoordinatedModel::expected_cost(const BeliefState& belief, std::size_t g) const {
    return mabc_cost_hat(marginals(belief), actions_.at(g), config_);
}

MabcIer::MabcIer(MabcConfig config, bool include_idle)
    : config_(std::move(config)), actions_(actions_from(mabc_prescriptions(config_, include_idle))) {}

IerState MabcIer::step(const IerState& s, std::size_t g, std::size_t z) const {
    return mabc_ier_step(SymbolicState::from_ier(s), actions_.at(g), observation_pair(z)).to_ier();
}

BeliefState MabcIer::decode(const IerState& s) const {
    return to_joint(mabc_decode(SymbolicState::from_ier(s), config_));
}

std::string MabcIer::label(const IerState& s) const { return SymbolicState::from_ier(s).label(); }

// ---------------------------------------------------------------------------

MabcEnvironment::MabcEnvironment(MabcConfig config)
    : config_(std::move(config)), info_(mabc_information_structure(config_)) {
    config_.validate();
}

void MabcEnvironment::restart(RandomStream& rng) {
    x_ = {0, 0};
    const Pair w{rng.bernoulli(config_.p1) ? 1 : 0, rng.bernoulli(config_.p2) ? 1 : 0};
    x_ = mabc_true_step(x_, {0, 0}, w, config_).next;
}

void MabcEnvironment::check_feasible(const JointAction& action) const {
    for (std::size_t i = 0; i < 2; ++i)
        if (action.per_agent[i] > x_[i])
            throw FeasibilityError(i, fmt::format("agent {} cannot transmit from an empty buffer", i));
}

StepResult MabcEnvironment::step_with_arrivals(const JointAction& u, const Pair& w) {
    if (u.per_agent.size() != 2) throw std::invalid_argument("channel actions have two entries");
    check_feasible(u);
    const auto out = mabc_true_step(x_, {u.per_agent[0], u.per_agent[1]}, w, config_);
    x_ = out.next;
    return StepResult{out.cost, CommonObservation{observation_index(out.observed)}, local_info()};
}

StepResult MabcEnvironment::do_step(const JointAction& action, RandomStream& rng) {
    const Pair w{rng.bernoulli(config_.p1) ? 1 : 0, rng.bernoulli(config_.p2) ? 1 : 0};
    return step_with_arrivals(action, w);
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> mabc_reset_sequence(const PrescriptionSpace& prescriptions) {
    std::vector<std::size_t> seq;
    for (MabcAction a : {kUser1, kUser2}) {
        bool found = false;
        for (std::size_t g = 0; g < prescriptions.size(); ++g)
            if (action_of(prescriptions[g]) == a) {
                seq.push_back(g);
                found = true;
            }
        if (!found) throw ConfigError("reset sequence needs single-user transmissions");
    }
    return seq;
}

SymbolicState mabc_reset_target() { return SymbolicState::right_edge(1); }

LearningProblem MabcProblem::learning_problem() const {
    return LearningProblem{&mdp, &prescriptions, reset_sequence};
}

MabcProblem make_problem(const MabcConfig& config, bool include_idle, std::optional<SymbolicState> dstar) {
    config.validate();
    auto model = std::make_shared<const MabcCoordinatedModel>(config, include_idle);
    auto ier = std::make_shared<const MabcIer>(config, include_idle);
    auto prescriptions = mabc_prescriptions(config, include_idle);
    const SymbolicState target = dstar.value_or(mabc_reset_target());
    auto cost = [&model, &ier](const IerState& s, std::size_t g) {
        return phsrl::expected_cost(*model, ier->decode(s), g);
    };
    TruncatedMdp mdp = build_truncated(*ier, config.N, target.to_ier(), config.beta, cost);
    auto reset = mabc_reset_sequence(prescriptions);
    return MabcProblem{config, std::move(model), std::move(ier), std::move(prescriptions), std::move(mdp),
                       std::move(reset)};
}

Algorithm2Result run_algorithm2(const MabcProblem& problem, std::uint64_t seed, std::uint64_t iterations,
                                LearningOptions options) {
    if (problem.config.N < 2) throw ConfigError("the channel learner needs N >= 2");
    options.iterations = iterations;
    options.beta = problem.config.beta;
    options.cost_bound = problem.config.L;
    MabcEnvironment env(problem.config);
    SharedRandomSource explore(seed);
    RandomStream nature = RandomStream(seed).fork(0x6e6174757265ULL);
    const auto lp = problem.learning_problem();
    LearningResult learning = run_learning(lp, env, explore, nature, options);
    AgentStrategy agents = translate_strategy(learning.strategy, problem.prescriptions);
    return Algorithm2Result{std::move(learning), std::move(agents)};
}

} // namespace phsrl::mabc
