#include <doctest.h>

#include <cmath>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "phsrl/ier.hpp"
#include "phsrl/mabc.hpp"

using namespace phsrl;
using namespace phsrl::mabc;

namespace {

std::shared_ptr<const MabcCoordinatedModel> channel_model() {
    return std::make_shared<const MabcCoordinatedModel>(MabcConfig{});
}

std::size_t index_of(const TruncatedMdp& mdp, const SymbolicState& s) {
    const auto i = mdp.index_of(s.to_ier());
    REQUIRE(i.has_value());
    return *i;
}

std::size_t g_of(const MabcProblem& p, MabcAction a) {
    for (std::size_t g = 0; g < p.prescriptions.size(); ++g)
        if (action_of(p.prescriptions[g]) == a) return g;
    FAIL("missing action");
    return 0;
}

// Decodes one extra idle step off: the belief of a neighbouring state.
class ShiftedIer final : public IerDefinition {
public:
    explicit ShiftedIer(MabcConfig cfg) : inner_(cfg), cfg_(cfg) {}
    std::size_t prescription_count() const override { return inner_.prescription_count(); }
    std::size_t observation_count() const override { return 4; }
    IerState initial() const override { return inner_.initial(); }
    IerState step(const IerState& s, std::size_t g, std::size_t z) const override { return inner_.step(s, g, z); }
    BeliefState decode(const IerState& s) const override {
        const auto sym = SymbolicState::from_ier(s);
        if (sym.tag() == SymbolicState::Tag::TopEdge)
            return to_joint(mabc_decode(SymbolicState::top_edge(sym.k1() + 1), cfg_));
        return inner_.decode(s);
    }
    std::string label(const IerState& s) const override { return inner_.label(s); }

private:
    MabcIer inner_;
    MabcConfig cfg_;
};

} // namespace

TEST_CASE("history representation appends and folds") {
    const auto model = channel_model();
    const HistoryIer ier(model);
    const IerState root = ier.initial();
    CHECK(root.expansion_index == 1);
    CHECK(std::get<History>(root.repr).empty());

    const IerState s = ier.step(root, 2, 1);
    CHECK(std::get<History>(s.repr) == History{{2, 1}});
    CHECK(s.expansion_index == 2);

    CHECK(ier.decode(root).max_abs_difference(model->initial_belief()) == 0.0);
    // user 2 scheduled and heard: phi applied once
    const IerState heard = ier.step(root, 0, 1);
    CHECK(ier.decode(heard).max_abs_difference(model->update(model->initial_belief(), 0, 1)) == 0.0);
}

TEST_CASE("consistency audit passes for both representations and catches a bad decoder") {
    const auto model = channel_model();
    RandomStream rng(1);
    const auto channel = ier_consistency_check(MabcIer(MabcConfig{}), *model, 50, 1000, rng);
    CHECK(channel.passed);
    CHECK(channel.max_deviation < 1e-12);
    CHECK(channel.sequences_checked == 1000);

    RandomStream rng2(2);
    const auto history = ier_consistency_check(HistoryIer(model), *model, 12, 200, rng2);
    CHECK(history.passed);
    CHECK(history.max_deviation == 0.0);

    RandomStream rng3(3);
    const auto broken = ier_consistency_check(ShiftedIer(MabcConfig{}), *model, 50, 100, rng3);
    CHECK_FALSE(broken.passed);
    CHECK_FALSE(broken.counterexample.empty());
}

TEST_CASE("one-level expansion holds exhaustively up to level 6") {
    const auto model = channel_model();
    const HistoryIer history(model);
    std::vector<IerState> layer{history.initial()};
    for (int k = 1; k <= 5; ++k) {
        std::vector<IerState> next;
        for (const auto& s : layer)
            for (std::size_t g = 0; g < history.prescription_count(); ++g)
                for (std::size_t z = 0; z < history.observation_count(); ++z) {
                    auto t = history.step(s, g, z);
                    CHECK(t.expansion_index <= s.expansion_index + 1);
                    next.push_back(std::move(t));
                }
        layer = std::move(next);
    }
    CHECK(layer.size() == 248832); // 12^5 histories of length 5

    for (bool idle : {false, true}) {
        const MabcIer ier(MabcConfig{}, idle);
        for (std::int64_t k1 = -1; k1 <= 6; ++k1)
            for (std::int64_t k2 = -1; k2 <= 6; ++k2) {
                const auto s = SymbolicState::grid(k1, k2);
                if (s.expansion_index() > 6) continue;
                for (std::size_t g = 0; g < ier.prescription_count(); ++g)
                    for (std::size_t z = 0; z < 4; ++z)
                        CHECK(ier.step(s.to_ier(), g, z).expansion_index <= s.expansion_index() + 1);
            }
    }
}

TEST_CASE("channel truncation at level 2") {
    const auto p = make_problem([] {
        MabcConfig c;
        c.N = 2;
        return c;
    }());
    const auto& mdp = p.mdp;
    REQUIRE(mdp.state_count() == 6);
    std::set<std::string> labels;
    for (std::size_t i = 0; i < mdp.state_count(); ++i) labels.insert(mdp.label(i));
    CHECK(labels == std::set<std::string>{"origin", "top(1)", "right(1)", "corner", "top-limit", "right-limit"});
    CHECK(mdp.initial_index() == 0);
    CHECK(mdp.dstar_index() == index_of(mdp, SymbolicState::right_edge(1)));

    const auto t = mdp.transition(index_of(mdp, SymbolicState::right_edge(1)), g_of(p, kUser2), 1);
    CHECK(t.remapped);
    CHECK(t.next == mdp.dstar_index());
    for (std::size_t s = 0; s < mdp.state_count(); ++s)
        for (std::size_t g = 0; g < mdp.action_count(); ++g)
            for (std::size_t z = 0; z < 4; ++z) CHECK(mdp.transition(s, g, z).next < mdp.state_count());
}

TEST_CASE("truncation serialization is deterministic and matches the golden file") {
    MabcConfig c;
    c.N = 2;
    const std::string a = make_problem(c).mdp.serialize();
    const std::string b = make_problem(c).mdp.serialize();
    CHECK(a == b);
    std::ifstream in(std::string(PHSRL_GOLDEN_DIR) + "/mabc_n2.txt");
    REQUIRE(in.good());
    std::stringstream golden;
    golden << in.rdbuf();
    CHECK(a == golden.str());
}

TEST_CASE("history truncation at level 1 is a single self-looping state") {
    const auto model = channel_model();
    const HistoryIer ier(model);
    const auto mdp = build_truncated(ier, 1, ier.initial(), 0.9);
    REQUIRE(mdp.state_count() == 1);
    for (std::size_t g = 0; g < mdp.action_count(); ++g)
        for (std::size_t z = 0; z < mdp.observation_count(); ++z) {
            CHECK(mdp.transition(0, g, z).next == 0);
            CHECK(mdp.transition(0, g, z).remapped);
        }
}

TEST_CASE("reset target outside the truncation is a configuration error") {
    const MabcIer ier(MabcConfig{});
    CHECK_THROWS_AS(build_truncated(ier, 2, SymbolicState::right_edge(5).to_ier(), 0.9), ConfigError);
    CHECK_THROWS_AS(build_truncated(ier, 0, ier.initial(), 0.9), ConfigError);
}

TEST_CASE("error bound") {
    CHECK(error_bound(0.9, 10, 1.0) == doctest::Approx(2 * std::pow(0.9, 10) / 0.1));
    CHECK(error_bound(0.9, 10, 1.0) == doctest::Approx(6.9736).epsilon(1e-4));
    CHECK(error_bound(0.9, 7, 0.0) == 0.0);
    CHECK_THROWS_AS(error_bound(1.0, 3, 1.0), std::domain_error);
    CHECK_THROWS_AS(error_bound(0.0, 3, 1.0), std::domain_error);
    for (int n = 1; n < 40; ++n) CHECK(error_bound(0.9, n + 1, 1.0) < error_bound(0.9, n, 1.0));
    for (double b = 0.1; b < 0.95; b += 0.05) CHECK(error_bound(b, 5, 1.0) < error_bound(b + 0.01, 5, 1.0));
}

TEST_CASE("smallest truncation level for a target error") {
    auto scan = [](double beta, double L, double eps) {
        int n = 1;
        while (2 * std::pow(beta, n) * L / (1 - beta) > eps) ++n;
        return n;
    };
    CHECK(min_truncation_level(0.9, 1.0, 0.1) == 51);
    CHECK(min_truncation_level(0.9, 1.0, 0.1) == scan(0.9, 1.0, 0.1));
    CHECK(min_truncation_level(0.9, 1.0, 18.0 + 1e-9) == 1);
    CHECK(min_truncation_level(0.9, 0.0, 1e-6) == 1);
    CHECK(min_truncation_level(0.99, 1.0, 0.01) == scan(0.99, 1.0, 0.01));
    CHECK(min_truncation_level(0.99, 1.0, 0.01) ==
          static_cast<int>(std::ceil(std::log(0.01 * 0.01 / 2) / std::log(0.99))));
    for (double eps : {1e-3, 0.05, 0.5, 3.0, 17.0})
        for (double beta : {0.5, 0.8, 0.95}) CHECK(min_truncation_level(beta, 1.0, eps) == scan(beta, 1.0, eps));
}

TEST_CASE("time spent inside the truncation") {
    MabcConfig c;
    c.N = 6;
    const auto p = make_problem(c);
    std::vector<std::size_t> always_user1(p.mdp.state_count(), g_of(p, kUser1));
    const auto tau = tau_n_estimate(p.mdp, always_user1, 60);
    CHECK_FALSE(tau.infinite);
    CHECK(tau.value == c.N);

    // alternate users from the origin: the chain never leaves the first levels
    std::vector<std::size_t> alternate(p.mdp.state_count(), g_of(p, kUser2));
    alternate[p.mdp.initial_index()] = g_of(p, kUser1);
    alternate[index_of(p.mdp, SymbolicState::top_edge(1))] = g_of(p, kUser2);
    alternate[index_of(p.mdp, SymbolicState::right_edge(1))] = g_of(p, kUser1);
    const auto closed = tau_n_estimate(p.mdp, alternate, 60);
    CHECK(closed.infinite);
}
