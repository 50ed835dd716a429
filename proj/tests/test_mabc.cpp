#include <doctest.h>

#include <cmath>

#include "brute_force.hpp"
#include "phsrl/mabc.hpp"
#include "phsrl/oracle.hpp"

using namespace phsrl;
using namespace phsrl::mabc;

namespace {

constexpr std::array<MabcAction, 4> kAll{kIdle, kUser2, kUser1, kBoth};

// Draw an observation with positive probability under a product belief.
Pair sample_observation(const BeliefPair& pi, MabcAction a, RandomStream& rng) {
    const int x1 = rng.bernoulli(pi[0]) ? 1 : 0;
    const int x2 = rng.bernoulli(pi[1]) ? 1 : 0;
    return {a.a1 * x1, a.a2 * x2};
}

} // namespace

TEST_CASE("true channel step") {
    const MabcConfig c;
    auto s = mabc_true_step({1, 1}, {1, 1}, {0, 0}, c);
    CHECK(s.cost == c.l3);
    CHECK(s.next == Pair{1, 1});
    s = mabc_true_step({1, 0}, {1, 0}, {0, 1}, c);
    CHECK(s.cost == c.l1);
    CHECK(s.next == Pair{0, 1});
    s = mabc_true_step({1, 1}, {0, 1}, {1, 0}, c);
    CHECK(s.cost == c.l2);
    CHECK(s.next == Pair{1, 0});
    CHECK(s.observed == Pair{0, 1});
    CHECK_THROWS_AS(mabc_true_step({0, 1}, {1, 0}, {0, 0}, c), FeasibilityError);
}

TEST_CASE("closed-form belief update agrees with Bayes on the buffers") {
    const MabcConfig c;
    const brute::Channel ch;
    RandomStream rng(1);
    for (int i = 0; i < 3000; ++i) {
        const BeliefPair pi{rng.uniform(), rng.uniform()};
        for (MabcAction a : kAll)
            for (int u1 = 0; u1 <= a.a1; ++u1)
                for (int u2 = 0; u2 <= a.a2; ++u2) {
                    double evidence = 0.0;
                    const auto post = brute::bayes(ch, brute::product(pi[0], pi[1]), a.a1, a.a2, u1, u2, &evidence);
                    if (evidence <= 0.0) continue;
                    const auto ref = brute::marginals(post);
                    const auto got = mabc_phi(pi, a, {u1, u2}, c);
                    CHECK(got[0] == doctest::Approx(ref[0]).epsilon(1e-12));
                    CHECK(got[1] == doctest::Approx(ref[1]).epsilon(1e-12));
                    // the posterior stays a product of its marginals
                    const auto prod = brute::product(ref[0], ref[1]);
                    for (int k = 0; k < 4; ++k) CHECK(post[k] == doctest::Approx(prod[k]).epsilon(1e-12));
                }
    }
}

TEST_CASE("belief update cases at the default arrival rates") {
    const MabcConfig c;
    const brute::Channel ch;
    auto ref = [&](double q1, double q2, int a1, int a2, int u1, int u2) {
        return brute::marginals(brute::bayes(ch, brute::product(q1, q2), a1, a2, u1, u2));
    };
    auto r = mabc_phi({0.3, 0.6}, kUser1, {1, 0}, c);
    CHECK(r[0] == doctest::Approx(ref(0.3, 0.6, 1, 0, 1, 0)[0]));
    CHECK(r[1] == doctest::Approx(ref(0.3, 0.6, 1, 0, 1, 0)[1]));
    r = mabc_phi({0.3, 0.6}, kBoth, {0, 1}, c);
    CHECK(r == BeliefPair{0.3, 0.6});
    r = mabc_phi({0.5, 0.5}, kIdle, {0, 0}, c);
    CHECK(r[0] == doctest::Approx(ref(0.5, 0.5, 0, 0, 0, 0)[0]));
    CHECK(r[1] == doctest::Approx(ref(0.5, 0.5, 0, 0, 0, 0)[1]));
    CHECK(r[0] == doctest::Approx(0.65));
    CHECK(r[1] == doctest::Approx(0.8));
}

TEST_CASE("expected cost cases") {
    const MabcConfig c;
    CHECK(mabc_cost_hat({0.3, 0.6}, kUser1, c) == doctest::Approx(-0.3));
    CHECK(mabc_cost_hat({0.3, 0.6}, kBoth, c) == doctest::Approx(-0.54));
    for (MabcAction a : kAll) CHECK(mabc_cost_hat({0.0, 0.0}, a, c) == 0.0);
}

TEST_CASE("symbolic step cases") {
    CHECK(mabc_ier_step(SymbolicState::origin(), kUser1, {1, 0}) == SymbolicState::top_edge(1));
    CHECK(mabc_ier_step(SymbolicState::right_edge(2), kUser2, {0, 1}) == SymbolicState::right_edge(3));
    CHECK(mabc_ier_step(SymbolicState::corner(), kBoth, {1, 0}) == SymbolicState::origin());
    CHECK(mabc_ier_step(SymbolicState::origin(), kBoth, {1, 1}) == SymbolicState::corner());
    CHECK(mabc_ier_step(SymbolicState::corner(), kUser1, {1, 0}) == SymbolicState::top_limit());
    CHECK(mabc_ier_step(SymbolicState::top_limit(), kUser1, {0, 0}) == SymbolicState::top_limit());
    CHECK(mabc_ier_step(SymbolicState::top_edge(4), kUser2, {0, 1}) == SymbolicState::right_edge(1));
}

TEST_CASE("decoding symbolic states") {
    const MabcConfig c;
    const brute::Channel ch;
    CHECK(mabc_decode(SymbolicState::origin(), c) == BeliefPair{0.3, 0.6});
    CHECK(mabc_decode(SymbolicState::corner(), c) == BeliefPair{1.0, 1.0});
    CHECK(mabc_decode(SymbolicState::top_limit(), c) == BeliefPair{0.3, 1.0});
    CHECK(mabc_decode(SymbolicState::right_limit(), c) == BeliefPair{1.0, 0.6});
    const auto top1 = mabc_decode(SymbolicState::top_edge(1), c);
    const auto ref = brute::marginals(brute::bayes(ch, brute::product(0.3, 0.6), 1, 0, 0, 0));
    CHECK(top1[0] == doctest::Approx(ref[0]));
    CHECK(top1[1] == doctest::Approx(ref[1]));
    CHECK(top1[1] == doctest::Approx(0.84));
}

TEST_CASE("symbolic fold decodes to the Bayes fold") {
    const MabcConfig c;
    const brute::Channel ch;
    RandomStream rng(77);
    for (bool idle : {false, true})
        for (int trial = 0; trial < 1000; ++trial) {
            SymbolicState s = SymbolicState::origin();
            BeliefPair closed{c.p1, c.p2};
            brute::Joint bayes = brute::product(c.p1, c.p2);
            for (int t = 0; t < 50; ++t) {
                const MabcAction a = kAll[idle ? rng.index(4) : 1 + rng.index(3)];
                const auto m = brute::marginals(bayes);
                const Pair u = sample_observation(m, a, rng);
                bayes = brute::bayes(ch, bayes, a.a1, a.a2, u[0], u[1]);
                closed = mabc_phi(closed, a, u, c);
                s = mabc_ier_step(s, a, u);
                const auto d = mabc_decode(s, c);
                const auto b = brute::marginals(bayes);
                REQUIRE(std::abs(d[0] - closed[0]) <= 1e-12);
                REQUIRE(std::abs(d[1] - closed[1]) <= 1e-12);
                REQUIRE(std::abs(d[0] - b[0]) <= 1e-12);
                REQUIRE(std::abs(d[1] - b[1]) <= 1e-12);
            }
        }
}

TEST_CASE("belief rollouts stay in the reachable set") {
    const MabcConfig c;
    RandomStream rng(8);
    for (int trial = 0; trial < 10000; ++trial) {
        BeliefPair pi{c.p1, c.p2};
        for (int t = 0; t < 30; ++t) {
            const MabcAction a = kAll[1 + rng.index(3)];
            pi = mabc_phi(pi, a, sample_observation(pi, a, rng), c);
        }
        REQUIRE(in_reachable_set(pi, c, 40));
    }
    CHECK_FALSE(in_reachable_set({0.5, 0.5}, c, 40));
}

TEST_CASE("silent-user update increases monotonically to certainty") {
    for (double p : {0.05, 0.3, 0.6, 0.95}) {
        double q = p;
        for (int n = 1; n <= 100; ++n) {
            const double next = idle_update(q, p);
            CHECK(next >= q);
            CHECK(next <= 1.0);
            CHECK(1.0 - next == doctest::Approx((1 - p) * (1 - q)));
            q = next;
        }
        CHECK(1.0 - q == doctest::Approx(std::pow(1 - p, 101)));
    }
}

TEST_CASE("reset sequence lands on the first right-edge state from any belief") {
    const MabcConfig c;
    RandomStream rng(4);
    for (int trial = 0; trial < 2000; ++trial) {
        BeliefPair pi{c.p1, c.p2};
        SymbolicState s = SymbolicState::origin();
        const int len = int(rng.index(20));
        for (int t = 0; t < len; ++t) {
            const MabcAction a = kAll[1 + rng.index(3)];
            const Pair u = sample_observation(pi, a, rng);
            pi = mabc_phi(pi, a, u, c);
            s = mabc_ier_step(s, a, u);
        }
        for (MabcAction a : {kUser1, kUser2}) {
            const Pair u = sample_observation(pi, a, rng);
            pi = mabc_phi(pi, a, u, c);
            s = mabc_ier_step(s, a, u);
        }
        CHECK(s == mabc_reset_target());
        CHECK(s.expansion_index() == 2);
        const auto d = mabc_decode(mabc_reset_target(), c);
        CHECK(std::abs(pi[0] - d[0]) <= 1e-12);
        CHECK(std::abs(pi[1] - d[1]) <= 1e-12);
        CHECK(d[0] == doctest::Approx(idle_update(c.p1, c.p1)));
        CHECK(d[1] == c.p2);
    }
}

TEST_CASE("executed transmissions never exceed the buffer") {
    MabcConfig c;
    c.N = 5;
    c.beta = 0.9;
    const auto p = make_problem(c);
    const auto lp = p.learning_problem();
    LearnedStrategy psi{std::vector<std::size_t>(p.mdp.state_count()), {}};
    RandomStream pick(3);
    for (auto& a : psi.actions) a = pick.index(p.mdp.action_count());
    const auto agents = translate_strategy(psi, p.prescriptions);
    MabcEnvironment env(c);
    RandomStream rng(12);
    env.restart(rng);
    std::size_t s = p.mdp.initial_index();
    for (int t = 0; t < 20000; ++t) {
        const auto x = env.hidden_state();
        const auto u = agents.joint_action(s, env.local_info());
        CHECK(u.per_agent[0] <= x[0]);
        CHECK(u.per_agent[1] <= x[1]);
        const auto out = env.step(u, rng);
        const auto tr = p.mdp.transition(s, psi.actions[s], out.observation.value);
        if (tr.remapped)
            for (std::size_t g : lp.reset_sequence) env.step(p.prescriptions[g].apply(env.local_info()), rng);
        s = tr.next;
    }
}

TEST_CASE("the problem is symmetric under swapping users") {
    MabcConfig c;
    c.p1 = c.p2 = 0.45;
    c.l1 = c.l2 = -0.8;
    c.beta = 0.9;
    c.N = 8;
    auto value = [&](std::optional<SymbolicState> dstar) {
        const auto p = make_problem(c, false, dstar);
        return value_iterate(build_kernel(p.mdp, *p.ier, *p.model), c.beta).value.values[0];
    };
    const double right = value(SymbolicState::right_edge(1));
    const double top = value(SymbolicState::top_edge(1));
    CHECK(std::abs(right - top) <= 1e-9);
}

TEST_CASE("configuration validation") {
    MabcConfig c;
    CHECK(c.validate().empty());
    c.l3 = -1.0;
    c.l1 = -0.5;
    CHECK_FALSE(c.validate().empty()); // collisions look attractive
    c = MabcConfig{};
    c.p1 = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = MabcConfig{};
    c.l1 = 0.2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = MabcConfig{};
    c.l3 = 2.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(tight_cost_bound(MabcConfig{}) == 1.0);
}

TEST_CASE("plot embedding") {
    const auto e = mabc_embedding(SymbolicState::right_edge(2), 0.25, 0.83);
    CHECK(e.first == doctest::Approx(1 - 0.83 * 0.83));
    CHECK(e.second == 0.0);
    const auto t = mabc_embedding(SymbolicState::top_edge(1), 0.25, 0.83);
    CHECK(t.first == 0.0);
    CHECK(t.second == doctest::Approx(0.75));
    CHECK(mabc_embedding(SymbolicState::corner(), 0.25, 0.83) == std::pair<double, double>{1.0, 1.0});
}

TEST_CASE("learning needs at least two levels") {
    MabcConfig c;
    c.N = 1;
    CHECK_THROWS_AS(make_problem(c), ConfigError);
}
