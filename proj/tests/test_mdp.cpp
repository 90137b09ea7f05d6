#include <doctest.h>

#include <cmath>
#include <span>

#include "covertmdp/rng.hpp"
#include "testutil.hpp"

using namespace covertmdp;
using namespace testutil;

namespace {

Mdp random_positive_mdp(std::size_t S, std::size_t A, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    std::vector<std::vector<Vec>> tr(S, std::vector<Vec>(A, Vec(S)));
    std::vector<Vec> rw(S, Vec(A));
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            double sum = 0.0;
            for (std::size_t s2 = 0; s2 < S; ++s2) {
                tr[s][a][s2] = rng.next_double() + 0.05;
                sum += tr[s][a][s2];
            }
            for (std::size_t s2 = 0; s2 < S; ++s2) tr[s][a][s2] /= sum;
            rw[s][a] = 2.0 * rng.next_double() - 1.0;
        }
    Vec mu(S, 1.0 / static_cast<double>(S));
    return make_mdp(S, A, tr, rw, mu);
}

Policy random_policy(const Mdp& mdp, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    Policy p{Matrix(mdp.num_states, mdp.num_actions)};
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
        double sum = 0.0;
        for (std::size_t a = 0; a < mdp.num_actions; ++a) {
            p.probs(s, a) = rng.next_double() + 0.01;
            sum += p.probs(s, a);
        }
        for (std::size_t a = 0; a < mdp.num_actions; ++a) p.probs(s, a) /= sum;
    }
    return p;
}

}  // namespace

TEST_CASE("mdp validation accepts the worked examples") {
    CHECK_NOTHROW(validate(ex1_mdp()));
    CHECK_NOTHROW(validate(ex2_mdp()));
    CHECK_NOTHROW(validate(ex3_mdp()));
    CHECK_NOTHROW(validate(cov3_mdp()));
}

TEST_CASE("mdp validation rejects a reducible chain and names the states") {
    Mdp m;
    m.num_states = 2;
    m.num_actions = 1;
    m.transition = {1.0, 0.0, 0.0, 1.0};  // identity chain
    m.reward = Matrix(2, 1);
    m.initial = {0.5, 0.5};
    try {
        validate(m);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("1") != std::string::npos);
        CHECK(std::string(e.what()).find("irreducible") != std::string::npos);
    }
}

TEST_CASE("mdp validation rejects non-stochastic rows") {
    Mdp m;
    m.num_states = 1;
    m.num_actions = 1;
    m.transition = {0.9};
    m.reward = Matrix(1, 1);
    m.initial = {1.0};
    CHECK_THROWS_AS(validate(m), ValidationError);
}

TEST_CASE("induced transition matrix") {
    SUBCASE("deterministic policy picks the action's rows") {
        Mdp m = ex1_mdp();
        Policy det = deterministic_policy(m, {1, 0});
        TransitionMatrix t = induced_transition_matrix(m, det);
        CHECK(t.probs(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(t.probs(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(t.probs(1, 0) == doctest::Approx(0.3).epsilon(1e-15));
    }
    SUBCASE("single state gives the 1x1 identity") {
        Mdp m = make_mdp(1, 2, {{{1.0}, {1.0}}}, {{1.0, 0.0}}, {1.0});
        TransitionMatrix t = induced_transition_matrix(m, uniform_policy(m));
        CHECK(t.probs(0, 0) == 1.0);
    }
    SUBCASE("even mixture of (0.9,0.1) and (0.5,0.5) rows") {
        // hand evaluation: 0.5*0.9 + 0.5*0.5 = 0.7 in both states
        Mdp m = make_mdp(2, 2,
                         {{{0.9, 0.1}, {0.5, 0.5}}, {{0.9, 0.1}, {0.5, 0.5}}},
                         {{0.0, 0.0}, {0.0, 0.0}}, {0.5, 0.5});
        TransitionMatrix t = induced_transition_matrix(m, uniform_policy(m));
        for (std::size_t s = 0; s < 2; ++s) {
            CHECK(t.probs(s, 0) == doctest::Approx(0.7).epsilon(1e-15));
            CHECK(t.probs(s, 1) == doctest::Approx(0.3).epsilon(1e-15));
        }
    }
    SUBCASE("rows stay stochastic on random instances") {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            Mdp m = random_positive_mdp(2 + seed % 5, 1 + seed % 4, 100 + seed);
            TransitionMatrix t = induced_transition_matrix(m, random_policy(m, 200 + seed));
            for (std::size_t s = 0; s < m.num_states; ++s) {
                double sum = 0.0;
                for (std::size_t s2 = 0; s2 < m.num_states; ++s2) sum += t.probs(s, s2);
                CHECK(std::fabs(sum - 1.0) <= 1e-12);
            }
        }
    }
    SUBCASE("dimension mismatch") {
        Mdp m = ex1_mdp();
        Policy bad{Matrix(1, 3, 1.0 / 3.0)};
        CHECK_THROWS_AS(induced_transition_matrix(m, bad), ValidationError);
    }
}

TEST_CASE("stationary distribution") {
    SUBCASE("doubly stochastic gives uniform") {
        TransitionMatrix t{Matrix::from_rows({{0.3, 0.7}, {0.7, 0.3}})};
        StateDistribution tau = stationary_distribution(t);
        CHECK(tau.probs[0] == doctest::Approx(0.5).epsilon(1e-13));
        CHECK(tau.probs[1] == doctest::Approx(0.5).epsilon(1e-13));
    }
    SUBCASE("hand-solved 2x2 fixed point") {
        TransitionMatrix t{Matrix::from_rows({{0.9, 0.1}, {0.2, 0.8}})};
        StateDistribution tau = stationary_distribution(t);
        CHECK(tau.probs[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
        CHECK(tau.probs[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    }
    SUBCASE("reducible matrix is an explicit error") {
        TransitionMatrix t{Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}})};
        CHECK_THROWS_AS(stationary_distribution(t), ValidationError);
    }
    SUBCASE("fixed-point residual stays below 1e-10 on random chains") {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            Mdp m = random_positive_mdp(2 + seed % 7, 2, 300 + seed);
            TransitionMatrix t = induced_transition_matrix(m, random_policy(m, 400 + seed));
            StateDistribution tau = stationary_distribution(t);  // residual checked inside
            double sum = 0.0;
            for (double x : tau.probs) {
                CHECK(x >= 0.0);
                sum += x;
            }
            CHECK(std::fabs(sum - 1.0) <= 1e-12);
        }
    }
    SUBCASE("power-iteration fallback agrees with the residual bound") {
        // 250 states exceeds the direct-solve cutoff
        const std::size_t S = 250;
        Xoshiro256 rng(7);
        Matrix t(S, S);
        for (std::size_t i = 0; i < S; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < S; ++j) {
                t(i, j) = rng.next_double() + 0.01;
                sum += t(i, j);
            }
            for (std::size_t j = 0; j < S; ++j) t(i, j) /= sum;
        }
        StateDistribution tau = stationary_distribution(TransitionMatrix{t});
        double residual = 0.0;
        for (std::size_t j = 0; j < S; ++j) {
            double tj = 0.0;
            for (std::size_t i = 0; i < S; ++i) tj += tau.probs[i] * t(i, j);
            residual = std::max(residual, std::fabs(tj - tau.probs[j]));
        }
        CHECK(residual <= 1e-10);
    }
}

TEST_CASE("doublet distribution") {
    SUBCASE("uniform tau with the flat chain gives all quarters") {
        TransitionMatrix t{Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}})};
        DoubletDistribution theta = doublet_distribution(StateDistribution{{0.5, 0.5}}, t);
        for (double v : theta.probs.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
    }
    SUBCASE("entrywise product for the standard chain") {
        TransitionMatrix t{Matrix::from_rows({{0.9, 0.1}, {0.2, 0.8}})};
        DoubletDistribution theta =
            doublet_distribution(StateDistribution{{2.0 / 3.0, 1.0 / 3.0}}, t);
        CHECK(theta.probs(0, 0) == doctest::Approx(0.6).epsilon(1e-14));
        CHECK(theta.probs(0, 1) == doctest::Approx(1.0 / 15.0).epsilon(1e-14));
        CHECK(theta.probs(1, 0) == doctest::Approx(1.0 / 15.0).epsilon(1e-14));
        CHECK(theta.probs(1, 1) == doctest::Approx(4.0 / 15.0).epsilon(1e-14));
    }
    SUBCASE("stationary pairs are shift-invariant: row sums equal column sums") {
        for (std::uint64_t seed = 0; seed < 40; ++seed) {
            Mdp m = random_positive_mdp(3 + seed % 4, 2, 500 + seed);
            DoubletDistribution theta = policy_doublet(m, random_policy(m, 600 + seed));
            const std::size_t S = theta.num_states();
            for (std::size_t i = 0; i < S; ++i) {
                double row = 0.0, col = 0.0;
                for (std::size_t j = 0; j < S; ++j) {
                    row += theta.probs(i, j);
                    col += theta.probs(j, i);
                }
                CHECK(std::fabs(row - col) <= 1e-10);
            }
        }
    }
}

TEST_CASE("average reward") {
    SUBCASE("one-state examples") {
        Mdp m = make_mdp(1, 2, {{{1.0}, {1.0}}}, {{1.0, 0.0}}, {1.0});
        CHECK(average_reward(m, deterministic_policy(m, {0})) == doctest::Approx(1.0));
        Policy half = make_policy({{0.5, 0.5}});
        CHECK(average_reward(m, half) == doctest::Approx(0.5));
    }
    SUBCASE("tau-weighted sum on the standard chain") {
        // r(s,a) = 1{s = 0}: J = tau(0) = 2/3
        Mdp m = make_mdp(2, 1, {{{0.9, 0.1}}, {{0.2, 0.8}}}, {{1.0}, {0.0}}, {0.5, 0.5});
        CHECK(average_reward(m, uniform_policy(m)) == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
    }
    SUBCASE("stationary evaluation matches the long-run reward average") {
        Mdp m = ex3_mdp();
        Policy pi = ex3_pistar();
        Xoshiro256 rng(4242);
        auto sample = [&](std::span<const double> p) {
            double u = rng.next_double(), acc = 0.0;
            for (std::size_t i = 0; i + 1 < p.size(); ++i) {
                acc += p[i];
                if (u < acc) return i;
            }
            return p.size() - 1;
        };
        const std::size_t n = 2000000;
        std::size_t s = sample(m.initial);
        double total = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            std::size_t a = sample(pi.probs.row(s));
            total += m.reward(s, a);
            Vec row(m.num_states);
            for (std::size_t s2 = 0; s2 < m.num_states; ++s2) row[s2] = m.t(s, a, s2);
            s = sample(row);
        }
        CHECK(std::fabs(total / static_cast<double>(n) - average_reward(m, pi)) <= 0.01);
    }
}

TEST_CASE("regret") {
    Mdp m = ex1_mdp();
    Policy pi = ex1_pistar();
    CHECK(regret(m, pi, pi) == 0.0);
    Policy other = make_policy({{0, 0, 1}, {1, 0, 0}});
    CHECK(regret(m, pi, other) == doctest::Approx(-regret(m, other, pi)).epsilon(1e-15));
}

TEST_CASE("state-action frequencies") {
    SUBCASE("deterministic policy is supported on tau") {
        Mdp m = pair2_mdp();
        Policy det = pair2_pistar();
        StateActionFrequencies rho = state_action_frequencies(m, det);
        StateDistribution tau = stationary_distribution(induced_transition_matrix(m, det));
        CHECK(rho.probs(0, 0) == doctest::Approx(tau.probs[0]).epsilon(1e-14));
        CHECK(rho.probs(0, 1) == 0.0);
        CHECK(rho.probs(1, 0) == doctest::Approx(tau.probs[1]).epsilon(1e-14));
    }
    SUBCASE("uniform two-action policy splits tau in half") {
        Mdp m = pair2_mdp();
        StateActionFrequencies rho = state_action_frequencies(m, uniform_policy(m));
        StateDistribution tau =
            stationary_distribution(induced_transition_matrix(m, uniform_policy(m)));
        for (std::size_t s = 0; s < 2; ++s)
            for (std::size_t a = 0; a < 2; ++a)
                CHECK(rho.probs(s, a) == doctest::Approx(tau.probs[s] / 2).epsilon(1e-14));
    }
    SUBCASE("J = rho . r on 100 random instances") {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            Mdp m = random_positive_mdp(2 + seed % 5, 1 + seed % 4, 700 + seed);
            Policy pi = random_policy(m, 800 + seed);
            StateActionFrequencies rho = state_action_frequencies(m, pi);
            double j_from_rho = 0.0, total = 0.0;
            for (std::size_t s = 0; s < m.num_states; ++s)
                for (std::size_t a = 0; a < m.num_actions; ++a) {
                    j_from_rho += rho.probs(s, a) * m.reward(s, a);
                    total += rho.probs(s, a);
                }
            CHECK(std::fabs(total - 1.0) <= 1e-12);
            CHECK(std::fabs(j_from_rho - average_reward(m, pi)) <= 1e-12);
        }
    }
}
