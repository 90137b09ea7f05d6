// Shared fixtures: the worked-example MDPs, built in code with exact values
// (the JSON files under data/ mirror these for the CLI paths).
#pragma once

#include <cmath>

#include "covertmdp/mdp.hpp"

namespace testutil {

using namespace covertmdp;

inline Mdp make_mdp(std::size_t S, std::size_t A, const std::vector<std::vector<Vec>>& transition,
                    const std::vector<Vec>& reward, Vec initial) {
    Mdp m;
    m.num_states = S;
    m.num_actions = A;
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t s2 = 0; s2 < S; ++s2) m.transition.push_back(transition[s][a][s2]);
    m.reward = Matrix::from_rows(reward);
    m.initial = std::move(initial);
    validate(m);
    return m;
}

inline Policy make_policy(const std::vector<Vec>& rows) {
    return Policy{Matrix::from_rows(rows)};
}

// Appendix-A Example 1 embedded in a 2-state recurrent MDP: state 0 has the
// duplicate-transition action pair (rows 1 and 3 of T_s equal), rewards (5,3,4).
inline Mdp ex1_mdp() {
    return make_mdp(2, 3,
                    {{{0.8, 0.2}, {0.5, 0.5}, {0.8, 0.2}},
                     {{0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}}},
                    {{5.0, 3.0, 4.0}, {0.0, 0.0, 0.0}}, {0.5, 0.5});
}
inline Policy ex1_pistar() { return make_policy({{1, 0, 0}, {1, 0, 0}}); }

// Appendix-A Example 2: full-rank constraint matrix, no covert freedom.
inline Mdp ex2_mdp() {
    return make_mdp(2, 2, {{{0.8, 0.2}, {0.2, 0.8}}, {{0.5, 0.5}, {0.5, 0.5}}},
                    {{1.0, 0.0}, {0.0, 0.0}}, {0.5, 0.5});
}
inline Policy ex2_pistar() { return make_policy({{0.5, 0.5}, {0.5, 0.5}}); }

// Appendix-A Example 3 embedded in a 3-state MDP: actions 1 and 2 of state 0
// share a transition row; with r1 < r2 the covert optimum is (1/3, 2/3, 0).
inline Mdp ex3_mdp() {
    const double a = 17.0 / 30.0, b = 13.0 / 60.0, t = 1.0 / 3.0;
    return make_mdp(3, 3,
                    {{{0.8, 0.1, 0.1}, {a, b, b}, {a, b, b}},
                     {{0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}},
                     {{0.4, 0.4, 0.2}, {0.4, 0.4, 0.2}, {0.4, 0.4, 0.2}}},
                    {{1.0, 0.4, 0.7}, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}, {t, t, t});
}
inline Policy ex3_pistar() {
    const double t = 1.0 / 3.0;
    return make_policy({{t, t, t}, {t, t, t}, {t, t, t}});
}

// The standard 2-state pair: pi* induces [[0.9,0.1],[0.2,0.8]], pi_adv the
// uniform chain. mu is the stationary law of the null chain.
inline Mdp pair2_mdp() {
    return make_mdp(2, 2, {{{0.9, 0.1}, {0.5, 0.5}}, {{0.2, 0.8}, {0.5, 0.5}}},
                    {{1.0, 0.0}, {1.0, 0.0}}, {2.0 / 3.0, 1.0 / 3.0});
}
inline Policy pair2_pistar() { return make_policy({{1, 0}, {1, 0}}); }
inline Policy pair2_piadv() { return make_policy({{0, 1}, {0, 1}}); }

// Near-deterministic alternating chain against a mildly mixing one; the LLR
// concentrates fast, which the typical-set checks need at n = 18.
inline Mdp typpair_mdp() {
    return make_mdp(2, 2, {{{0.05, 0.95}, {0.4, 0.6}}, {{0.95, 0.05}, {0.6, 0.4}}},
                    {{1.0, 0.0}, {1.0, 0.0}}, {0.5, 0.5});
}
inline Policy typpair_pistar() { return make_policy({{1, 0}, {1, 0}}); }
inline Policy typpair_piadv() { return make_policy({{0, 1}, {0, 1}}); }

// 3-state MDP with covert freedom in states 0 and 2 and a detectable policy
// perturbation available in state 1.
inline Mdp cov3_mdp() {
    const double a = 17.0 / 30.0, b = 13.0 / 60.0, t = 1.0 / 3.0;
    return make_mdp(3, 3,
                    {{{0.8, 0.1, 0.1}, {a, b, b}, {a, b, b}},
                     {{0.05, 0.45, 0.5}, {0.25, 0.25, 0.5}, {0.25, 0.25, 0.5}},
                     {{0.4, 0.4, 0.2}, {0.4, 0.4, 0.2}, {0.4, 0.4, 0.2}}},
                    {{1.0, 0.4, 0.7}, {0.2, 0.9, 0.9}, {0.5, 0.5, 0.1}}, {t, t, t});
}
inline Policy cov3_pistar() {
    const double t = 1.0 / 3.0;
    return make_policy({{t, t, t}, {t, t, t}, {t, t, t}});
}
// Shifts T(1,0) by exactly -0.1 (and T(1,1) by +0.1) relative to pi*.
inline Policy cov3_perturbed() {
    const double t = 1.0 / 3.0;
    return make_policy({{t, t, t}, {5.0 / 6.0, 1.0 / 12.0, 1.0 / 12.0}, {t, t, t}});
}

// Frozen independently derived constants for the standard pair.
inline constexpr double kDkStarAdv = 0.4466935726446919;   // D_K(theta*, theta_adv), bits
inline constexpr double kDkAdvStar = 0.5294468445267843;   // D_K(theta_adv, theta*), bits
inline constexpr double kRelEntropy91 = 0.5310044064107189;  // H((0.9,0.1)||(0.5,0.5))
inline constexpr double kTypPairDk = 0.4798167620863078;   // typpair D_K(theta*, theta_adv)

}  // namespace testutil
