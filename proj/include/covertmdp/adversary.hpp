// The adversary's planning problem: minimize expected average reward over
// stationary policies subject to the universal-test type-II exponent staying
// below eta_beta. Nonconvex; solved by deterministic multistart projected
// gradient with an exact penalty.
#pragma once

#include "covertmdp/exponents.hpp"

namespace covertmdp {

struct AdversaryProblem {
    Mdp mdp;
    Policy pi_star;
    double eta = 0.0;       // controller's type-I exponent, known to both sides
    double eta_beta = 0.0;  // adversary's acceptable type-II exponent
};

struct AdversarySolution {
    Policy policy;
    double regret = 0.0;            // J(pi*) - J(policy), recomputed exactly
    double constraint_value = 0.0;  // the achieved type-II exponent J(eta)
    bool feasible = false;
};

struct AdversarySolverConfig {
    int multistarts = 8;
    int max_iters = 120;
    double fd_step = 1e-5;          // central-difference step on policy entries
    double constraint_tol = 1e-6;
    std::uint64_t dither_seed = 0xADF00DULL;
    RateSolverConfig search_rate;   // inner exponent solves during the search
    RateSolverConfig report_rate;   // final (and oracle-grade) exponent solves
    AdversarySolverConfig() {
        search_rate.multistarts = 2;
        search_rate.max_iters = 250;
    }
};

// J(eta)-style constraint value of a candidate adversarial policy:
// theorem4 e_beta of (theta*, theta_adv(pi_adv)) at the problem's eta.
double constraint_value(const AdversaryProblem& problem, const Policy& pi_adv,
                        const RateSolverConfig& rate_config = {});

// Greedy average-reward policy iteration towards the reward-minimizing
// deterministic policy (also a solver seed). Deterministic tie-breaks.
Policy unconstrained_reward_minimizer(const Mdp& mdp);

AdversarySolution solve(const AdversaryProblem& problem, const AdversarySolverConfig& config = {});

// One solution per eta_beta (ascending). Feasible sets nest, so each point may
// reuse any solution found for a smaller eta_beta; the returned regrets are
// non-decreasing.
std::vector<AdversarySolution> frontier(const AdversaryProblem& problem_template,
                                        const std::vector<double>& eta_betas,
                                        const AdversarySolverConfig& config = {});

}  // namespace covertmdp
