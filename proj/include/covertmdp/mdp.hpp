// Finite recurrent MDPs and stationary policies: exact evaluation of the
// induced chain T_pi, its stationary distribution tau_pi, the stationary
// doublet distribution theta_pi, average reward J(pi) and regret.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "covertmdp/linalg.hpp"

namespace covertmdp {

// Bad inputs (files, invariant violations). The CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Resource guards (e.g. exhaustive enumeration too large). CLI exit code 3.
struct GuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StateDistribution {
    Vec probs;
};

struct TransitionMatrix {
    Matrix probs;  // row-stochastic, probs(s, s')
    std::size_t num_states() const { return probs.rows(); }
};

// Probability distribution over ordered state pairs (s, s').
struct DoubletDistribution {
    Matrix probs;
    std::size_t num_states() const { return probs.rows(); }
};

struct Policy {
    Matrix probs;  // probs(s, a), each row a distribution over actions
    std::size_t num_states() const { return probs.rows(); }
    std::size_t num_actions() const { return probs.cols(); }
};

struct StateActionFrequencies {
    Matrix probs;  // probs(s, a) = tau(s) * pi(a|s)
};

struct Mdp {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    Vec transition;  // flattened [s][a][s']
    Matrix reward;   // reward(s, a)
    Vec initial;     // mu over states

    double t(std::size_t s, std::size_t a, std::size_t s2) const {
        return transition[(s * num_actions + a) * num_states + s2];
    }
    double& t(std::size_t s, std::size_t a, std::size_t s2) {
        return transition[(s * num_actions + a) * num_states + s2];
    }
};

inline constexpr double kStochasticTol = 1e-12;

// Enforces every Mdp invariant, including irreducibility of the chain induced
// by the uniform-random policy (a necessary diagnostic for recurrence; it does
// not certify recurrence under every policy). Throws ValidationError naming
// the unreachable states on failure.
void validate(const Mdp& mdp);
void validate_policy(const Mdp& mdp, const Policy& policy);

Policy uniform_policy(const Mdp& mdp);
Policy deterministic_policy(const Mdp& mdp, const std::vector<std::size_t>& action_per_state);

// T_pi(s,s') = sum_a T(s'|s,a) pi(a|s)
TransitionMatrix induced_transition_matrix(const Mdp& mdp, const Policy& policy);

// Unique tau with tau^T T = tau^T. Direct linear solve for small matrices,
// power iteration on the lazy chain above 200 states. Throws if the matrix is
// not irreducible (no unique fixed point).
StateDistribution stationary_distribution(const TransitionMatrix& t);

// theta(s,s') = tau(s) T(s,s')
DoubletDistribution doublet_distribution(const StateDistribution& tau, const TransitionMatrix& t);

// Stationary doublet distribution induced by a policy.
DoubletDistribution policy_doublet(const Mdp& mdp, const Policy& policy);

// J(pi) = sum_s tau_pi(s) sum_a pi(a|s) r(s,a)
double average_reward(const Mdp& mdp, const Policy& policy);

// R(pi) = J(pi_star) - J(pi)
double regret(const Mdp& mdp, const Policy& pi_star, const Policy& pi);

// rho(s,a) = tau_pi(s) pi(a|s)
StateActionFrequencies state_action_frequencies(const Mdp& mdp, const Policy& policy);

// States unreachable from state 0 in the directed support graph of t, or
// states from which 0 is unreachable; empty iff t is irreducible.
std::vector<std::size_t> irreducibility_defect(const TransitionMatrix& t);

}  // namespace covertmdp
