// Perfect covertness over an infinite horizon: the per-state constraint
// matrix C = [T_s 1]^T, its null-space dimension, and the linear program
// minimizing the reward of a policy deviation delta_pi subject to
// C delta_pi = 0 and the box -pi*(a|s) <= delta_pi(a) <= 1 - pi*(a|s).
#pragma once

#include "covertmdp/mdp.hpp"

namespace covertmdp {

// Singular values below this are treated as zero when ranking C. The
// covertness dimension is discontinuous in T, so the cutoff matters.
inline constexpr double kRankTol = 1e-9;

struct ConstraintMatrix {
    Matrix c;           // (S+1) x A: next-state rows of T_s stacked with a ones row
    std::size_t rank = 0;
    std::size_t null_dim = 0;
    Matrix null_basis;  // A x null_dim, orthonormal columns
};

struct CovertLpResult {
    Vec delta_pi;          // length A
    double objective = 0;  // delta_pi . r(s,.)
    std::size_t feasible_dim = 0;
};

ConstraintMatrix build_constraint_matrix(const Mdp& mdp, std::size_t s);

// Exact vertex enumeration over the null-space-parameterized polytope; ties
// between optimal vertices resolve to the lexicographically smallest delta_pi.
CovertLpResult solve_covert_lp(const Mdp& mdp, const Policy& pi_star, std::size_t s);

// Statewise LP solutions assembled into pi' = pi* + delta_pi; the per-state
// problems are independent and solved in parallel.
Policy optimal_covert_policy(const Mdp& mdp, const Policy& pi_star);

// True iff the two policies induce the same transition matrix entrywise
// within tol: the exact condition for perfect covertness.
bool is_perfectly_covert(const Mdp& mdp, const Policy& pi_star, const Policy& pi_adv, double tol);

}  // namespace covertmdp
