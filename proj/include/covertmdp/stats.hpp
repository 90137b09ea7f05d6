// Empirical distributions of state sequences, the D_K divergence between
// doublet distributions, and the shift-invariant set M with its Euclidean
// projection. Logs are base 2 throughout.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "covertmdp/mdp.hpp"

namespace covertmdp {

struct Trajectory {
    std::vector<std::int32_t> states;  // s_1 .. s_n
    std::uint64_t seed = 0;
    std::string policy_label;

    std::size_t length() const { return states.size(); }
};

struct EmpiricalStats {
    StateDistribution tau;         // over all n states
    DoubletDistribution theta;     // over the n-1 transitions
    Matrix t_hat;                  // theta(s,s') / tau(s); rows need not sum to 1
    StateDistribution tau_prefix;  // over the first n-1 states; exact row marginal of theta
};

// Default tolerance when checking shift-invariance of analytically constructed
// doublet distributions. Empirical distributions miss M by up to 1/(n-1);
// callers pass a looser tolerance for those.
inline constexpr double kShiftInvariantTol = 1e-9;

EmpiricalStats empirical_stats(const Trajectory& traj, std::size_t num_states);

// H(p||q) in bits; +infinity when p charges a zero of q.
double relative_entropy(const Vec& p, const Vec& q);

StateDistribution doublet_row_marginal(const DoubletDistribution& theta);
StateDistribution doublet_col_marginal(const DoubletDistribution& theta);

// Transition matrix T(s,s') = theta(s,s')/rowsum(s), with 0/0 -> 0.
Matrix transition_from_doublet(const DoubletDistribution& theta);

bool is_shift_invariant(const DoubletDistribution& theta, double tol);

// D_K(theta1, theta2) = sum_s tau1(s) sum_s' T1(s,s') log2 T1(s,s')/T2(s,s').
// Both arguments must be shift-invariant within tol; +infinity when T1 charges
// a zero of T2 on a state with tau1(s) > 0.
double dk_divergence(const DoubletDistribution& theta1, const DoubletDistribution& theta2,
                     double tol = kShiftInvariantTol);

// Euclidean projection onto M \cap simplex (Dykstra alternating projections).
DoubletDistribution project_to_shift_invariant(const DoubletDistribution& theta);

// Reusable projector onto {x >= 0, sum x = 1, row marginal = column marginal}
// over S^2 variables; the hot path of the rate-function minimizer.
class ShiftInvariantProjector {
public:
    explicit ShiftInvariantProjector(std::size_t num_states);

    // In-place projection of a flattened doublet matrix (row-major S*S).
    void project(Vec& x) const;

    // Projection onto the affine part alone ({sum = 1, balanced marginals},
    // no nonnegativity); building block for constrained projections.
    void project_affine(Vec& x) const;

private:
    std::size_t n_;
    Matrix constraints_;      // rows: S-1 balance rows + 1 sum row
    Matrix gram_inverse_;     // (B B^T)^{-1}
    Vec rhs_;
};

}  // namespace covertmdp
