// Asymptotic detection error exponents: constrained minimization of the rate
// function D_K(., theta) over the shift-invariant set M, the fixed-threshold
// LLR exponents, the Chernoff-Stein value, and the universal test's J(eta).
#pragma once

#include <string>
#include <variant>

#include "covertmdp/stats.hpp"

namespace covertmdp {

struct Unconstrained {};

// sum coeffs(i,j) * nu(i,j) <= bound (or >= when less_equal is false).
// The normalized LLR is exactly such an affine functional of nu.
struct AffineConstraint {
    Matrix coeffs;
    double bound = 0.0;
    bool less_equal = true;
};

// { nu : D_K(nu, ref) <= radius }
struct DkBall {
    DoubletDistribution ref;
    double radius = 0.0;
};

using FeasibleSet = std::variant<Unconstrained, AffineConstraint, DkBall>;

enum class RateStatus { interior_optimum, boundary_optimum, infeasible_empty_set };

struct RateSolverConfig {
    int multistarts = 16;
    int max_iters = 2000;
    double objective_tol = 1e-8;   // convergence tolerance on the objective
    double feasibility_tol = 1e-6; // accepted constraint violation at the optimum
    double clip = 1e-12;           // iterates clipped to >= clip before log evaluation
    std::uint64_t dither_seed = 0x5EEDCAFEULL;
};

struct RateMinimization {
    DoubletDistribution minimizer;
    double value = 0.0;  // bits; D_K(minimizer, target), +infinity iff infeasible
    std::string constraint_spec;
    RateStatus status = RateStatus::interior_optimum;
};

struct ExponentPair {
    double e_alpha = 0.0;
    double e_beta = 0.0;
};

// Projected-gradient descent over M with a deterministic multistart schedule;
// affine constraints enter the projection, D_K balls are handled by an exact
// penalty with doubling weight. Infima over open sets are computed over their
// closures.
RateMinimization minimize_rate(const DoubletDistribution& target, const FeasibleSet& feasible,
                               const RateSolverConfig& config = {});

// LLR coefficient matrix lambda(s,s') = log2 T1(s,s')/T2(s,s') of two doublet
// distributions; entries where both transitions vanish are zero. Throws when
// exactly one side vanishes somewhere (the affine functional would be infinite).
Matrix llr_coefficients(const DoubletDistribution& theta_star, const DoubletDistribution& theta_adv);

// L(nu) = sum lambda . nu
double llr_of(const Matrix& lambda, const DoubletDistribution& nu);

struct Theorem2Result {
    RateMinimization alpha_minimization;  // min D_K(., theta*) over {L <= eta}
    RateMinimization beta_minimization;   // min D_K(., theta_adv) over {L >= eta}
};
Theorem2Result theorem2_details(const DoubletDistribution& theta_star,
                                const DoubletDistribution& theta_adv, double eta,
                                const RateSolverConfig& config = {});
ExponentPair theorem2_exponents(const DoubletDistribution& theta_star,
                                const DoubletDistribution& theta_adv, double eta,
                                const RateSolverConfig& config = {});

// D_K(theta*, theta_adv); the theorem requires it finite.
double chernoff_stein_exponent(const DoubletDistribution& theta_star,
                               const DoubletDistribution& theta_adv);

struct Theorem4Result {
    RateMinimization beta_minimization;  // min D_K(., theta_adv) over the D_K ball
    ExponentPair exponents;              // e_alpha = eta, e_beta = J(eta)
};
Theorem4Result theorem4_details(const DoubletDistribution& theta_star,
                                const DoubletDistribution& theta_adv, double eta,
                                const RateSolverConfig& config = {});
ExponentPair theorem4_exponents(const DoubletDistribution& theta_star,
                                const DoubletDistribution& theta_adv, double eta,
                                const RateSolverConfig& config = {});

// Analytic gradient of nu -> D_K(nu, target) in the ambient coordinates:
// grad(i,j) = log2(T_nu(i,j) / T_target(i,j)). Exposed for the finite-difference
// self-test.
Matrix dk_gradient(const DoubletDistribution& nu, const DoubletDistribution& target);

}  // namespace covertmdp
