// The controller's detectors and their error probabilities: the normalized
// log-likelihood ratio test, the universal (Hoeffding-style) D_K threshold
// test, D_K-typicality, Monte-Carlo error estimation and exact enumeration
// over all length-n state sequences.
#pragma once

#include <map>

#include "covertmdp/stats.hpp"

namespace covertmdp {

struct Decision {
    int value = 0;           // 0 = accept null, 1 = accept adversarial
    double statistic = 0.0;  // the computed L or D_K value
    double threshold = 0.0;
};

enum class DetectorKind { np, hoeffding };

struct DetectorSpec {
    DetectorKind kind = DetectorKind::np;
    double eta = 0.0;
};

enum class ErrorMethod { monte_carlo, exact_enumeration };

struct ErrorRates {
    double alpha = 0.0;
    double beta = 0.0;
    std::size_t n = 0;
    ErrorMethod method = ErrorMethod::monte_carlo;
    std::size_t replications = 0;      // monte_carlo only
    double alpha_halfwidth = 0.0;      // 1.96 sqrt(p(1-p)/reps), monte_carlo only
    double beta_halfwidth = 0.0;
};

// Guard for exhaustive enumeration: |S|^n must not exceed 2^24.
inline constexpr std::uint64_t kEnumerationGuard = std::uint64_t{1} << 24;

// (1/(n-1)) sum_t log2 T*(s_t, s_{t+1}) / T_adv(s_t, s_{t+1}).
// +-infinity when exactly one hypothesis assigns the path probability zero;
// a path impossible under both hypotheses is an error.
double log_likelihood_ratio(const Trajectory& traj, const TransitionMatrix& t_star,
                            const TransitionMatrix& t_adv);

// Accepts the null iff L > eta; a tie rejects.
Decision np_detector(const Trajectory& traj, const TransitionMatrix& t_star,
                     const TransitionMatrix& t_adv, double eta);

// Accepts the null iff D_K(theta_emp, theta_star) < eta, with theta_emp the
// empirical doublet distribution projected onto M (boundary effects keep the
// raw distribution within 2/(n-1) of M; a larger violation is an error).
Decision hoeffding_detector(const Trajectory& traj, const DoubletDistribution& theta_star,
                            double eta);

// |L(traj) - D_K(theta*, theta_adv)| <= delta, with the divergences of the
// stationary doublet distributions of the two matrices.
bool dk_typical_membership(const Trajectory& traj, const TransitionMatrix& t_star,
                           const TransitionMatrix& t_adv, double delta);

// Seeded Monte-Carlo error rates; replications split across threads with
// per-replication seeds derived from master_seed, so results are identical
// for any worker count.
ErrorRates error_rates_monte_carlo(const Mdp& mdp, const Policy& pi_star, const Policy& pi_adv,
                                   const DetectorSpec& spec, std::size_t n,
                                   std::size_t replications, std::uint64_t master_seed);

// Exact error probabilities by compensated summation over all |S|^n sequences.
ErrorRates exact_error_rates(const Mdp& mdp, const Policy& pi_star, const Policy& pi_adv,
                             const DetectorSpec& spec, std::size_t n);

// Distribution of the normalized LLR under both hypotheses: exact probability
// mass on each attainable L value (sequences grouped by their transition
// counts). Key: L value; value: (P* mass, P_adv mass).
using LlrDistribution = std::map<double, std::pair<double, double>>;
LlrDistribution exact_llr_distribution(const Mdp& mdp, const Policy& pi_star,
                                       const Policy& pi_adv, std::size_t n);

// The optimal Neyman-Pearson type-II error at type-I level exactly `cap`
// (randomized at the boundary atom) together with the threshold used.
// `randomized = false` gives the best deterministic threshold test with
// alpha <= cap instead.
struct NpCapResult {
    double eta = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
};
NpCapResult np_beta_under_alpha_cap(const Mdp& mdp, const Policy& pi_star, const Policy& pi_adv,
                                    std::size_t n, double cap, bool randomized = true);

}  // namespace covertmdp
