#include "covertmdp/simulate.hpp"

#include <omp.h>

namespace covertmdp {

namespace {

std::size_t sample_index(std::span<const double> probs, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

}  // namespace

Trajectory simulate_trajectory(const Mdp& mdp, const Policy& policy, std::size_t n,
                               std::uint64_t seed, std::string label) {
    if (n < 2) throw ValidationError("simulate_trajectory: need n >= 2");
    TransitionMatrix t = induced_transition_matrix(mdp, policy);
    Xoshiro256 rng(seed);
    Trajectory traj;
    traj.seed = seed;
    traj.policy_label = std::move(label);
    traj.states.resize(n);
    std::size_t s = sample_index(mdp.initial, rng.next_double());
    traj.states[0] = static_cast<std::int32_t>(s);
    for (std::size_t i = 1; i < n; ++i) {
        s = sample_index(t.probs.row(s), rng.next_double());
        traj.states[i] = static_cast<std::int32_t>(s);
    }
    return traj;
}

Matrix simulate_doublet_counts(const Mdp& mdp, const Policy& policy, std::size_t n,
                               std::uint64_t seed) {
    return simulate_doublet_counts(induced_transition_matrix(mdp, policy), mdp.initial, n, seed);
}

Matrix simulate_doublet_counts(const TransitionMatrix& t, const Vec& initial, std::size_t n,
                               std::uint64_t seed) {
    if (n < 2) throw ValidationError("simulate_doublet_counts: need n >= 2");
    Xoshiro256 rng(seed);
    Matrix counts(t.num_states(), t.num_states());
    std::size_t s = sample_index(initial, rng.next_double());
    for (std::size_t i = 1; i < n; ++i) {
        std::size_t s2 = sample_index(t.probs.row(s), rng.next_double());
        counts(s, s2) += 1.0;
        s = s2;
    }
    return counts;
}

std::vector<Matrix> simulate_doublet_counts_batch(const Mdp& mdp, const Policy& policy,
                                                  std::size_t n,
                                                  const std::vector<std::uint64_t>& seeds) {
    if (n < 2) throw ValidationError("simulate_doublet_counts_batch: need n >= 2");
    TransitionMatrix t = induced_transition_matrix(mdp, policy);
    std::vector<Matrix> out(seeds.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(seeds.size()); ++k) {
        Xoshiro256 rng(seeds[k]);
        Matrix counts(mdp.num_states, mdp.num_states);
        std::size_t s = sample_index(mdp.initial, rng.next_double());
        for (std::size_t i = 1; i < n; ++i) {
            std::size_t s2 = sample_index(t.probs.row(s), rng.next_double());
            counts(s, s2) += 1.0;
            s = s2;
        }
        out[k] = std::move(counts);
    }
    return out;
}

}  // namespace covertmdp
