// Trajectory generation under a stationary policy. A single trajectory is a
// serial random walk; batches over seeds are embarrassingly parallel.
#pragma once

#include "covertmdp/rng.hpp"
#include "covertmdp/stats.hpp"

namespace covertmdp {

Trajectory simulate_trajectory(const Mdp& mdp, const Policy& policy, std::size_t n,
                               std::uint64_t seed, std::string label = {});

// Streaming variant: returns the doublet transition counts of an n-step walk
// without materializing the trajectory. counts(s, s') sums to n - 1.
Matrix simulate_doublet_counts(const Mdp& mdp, const Policy& policy, std::size_t n,
                               std::uint64_t seed);

// Same walk against a prebuilt chain; hot path of the Monte-Carlo kernels.
Matrix simulate_doublet_counts(const TransitionMatrix& t, const Vec& initial, std::size_t n,
                               std::uint64_t seed);

// One count matrix per seed, computed in parallel; entry order matches seeds.
std::vector<Matrix> simulate_doublet_counts_batch(const Mdp& mdp, const Policy& policy,
                                                  std::size_t n,
                                                  const std::vector<std::uint64_t>& seeds);

}  // namespace covertmdp
