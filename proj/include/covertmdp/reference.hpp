// Serial reference implementations of the parallel kernels. Deliberately
// simple and structured differently from the production code (depth-first
// enumeration instead of code-chunked scans, one plain loop instead of a
// seeded parallel reduction) so the two paths check each other. Used by the
// test suite and the benchmark; not part of the fast path.
#pragma once

#include "covertmdp/detection.hpp"

namespace covertmdp::ref {

// Exact error rates by recursive depth-first enumeration of the sequence
// tree, accumulating plain double sums.
ErrorRates exact_error_rates(const Mdp& mdp, const Policy& pi_star, const Policy& pi_adv,
                             const DetectorSpec& spec, std::size_t n);

// Monte-Carlo error rates with the same seed-splitting rule as the parallel
// kernel, evaluated in one sequential loop.
ErrorRates error_rates_monte_carlo(const Mdp& mdp, const Policy& pi_star, const Policy& pi_adv,
                                   const DetectorSpec& spec, std::size_t n,
                                   std::size_t replications, std::uint64_t master_seed);

}  // namespace covertmdp::ref
