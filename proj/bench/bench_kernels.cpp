// Times the OpenMP kernels against their serial reference implementations.
// Usage: bench_kernels [threads]
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "covertmdp/exponents.hpp"
#include "covertmdp/reference.hpp"
#include "covertmdp/simulate.hpp"

using namespace covertmdp;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Mdp pair2() {
    Mdp m;
    m.num_states = 2;
    m.num_actions = 2;
    m.transition = {0.9, 0.1, 0.5, 0.5, 0.2, 0.8, 0.5, 0.5};
    m.reward = Matrix::from_rows({{1.0, 0.0}, {1.0, 0.0}});
    m.initial = {2.0 / 3.0, 1.0 / 3.0};
    validate(m);
    return m;
}

Policy det(const Mdp& m, std::size_t a) {
    return deterministic_policy(m, std::vector<std::size_t>(m.num_states, a));
}

struct Row {
    const char* name;
    double serial;
    double parallel;
};

void print(const Row& r) {
    std::printf("%-34s %10.3fs %10.3fs %8.2fx\n", r.name, r.serial, r.parallel,
                r.serial / r.parallel);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) omp_set_num_threads(std::atoi(argv[1]));
    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-34s %11s %11s %9s\n", "kernel", "serial", "parallel", "speedup");

    Mdp m = pair2();
    Policy ps = det(m, 0), pa = det(m, 1);

    {
        DetectorSpec spec{DetectorKind::np, -0.05};
        auto t0 = Clock::now();
        ErrorRates slow = ref::exact_error_rates(m, ps, pa, spec, 20);
        double ts = seconds_since(t0);
        t0 = Clock::now();
        ErrorRates fast = exact_error_rates(m, ps, pa, spec, 20);
        double tp = seconds_since(t0);
        if (std::abs(fast.alpha - slow.alpha) > 1e-12) std::printf("MISMATCH in enumeration!\n");
        print({"exact enumeration (np, n=20)", ts, tp});
    }
    {
        DetectorSpec spec{DetectorKind::hoeffding, 0.1};
        auto t0 = Clock::now();
        ErrorRates slow = ref::exact_error_rates(m, ps, pa, spec, 16);
        double ts = seconds_since(t0);
        t0 = Clock::now();
        ErrorRates fast = exact_error_rates(m, ps, pa, spec, 16);
        double tp = seconds_since(t0);
        if (std::abs(fast.alpha - slow.alpha) > 1e-12) std::printf("MISMATCH in enumeration!\n");
        print({"exact enumeration (hoeffding, 16)", ts, tp});
    }
    {
        DetectorSpec spec{DetectorKind::np, -0.05};
        auto t0 = Clock::now();
        ErrorRates slow = ref::error_rates_monte_carlo(m, ps, pa, spec, 4000, 4000, 7);
        double ts = seconds_since(t0);
        t0 = Clock::now();
        ErrorRates fast = error_rates_monte_carlo(m, ps, pa, spec, 4000, 4000, 7);
        double tp = seconds_since(t0);
        if (fast.alpha != slow.alpha) std::printf("MISMATCH in monte carlo!\n");
        print({"monte carlo (np, n=4k, 4k reps)", ts, tp});
    }
    {
        std::vector<std::uint64_t> seeds(64);
        for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = derive_seed(11, i);
        auto t0 = Clock::now();
        for (auto s : seeds) simulate_doublet_counts(m, ps, 400000, s);
        double ts = seconds_since(t0);
        t0 = Clock::now();
        simulate_doublet_counts_batch(m, ps, 400000, seeds);
        double tp = seconds_since(t0);
        print({"simulation batch (64 x 4e5 steps)", ts, tp});
    }
    {
        DoubletDistribution theta_star = policy_doublet(m, ps);
        DoubletDistribution theta_adv = policy_doublet(m, pa);
        RateSolverConfig serial_cfg;
        auto t0 = Clock::now();
        double v = 0;
        // serial reference: one start at a time through the same solver
        for (int s = 0; s < 16; ++s) {
            RateSolverConfig one = serial_cfg;
            one.multistarts = 1;
            one.dither_seed = serial_cfg.dither_seed + s;
            v = std::min(v, minimize_rate(theta_adv, DkBall{theta_star, 0.1}, one).value);
        }
        double ts = seconds_since(t0);
        t0 = Clock::now();
        minimize_rate(theta_adv, DkBall{theta_star, 0.1}, serial_cfg);
        double tp = seconds_since(t0);
        print({"rate minimization (16 starts)", ts, tp});
    }
    return 0;
}
