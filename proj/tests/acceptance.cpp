// Acceptance suite: end-to-end checks of the worked examples, the detection
// and exponent guarantees, the optimizer-vs-oracle comparisons, and CLI
// determinism. Prints one pass/fail line per criterion; exit code equals the
// number of failed criteria.
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "covertmdp/adversary.hpp"
#include "covertmdp/covert_lp.hpp"
#include "covertmdp/detection.hpp"
#include "covertmdp/harness.hpp"
#include "covertmdp/reference.hpp"
#include "covertmdp/simulate.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace covertmdp;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            pass = false;
            notes.push_back(what);
        }
    }
    void note(const std::string& what) { notes.push_back(what); }
};

DoubletDistribution doublet_of(const Matrix& t) {
    TransitionMatrix tm{t};
    return doublet_distribution(stationary_distribution(tm), tm);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// ---- criterion 1: the three worked per-state LP examples, exact ----------

Outcome criterion1() {
    Outcome out;
    CovertLpResult one = solve_covert_lp(ex1_mdp(), ex1_pistar(), 0);
    out.require(one.feasible_dim == 1, "example 1: null dimension != 1");
    out.require(std::fabs(one.delta_pi[0] + 1.0) <= 1e-9 &&
                    std::fabs(one.delta_pi[1]) <= 1e-9 &&
                    std::fabs(one.delta_pi[2] - 1.0) <= 1e-9,
                "example 1: deviation != (-1, 0, 1)");
    out.require(std::fabs(one.objective + 1.0) <= 1e-9, "example 1: objective != -1");

    CovertLpResult two = solve_covert_lp(ex2_mdp(), ex2_pistar(), 0);
    out.require(std::fabs(two.delta_pi[0]) <= 1e-9 && std::fabs(two.delta_pi[1]) <= 1e-9,
                "example 2: deviation != 0");
    out.require(two.feasible_dim == 0, "example 2: null dimension != 0");

    Mdp three = ex3_mdp();
    Policy pi = ex3_pistar();
    CovertLpResult lp3 = solve_covert_lp(three, pi, 0);
    double p0 = pi.probs(0, 0) + lp3.delta_pi[0];
    double p1 = pi.probs(0, 1) + lp3.delta_pi[1];
    double p2 = pi.probs(0, 2) + lp3.delta_pi[2];
    out.require(std::fabs(p0 - 1.0 / 3.0) <= 1e-9 && std::fabs(p1 - 2.0 / 3.0) <= 1e-9 &&
                    std::fabs(p2) <= 1e-9,
                "example 3: optimal policy != (1/3, 2/3, 0)");
    return out;
}

// ---- criterion 2: infinite-horizon covertness vs a detectable shift ------

Outcome criterion2() {
    Outcome out;
    Mdp m = cov3_mdp();
    Policy pi_star = cov3_pistar();
    Policy covert = optimal_covert_policy(m, pi_star);
    Matrix t_star = induced_transition_matrix(m, pi_star).probs;

    const std::size_t n = 1000000;
    const int seeds = 100;
    int within = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : within)
    for (int s = 0; s < seeds; ++s) {
        Trajectory traj = simulate_trajectory(m, covert, n, derive_seed(2024, s));
        EmpiricalStats st = empirical_stats(traj, m.num_states);
        if (linf_diff(st.t_hat, t_star) <= 0.01) ++within;
    }
    out.require(within >= 99, "covert policy: empirical transition matrix within 0.01 for only " +
                                  std::to_string(within) + "/100 seeds");

    // a policy moving one induced transition probability by 0.1 is caught
    Policy pert = cov3_perturbed();
    Matrix t_pert = induced_transition_matrix(m, pert).probs;
    out.require(std::fabs(linf_diff(t_pert, t_star) - 0.1) <= 1e-12,
                "perturbed policy does not shift a transition by 0.1");
    DetectorSpec spec{DetectorKind::hoeffding, 0.01};
    ErrorRates rates = error_rates_monte_carlo(m, pi_star, pert, spec, 10000, 100, 77);
    out.require(rates.beta <= 0.01, "perturbed policy flagged with frequency only " +
                                        fmt(1.0 - rates.beta) + " < 0.99");
    return out;
}

// ---- criterion 3: the LLR / D_K-difference identity -----------------------

Outcome criterion3() {
    Outcome out;
    Mdp m = pair2_mdp();
    TransitionMatrix t_star = induced_transition_matrix(m, pair2_pistar());
    TransitionMatrix t_adv = induced_transition_matrix(m, pair2_piadv());
    DoubletDistribution theta_star = doublet_of(t_star.probs);
    DoubletDistribution theta_adv = doublet_of(t_adv.probs);

    double worst = 0.0;
    for (std::uint64_t k = 0; k < 1000; ++k) {
        std::size_t n = 20 + k % 400;
        Trajectory traj =
            simulate_trajectory(m, k % 2 ? pair2_pistar() : pair2_piadv(), n, derive_seed(3, k));
        EmpiricalStats st = empirical_stats(traj, 2);
        double tol = 2.0 / static_cast<double>(n - 1);
        double lhs = log_likelihood_ratio(traj, t_star, t_adv);
        double rhs =
            dk_divergence(st.theta, theta_adv, tol) - dk_divergence(st.theta, theta_star, tol);
        worst = std::max(worst, std::fabs(lhs - rhs));
    }
    out.require(worst <= 1e-10, "identity residual " + fmt(worst) + " > 1e-10");
    out.note("max residual " + fmt(worst) + " over 1000 trajectories");
    return out;
}

// ---- criterion 4: typical-set properties by exhaustive enumeration -------

Outcome criterion4() {
    Outcome out;
    Mdp m = typpair_mdp();
    Matrix t_star = induced_transition_matrix(m, typpair_pistar()).probs;
    Matrix t_adv = induced_transition_matrix(m, typpair_piadv()).probs;
    double d = dk_divergence(doublet_of(t_star), doublet_of(t_adv));
    const double delta = 0.25;
    out.require(std::fabs(d - kTypPairDk) <= 1e-12, "divergence of the instance drifted");

    for (std::size_t n : {std::size_t{8}, std::size_t{12}, std::size_t{18}}) {
        const double transitions = static_cast<double>(n - 1);
        double p_typ_star = 0.0, p_typ_adv = 0.0;
        bool sandwich = true;
        const std::uint64_t total = std::uint64_t{1} << n;
        for (std::uint64_t code = 0; code < total; ++code) {
            double p_star = m.initial[code >> (n - 1) & 1];
            double p_adv = p_star;
            double llr = 0.0;
            bool dead_star = false, dead_adv = false;
            for (std::size_t t = 0; t + 1 < n; ++t) {
                int a = code >> (n - 1 - t) & 1;
                int b = code >> (n - 2 - t) & 1;
                double ts = t_star(a, b), ta = t_adv(a, b);
                p_star *= ts;
                p_adv *= ta;
                if (ts == 0.0) dead_star = true;
                else if (ta == 0.0) dead_adv = true;
                else llr += std::log2(ts / ta);
            }
            if (p_star == 0.0 && p_adv == 0.0) continue;
            double l = dead_star ? -oracles::kInf
                       : dead_adv ? oracles::kInf
                                  : llr / transitions;
            if (std::fabs(l - d) > delta) continue;  // not typical
            p_typ_star += p_star;
            p_typ_adv += p_adv;
            double lower = p_star * std::exp2(-transitions * (d + delta));
            double upper = p_star * std::exp2(-transitions * (d - delta));
            if (!(p_adv >= lower * (1.0 - 1e-12) && p_adv <= upper * (1.0 + 1e-12)))
                sandwich = false;
        }
        out.require(sandwich, "sandwich bound violated at n = " + std::to_string(n));
        double adv_bound = std::exp2(-transitions * (d - delta));
        out.require(p_typ_adv < adv_bound, "adversarial mass bound violated at n = " +
                                               std::to_string(n) + ": " + fmt(p_typ_adv) +
                                               " >= " + fmt(adv_bound));
        if (n == 18) {
            out.require(p_typ_star > 1.0 - delta,
                        "typical mass " + fmt(p_typ_star) + " <= 0.75 at n = 18");
            out.note("typical mass at n=18: " + fmt(p_typ_star));
        }
    }
    return out;
}

// ---- criterion 5: type-II decay under a capped type-I error ---------------

Outcome criterion5() {
    Outcome out;
    Mdp m = pair2_mdp();
    Policy ps = pair2_pistar(), pa = pair2_piadv();

    // independent re-derivation of the limiting rate (stationary-weighted KL)
    Matrix t_star = induced_transition_matrix(m, ps).probs;
    Matrix t_adv = induced_transition_matrix(m, pa).probs;
    Vec tau = {2.0 / 3.0, 1.0 / 3.0};
    double d_independent = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            d_independent += tau[i] * t_star(i, j) * std::log2(t_star(i, j) / t_adv(i, j));
    double d = chernoff_stein_exponent(doublet_of(t_star), doublet_of(t_adv));
    out.require(std::fabs(d - d_independent) <= 1e-12, "rate re-derivation mismatch");

    std::vector<double> beta, expo;
    for (std::size_t n = 8; n <= 18; ++n) {
        NpCapResult r = np_beta_under_alpha_cap(m, ps, pa, n, 0.1);
        beta.push_back(r.beta);
        expo.push_back(-std::log2(r.beta) / static_cast<double>(n));
    }
    bool beta_monotone = true;
    for (std::size_t i = 1; i < beta.size(); ++i)
        if (beta[i] > beta[i - 1] + 1e-9) beta_monotone = false;
    out.require(beta_monotone, "beta_n is not non-increasing across n = 8..18");

    out.require(expo.back() > expo.front() &&
                    std::fabs(expo.back() - d) < std::fabs(expo.front() - d),
                "per-step exponent does not move toward the limiting rate");

    double rel = std::fabs(expo.back() - d) / d;
    out.note("beta_18 = " + fmt(beta.back()) + ", -(1/18)log2 = " + fmt(expo.back()) +
             ", limiting rate " + fmt(d) + ", relative gap " + fmt(rel));
    out.require(rel <= 0.25,
                "n = 18 exponent " + fmt(expo.back()) + " misses the 25% window around " + fmt(d) +
                    "; this value is the exact optimum of the randomized level-0.1 test at this "
                    "length, so the window is unreachable for n <= 18 (see README acceptance "
                    "notes)");
    return out;
}

// ---- criterion 6: universal-test exponents ---------------------------------

Outcome criterion6() {
    Outcome out;
    Mdp m = pair2_mdp();
    Policy ps = pair2_pistar(), pa = pair2_piadv();
    DetectorSpec spec{DetectorKind::hoeffding, 0.1};

    std::vector<SweepRow> rows;
    for (std::size_t n = 10; n <= 18; ++n) {
        ErrorRates r = exact_error_rates(m, ps, pa, spec, n);
        SweepRow row;
        row.n = n;
        row.alpha = r.alpha;
        row.beta = r.beta;
        rows.push_back(row);
    }
    double slope = fit_error_slope(rows, true);
    out.note("alpha slope " + fmt(slope) + " vs -0.1");
    out.require(std::fabs(slope + 0.1) <= 0.025,
                "alpha slope " + fmt(slope) + " misses -eta by more than 25%");

    struct TestPair {
        Matrix t_star, t_adv;
        double eta;
    };
    std::vector<TestPair> pairs;
    pairs.push_back({Matrix::from_rows({{0.9, 0.1}, {0.2, 0.8}}),
                     Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}), 0.1});
    pairs.push_back({Matrix::from_rows({{0.8, 0.2}, {0.3, 0.7}}),
                     Matrix::from_rows({{0.6, 0.4}, {0.5, 0.5}}), 0.05});
    pairs.push_back({Matrix::from_rows({{0.7, 0.3}, {0.4, 0.6}}),
                     Matrix::from_rows({{0.35, 0.65}, {0.75, 0.25}}), 0.08});
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        DoubletDistribution theta_star = doublet_of(pairs[k].t_star);
        DoubletDistribution theta_adv = doublet_of(pairs[k].t_adv);
        double eta = pairs[k].eta;
        out.require(dk_divergence(theta_adv, theta_star) > eta,
                    "pair " + std::to_string(k) + " does not bind at its eta");
        double e_beta = theorem4_exponents(theta_star, theta_adv, eta).e_beta;
        double grid = oracles::grid_rate_oracle_2(theta_adv.probs, [&](const Matrix& th) {
            return oracles::dk_formula(th, theta_star.probs) <= eta;
        });
        out.require(std::fabs(e_beta - grid) <= 1e-3,
                    "pair " + std::to_string(k) + ": J(eta) " + fmt(e_beta) +
                        " vs grid " + fmt(grid));
    }
    return out;
}

// ---- criterion 7: rate-minimizer validity against oracles -----------------

Outcome criterion7() {
    Outcome out;
    auto random_doublet = [&](std::size_t S, std::uint64_t seed) {
        Xoshiro256 rng(seed);
        Matrix t(S, S);
        for (std::size_t i = 0; i < S; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < S; ++j) {
                t(i, j) = rng.next_double() + 0.08;
                sum += t(i, j);
            }
            for (std::size_t j = 0; j < S; ++j) t(i, j) /= sum;
        }
        return doublet_of(t);
    };

    int checked2 = 0, checked3 = 0;
    for (std::uint64_t k = 0; checked2 < 25; ++k) {
        DoubletDistribution target = random_doublet(2, 10000 + k);
        DoubletDistribution ref = random_doublet(2, 20000 + k);
        double d = dk_divergence(target, ref);
        if (d < 0.02) continue;
        ++checked2;
        RateMinimization r;
        oracles::FeasiblePredicate feasible;
        Matrix lambda;
        double bound = 0.0;
        if (checked2 % 2 == 0) {
            double eta = 0.5 * d;
            r = minimize_rate(target, DkBall{ref, eta});
            feasible = [&, eta](const Matrix& th) {
                return oracles::dk_formula(th, ref.probs) <= eta;
            };
        } else {
            lambda = llr_coefficients(target, ref);
            bound = 0.5 * (llr_of(lambda, target) + llr_of(lambda, ref));
            r = minimize_rate(target, AffineConstraint{lambda, bound, true});
            feasible = [&lambda, bound](const Matrix& th) {
                return dot(lambda.data(), th.data()) <= bound;
            };
        }
        double grid = oracles::grid_rate_oracle_2(target.probs, feasible);
        if (std::fabs(r.value - grid) > 1e-3)
            out.require(false, "2-state instance " + std::to_string(checked2) + ": solver " +
                                   fmt(r.value) + " vs grid " + fmt(grid));
    }
    for (std::uint64_t k = 0; checked3 < 25; ++k) {
        DoubletDistribution target = random_doublet(3, 30000 + k);
        DoubletDistribution ref = random_doublet(3, 40000 + k);
        double d = dk_divergence(target, ref);
        if (d < 0.02) continue;
        ++checked3;
        double eta = 0.5 * d;
        RateMinimization r = minimize_rate(target, DkBall{ref, eta});
        double oracle = oracles::random_rate_oracle(
            3, target.probs,
            [&](const Matrix& th) { return oracles::dk_formula(th, ref.probs) <= eta; }, 100000,
            50000 + k, [&](const Matrix& th) {
                return std::max(0.0, oracles::dk_formula(th, ref.probs) - eta);
            });
        if (std::fabs(r.value - oracle) > 1e-3)
            out.require(false, "3-state instance " + std::to_string(checked3) + ": solver " +
                                   fmt(r.value) + " vs oracle " + fmt(oracle));
    }

    // analytic gradient against central finite differences
    double worst_rel = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        const std::size_t S = 2 + k % 2;
        DoubletDistribution nu = random_doublet(S, 60000 + k);
        DoubletDistribution target = random_doublet(S, 70000 + k);
        Matrix grad = dk_gradient(nu, target);
        Matrix t_target = transition_from_doublet(target);
        const double h = 1e-6;
        for (std::size_t idx = 0; idx < nu.probs.size(); ++idx) {
            auto ambient = [&](double bump) {
                Vec x = nu.probs.data();
                x[idx] += bump;
                double f = 0.0;
                for (std::size_t i = 0; i < S; ++i) {
                    double row = 0.0;
                    for (std::size_t j = 0; j < S; ++j) row += x[i * S + j];
                    for (std::size_t j = 0; j < S; ++j)
                        f += x[i * S + j] * (std::log2(x[i * S + j]) - std::log2(row) -
                                             std::log2(t_target(i, j)));
                }
                return f;
            };
            double fd = (ambient(h) - ambient(-h)) / (2.0 * h);
            double an = grad.data()[idx];
            worst_rel =
                std::max(worst_rel, std::fabs(fd - an) / std::max(1.0, std::fabs(an)));
        }
    }
    out.note("worst gradient relative error " + fmt(worst_rel));
    out.require(worst_rel <= 1e-5, "analytic gradient misses finite differences");
    return out;
}

// ---- criterion 8: the planning problem against the policy grid ------------

Outcome criterion8() {
    Outcome out;
    // near-duplicate actions: every policy is close to the null chain, the
    // optimum sits at a simplex vertex, and a 0.02 grid certifies it two-sided
    Mdp m = make_mdp(2, 2, {{{0.62, 0.38}, {0.58, 0.42}}, {{0.35, 0.65}, {0.41, 0.59}}},
                     {{1.0, 0.3}, {0.8, 0.1}}, {0.5, 0.5});
    Policy pi_star = make_policy({{0.8, 0.2}, {0.6, 0.4}});
    AdversaryProblem problem{m, pi_star, 0.05, 0.02};
    AdversarySolverConfig cfg;

    AdversarySolution sol = solve(problem, cfg);
    double j_star = average_reward(m, pi_star);
    double best_grid = 1e300;
    const int steps = 50;  // resolution 0.02
    for (int i = 0; i <= steps; ++i)
        for (int j = 0; j <= steps; ++j) {
            Policy pi = make_policy({{i / 50.0, 1 - i / 50.0}, {j / 50.0, 1 - j / 50.0}});
            double c = constraint_value(problem, pi, cfg.report_rate);
            if (c > problem.eta_beta + 1e-6) continue;
            best_grid = std::min(best_grid, average_reward(m, pi) - j_star);
        }
    out.note("solve objective " + fmt(-sol.regret) + ", grid " + fmt(best_grid));
    out.require(std::fabs(-sol.regret - best_grid) <= 1e-3,
                "objective " + fmt(-sol.regret) + " vs grid " + fmt(best_grid));

    std::vector<double> budgets = {0.001, 0.01, 0.05, 0.2, 1.0};
    std::vector<AdversarySolution> front = frontier(problem, budgets, cfg);
    for (std::size_t i = 1; i < front.size(); ++i)
        out.require(front[i].regret >= front[i - 1].regret - 1e-6,
                    "frontier regret decreased at budget " + fmt(budgets[i]));
    return out;
}

// ---- criterion 9: CLI determinism across thread counts --------------------

Outcome criterion9() {
    Outcome out;
    fs::path dir = fs::temp_directory_path() / "covertmdp_acceptance";
    fs::create_directories(dir);
    const fs::path data = TEST_DATA_DIR;

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    auto cli = [&](const std::string& args) {
        std::string cmd = std::string(COVERTCTL_BIN) + " " + args + " >/dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };

    std::string common = " --mdp " + (data / "pair2.json").string() + " --pi-star " +
                         (data / "pair2_pistar.json").string() + " --pi-adv " +
                         (data / "pair2_piadv.json").string();

    std::string mc = "detect" + common +
                     " --detector hoeffding --eta 0.05 --n 300 --reps 800 --seed 12345";
    out.require(cli(mc + " --threads 1 --out " + (dir / "mc1.csv").string()) == 0,
                "monte-carlo run failed at 1 thread");
    out.require(cli(mc + " --threads 8 --out " + (dir / "mc8.csv").string()) == 0,
                "monte-carlo run failed at 8 threads");
    out.require(slurp(dir / "mc1.csv") == slurp(dir / "mc8.csv"),
                "monte-carlo CSVs differ between 1 and 8 threads");

    std::string sweep = "sweep" + common +
                        " --detector np --eta -0.05 --n-values 8 10 12 14 --exact --seed 7";
    out.require(cli(sweep + " --threads 1 --out " + (dir / "sw1.csv").string()) == 0,
                "sweep run failed at 1 thread");
    out.require(cli(sweep + " --threads 8 --out " + (dir / "sw8.csv").string()) == 0,
                "sweep run failed at 8 threads");
    out.require(slurp(dir / "sw1.csv") == slurp(dir / "sw8.csv"),
                "sweep CSVs differ between 1 and 8 threads");
    out.require(slurp(dir / "sw1.csv.verdicts.csv") == slurp(dir / "sw8.csv.verdicts.csv"),
                "verdict CSVs differ between 1 and 8 threads");

    // rerun with the identical config reproduces the bytes as well
    out.require(cli(mc + " --threads 3 --out " + (dir / "mc_again.csv").string()) == 0,
                "monte-carlo rerun failed");
    out.require(slurp(dir / "mc_again.csv") == slurp(dir / "mc1.csv"),
                "rerun CSV differs from the original");
    return out;
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        std::function<Outcome()> fn;
    };
    std::vector<Entry> criteria = {
        {1, "worked-example covert LPs are exact", criterion1},
        {2, "covert policy passes long-run checks; a 0.1 shift is flagged", criterion2},
        {3, "LLR equals the D_K difference to 1e-10", criterion3},
        {4, "typical-set sandwich, mass, and adversarial bounds", criterion4},
        {5, "capped-alpha type-II decay approaches the divergence rate", criterion5},
        {6, "universal-test exponents: alpha slope and J(eta) vs grid", criterion6},
        {7, "rate minimizer within 1e-3 of oracles; gradient self-test", criterion7},
        {8, "planning problem matches the policy grid; frontier monotone", criterion8},
        {9, "CLI outputs byte-identical across thread counts", criterion9},
    };

    int failures = 0;
    for (auto& c : criteria) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.fn();
        } catch (const std::exception& e) {
            out.pass = false;
            out.notes.push_back(std::string("exception: ") + e.what());
        }
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] criterion %d: %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                    dt);
        for (const auto& n : out.notes) std::printf("        %s\n", n.c_str());
        if (!out.pass) ++failures;
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures;
}
