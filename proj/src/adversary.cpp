#include "covertmdp/adversary.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "covertmdp/covert_lp.hpp"
#include "covertmdp/rng.hpp"

namespace covertmdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Euclidean projection of one policy row onto the probability simplex.
void project_simplex_row(std::span<double> row) {
    const std::size_t n = row.size();
    Vec sorted(row.begin(), row.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        cum += sorted[i];
        double t = (cum - 1.0) / static_cast<double>(i + 1);
        if (sorted[i] - t > 0.0) {
            k = i + 1;
            theta = t;
        }
    }
    (void)k;
    for (auto& v : row) v = std::max(v - theta, 0.0);
    // tidy the tiny normalization drift left by the clip
    double sum = 0.0;
    for (auto v : row) sum += v;
    for (auto& v : row) v /= sum;
}

void project_policy(Policy& pi) {
    for (std::size_t s = 0; s < pi.num_states(); ++s) project_simplex_row(pi.probs.row(s));
}

struct Evaluator {
    const AdversaryProblem* problem;
    DoubletDistribution theta_star;
    double j_star = 0.0;
    RateSolverConfig rate;

    // constraint J(eta); +infinity when the candidate chain degenerates
    double constraint(const Policy& pi) const {
        try {
            DoubletDistribution theta_adv = policy_doublet(problem->mdp, pi);
            return theorem4_exponents(theta_star, theta_adv, problem->eta, rate).e_beta;
        } catch (const std::exception&) {
            return kInf;
        }
    }

    double objective(const Policy& pi) const {  // delta_rho . r = J(pi) - J(pi*)
        try {
            return average_reward(problem->mdp, pi) - j_star;
        } catch (const std::exception&) {
            return kInf;
        }
    }

    double penalized(const Policy& pi, double weight) const {
        double c = constraint(pi);
        double h = c > problem->eta_beta ? c - problem->eta_beta : 0.0;
        if (!std::isfinite(h)) return kInf;
        return objective(pi) + weight * h;
    }

    // evaluation with one entry bumped and the row renormalized, so the
    // finite-difference probes stay on the policy simplex
    double penalized_bumped(const Policy& pi, std::size_t s, std::size_t a, double delta,
                            double weight) const {
        Policy probe = pi;
        probe.probs(s, a) = std::max(probe.probs(s, a) + delta, 0.0);
        double row = 0.0;
        for (std::size_t k = 0; k < probe.num_actions(); ++k) row += probe.probs(s, k);
        for (std::size_t k = 0; k < probe.num_actions(); ++k) probe.probs(s, k) /= row;
        return penalized(probe, weight);
    }
};

// Projected descent on the exact-penalty objective with central-difference
// gradients; the penalty weight doubles until the constraint holds.
void penalty_descent(Policy& pi, const Evaluator& eval, const AdversarySolverConfig& cfg) {
    const std::size_t S = pi.num_states(), A = pi.num_actions();
    double weight = 1.0;
    for (int stage = 0; stage < 14; ++stage) {
        double f = eval.penalized(pi, weight);
        int stall = 0;
        for (int it = 0; it < cfg.max_iters; ++it) {
            // finite-difference gradient through the simplex retraction
            Matrix grad(S, A);
            bool grad_ok = true;
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t a = 0; a < A; ++a) {
                    double down = std::min(cfg.fd_step, pi.probs(s, a));
                    double fp = eval.penalized_bumped(pi, s, a, cfg.fd_step, weight);
                    double fm = eval.penalized_bumped(pi, s, a, -down, weight);
                    if (!std::isfinite(fp) || !std::isfinite(fm)) {
                        grad_ok = false;
                        break;
                    }
                    grad(s, a) = (fp - fm) / (cfg.fd_step + down);
                }
            if (!grad_ok) break;
            double alpha = 0.5;
            bool moved = false;
            while (alpha >= 1e-10) {
                Policy cand = pi;
                for (std::size_t k = 0; k < cand.probs.size(); ++k)
                    cand.probs.data()[k] -= alpha * grad.data()[k];
                project_policy(cand);
                double fc = eval.penalized(cand, weight);
                if (fc < f - 1e-12) {
                    double drop = f - fc;
                    pi = std::move(cand);
                    f = fc;
                    moved = true;
                    stall = drop < 1e-9 * std::max(1.0, std::fabs(f)) ? stall + 1 : 0;
                    break;
                }
                alpha *= 0.5;
            }
            if (!moved || stall >= 3) break;
        }
        double c = eval.constraint(pi);
        if (c <= eval.problem->eta_beta + cfg.constraint_tol) break;
        weight *= 2.0;
    }
}

}  // namespace

double constraint_value(const AdversaryProblem& problem, const Policy& pi_adv,
                        const RateSolverConfig& rate_config) {
    DoubletDistribution theta_star = policy_doublet(problem.mdp, problem.pi_star);
    DoubletDistribution theta_adv = policy_doublet(problem.mdp, pi_adv);
    return theorem4_exponents(theta_star, theta_adv, problem.eta, rate_config).e_beta;
}

Policy unconstrained_reward_minimizer(const Mdp& mdp) {
    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    std::vector<std::size_t> action(S, 0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 1; a < A; ++a)
            if (mdp.reward(s, a) < mdp.reward(s, action[s])) action[s] = a;

    for (int round = 0; round < 1000; ++round) {
        Policy pi = deterministic_policy(mdp, action);
        TransitionMatrix t = induced_transition_matrix(mdp, pi);
        // gain/bias evaluation: g + h(s) - sum_s' T(s,s') h(s') = r(s), h(0) = 0
        Vec r_pi(S, 0.0);
        for (std::size_t s = 0; s < S; ++s) r_pi[s] = mdp.reward(s, action[s]);
        Matrix sys(S, S);
        for (std::size_t s = 0; s < S; ++s) {
            sys(s, 0) = 1.0;  // the gain column
            for (std::size_t j = 1; j < S; ++j)
                sys(s, j) = (s == j ? 1.0 : 0.0) - t.probs(s, j);
        }
        Vec gh = solve_linear(sys, r_pi);  // gh[0] = gain, gh[j] = h(j) for j >= 1
        Vec h(S, 0.0);
        for (std::size_t j = 1; j < S; ++j) h[j] = gh[j];

        bool changed = false;
        for (std::size_t s = 0; s < S; ++s) {
            std::size_t best = action[s];
            double best_q = kInf;
            for (std::size_t a = 0; a < A; ++a) {
                double q = mdp.reward(s, a);
                for (std::size_t s2 = 0; s2 < S; ++s2) q += mdp.t(s, a, s2) * h[s2];
                if (q < best_q - 1e-12) {
                    best_q = q;
                    best = a;
                }
            }
            if (best != action[s]) {
                action[s] = best;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return deterministic_policy(mdp, action);
}

AdversarySolution solve(const AdversaryProblem& problem, const AdversarySolverConfig& config) {
    validate_policy(problem.mdp, problem.pi_star);
    if (!(problem.eta > 0.0) || !(problem.eta_beta > 0.0))
        throw ValidationError("adversary::solve: eta and eta_beta must be positive");

    Evaluator eval;
    eval.problem = &problem;
    eval.theta_star = policy_doublet(problem.mdp, problem.pi_star);
    eval.j_star = average_reward(problem.mdp, problem.pi_star);
    eval.rate = config.search_rate;

    // seeds: pi*, the covert-LP policy (identical chain, so always feasible), the
    // unconstrained reward minimizer, and dithered copies
    Policy covert = optimal_covert_policy(problem.mdp, problem.pi_star);
    Policy greedy = unconstrained_reward_minimizer(problem.mdp);
    std::vector<Policy> seeds{problem.pi_star, covert, greedy};
    Xoshiro256 rng(config.dither_seed);
    while (static_cast<int>(seeds.size()) < config.multistarts) {
        Policy base = seeds[seeds.size() % 3];
        for (auto& v : base.probs.data()) v = std::max(v + 0.4 * (rng.next_double() - 0.5), 0.0);
        project_policy(base);
        seeds.push_back(std::move(base));
    }

    std::vector<Policy> finals(seeds.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(seeds.size()); ++i) {
        Policy pi = seeds[i];
        penalty_descent(pi, eval, config);
        finals[i] = std::move(pi);
    }
    // the raw seeds stay in the candidate pool: the covert-LP policy keeps the
    // pool nonempty (constraint value 0), and solve can never return anything
    // worse than it
    finals.insert(finals.end(), seeds.begin(), seeds.end());

    Evaluator report = eval;
    report.rate = config.report_rate;
    std::ptrdiff_t best = -1;
    double best_obj = kInf, best_c = kInf;
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(finals.size()); ++i) {
        double c = report.constraint(finals[i]);
        if (c > problem.eta_beta + config.constraint_tol) continue;
        double obj = report.objective(finals[i]);
        if (best < 0 || obj < best_obj - 1e-12) {
            best = i;
            best_obj = obj;
            best_c = c;
        }
    }
    if (best < 0) throw ValidationError("adversary::solve: no feasible candidate (unexpected)");

    AdversarySolution sol;
    sol.policy = finals[best];
    sol.regret = regret(problem.mdp, problem.pi_star, sol.policy);
    sol.constraint_value = best_c;
    sol.feasible = true;
    return sol;
}

std::vector<AdversarySolution> frontier(const AdversaryProblem& problem_template,
                                        const std::vector<double>& eta_betas,
                                        const AdversarySolverConfig& config) {
    for (std::size_t i = 0; i < eta_betas.size(); ++i) {
        if (!(eta_betas[i] > 0.0))
            throw ValidationError("adversary::frontier: eta_beta values must be positive");
        if (i > 0 && eta_betas[i] < eta_betas[i - 1])
            throw ValidationError("adversary::frontier: eta_beta values must be ascending");
    }
    std::vector<AdversarySolution> out(eta_betas.size());
    bool failed = false;
    std::string error;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(eta_betas.size()); ++i) {
        try {
            AdversaryProblem p = problem_template;
            p.eta_beta = eta_betas[i];
            out[i] = solve(p, config);
        } catch (const std::exception& e) {
#pragma omp critical
            {
                failed = true;
                error = e.what();
            }
        }
    }
    if (failed) throw ValidationError("adversary::frontier: " + error);
    // Nested feasible sets: a solution for a smaller eta_beta is feasible for
    // every larger one. Sweep forward so regrets are non-decreasing.
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i - 1].regret > out[i].regret) {
            out[i].policy = out[i - 1].policy;
            out[i].regret = out[i - 1].regret;
            out[i].constraint_value = out[i - 1].constraint_value;
            out[i].feasible = true;
        }
    }
    return out;
}

}  // namespace covertmdp
