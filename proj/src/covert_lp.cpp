#include "covertmdp/covert_lp.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace covertmdp {

ConstraintMatrix build_constraint_matrix(const Mdp& mdp, std::size_t s) {
    if (s >= mdp.num_states) throw ValidationError("build_constraint_matrix: invalid state index");
    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    Matrix c(S + 1, A);
    for (std::size_t k = 0; k < S; ++k)
        for (std::size_t a = 0; a < A; ++a) c(k, a) = mdp.t(s, a, k);
    for (std::size_t a = 0; a < A; ++a) c(S, a) = 1.0;

    ConstraintMatrix out;
    out.c = c;
    SvdResult svd = jacobi_svd(c);
    out.rank = rank_from_singular_values(svd.singular_values, kRankTol);
    out.null_dim = A - out.rank;
    out.null_basis = Matrix(A, out.null_dim);
    for (std::size_t j = out.rank; j < A; ++j)
        for (std::size_t i = 0; i < A; ++i) out.null_basis(i, j - out.rank) = svd.v(i, j);
    return out;
}

namespace {

// strict "lexicographically smaller" with a small comparison fuzz
bool lex_less(const Vec& a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::fabs(a[i] - b[i]) <= 1e-12) continue;
        return a[i] < b[i];
    }
    return false;
}

struct Candidate {
    double objective;
    Vec delta;
};

void enumerate_vertices(const Matrix& basis, const Vec& lo, const Vec& hi, const Vec& reward,
                        std::vector<Candidate>& out) {
    const std::size_t A = basis.rows(), d = basis.cols();
    // all size-d subsets of rows, each row pinned at its lower or upper bound
    std::vector<std::size_t> idx(d);
    for (std::size_t i = 0; i < d; ++i) idx[i] = i;
    const double feas_tol = 1e-9;

    auto try_subset = [&](const std::vector<std::size_t>& rows) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
            Matrix sys(d, d);
            Vec rhs(d);
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = 0; j < d; ++j) sys(i, j) = basis(rows[i], j);
                rhs[i] = (mask >> i) & 1 ? hi[rows[i]] : lo[rows[i]];
            }
            Vec z;
            try {
                z = solve_linear(sys, rhs);
            } catch (const std::runtime_error&) {
                continue;  // active set not linearly independent
            }
            Vec delta(A, 0.0);
            bool feasible = true;
            for (std::size_t a = 0; a < A && feasible; ++a) {
                double v = dot(basis.row(a), z);
                if (v < lo[a] - feas_tol || v > hi[a] + feas_tol) feasible = false;
                delta[a] = std::clamp(v, lo[a], hi[a]);
            }
            if (!feasible) continue;
            double obj = dot(delta, reward);
            out.push_back({obj, std::move(delta)});
        }
    };

    while (true) {
        try_subset(idx);
        // next combination
        std::size_t i = d;
        while (i > 0) {
            --i;
            if (idx[i] != i + A - d) {
                ++idx[i];
                for (std::size_t j = i + 1; j < d; ++j) idx[j] = idx[j - 1] + 1;
                break;
            }
            if (i == 0) return;
        }
        if (d == 0) return;
    }
}

}  // namespace

CovertLpResult solve_covert_lp(const Mdp& mdp, const Policy& pi_star, std::size_t s) {
    if (s >= mdp.num_states) throw ValidationError("solve_covert_lp: invalid state index");
    if (pi_star.num_states() != mdp.num_states || pi_star.num_actions() != mdp.num_actions)
        throw ValidationError("solve_covert_lp: policy shape mismatch");

    const std::size_t A = mdp.num_actions;
    ConstraintMatrix cm = build_constraint_matrix(mdp, s);

    CovertLpResult res;
    res.feasible_dim = cm.null_dim;
    res.delta_pi.assign(A, 0.0);
    res.objective = 0.0;
    if (cm.null_dim == 0) return res;  // only the trivial deviation

    Vec lo(A), hi(A), reward(A);
    for (std::size_t a = 0; a < A; ++a) {
        lo[a] = -pi_star.probs(s, a);
        hi[a] = 1.0 - pi_star.probs(s, a);
        reward[a] = mdp.reward(s, a);
    }

    std::vector<Candidate> cands;
    cands.push_back({0.0, Vec(A, 0.0)});  // delta = 0 is always feasible
    enumerate_vertices(cm.null_basis, lo, hi, reward, cands);

    double best = cands.front().objective;
    for (const auto& c : cands) best = std::min(best, c.objective);
    const Candidate* chosen = nullptr;
    for (const auto& c : cands) {
        if (c.objective > best + 1e-12) continue;
        if (chosen == nullptr || lex_less(c.delta, chosen->delta)) chosen = &c;
    }
    res.delta_pi = chosen->delta;
    res.objective = chosen->objective;
    return res;
}

Policy optimal_covert_policy(const Mdp& mdp, const Policy& pi_star) {
    validate_policy(mdp, pi_star);
    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    Policy out{Matrix(S, A)};
    bool failed = false;
    std::string error;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(S); ++si) {
        try {
            auto s = static_cast<std::size_t>(si);
            CovertLpResult lp = solve_covert_lp(mdp, pi_star, s);
            for (std::size_t a = 0; a < A; ++a) {
                double v = pi_star.probs(s, a) + lp.delta_pi[a];
                out.probs(s, a) = std::clamp(v, 0.0, 1.0);
            }
        } catch (const std::exception& e) {
#pragma omp critical
            {
                failed = true;
                error = e.what();
            }
        }
    }
    if (failed) throw ValidationError("optimal_covert_policy: " + error);

    // renormalize away clamp dust so rows sum to 1 exactly within 1e-12
    for (std::size_t s = 0; s < S; ++s) {
        double sum = 0.0;
        for (std::size_t a = 0; a < A; ++a) sum += out.probs(s, a);
        for (std::size_t a = 0; a < A; ++a) out.probs(s, a) /= sum;
    }
    return out;
}

bool is_perfectly_covert(const Mdp& mdp, const Policy& pi_star, const Policy& pi_adv, double tol) {
    TransitionMatrix a = induced_transition_matrix(mdp, pi_star);
    TransitionMatrix b = induced_transition_matrix(mdp, pi_adv);
    return linf_diff(a.probs, b.probs) <= tol;
}

}  // namespace covertmdp
