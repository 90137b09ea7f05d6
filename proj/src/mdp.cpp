#include "covertmdp/mdp.hpp"

#include <cmath>
#include <queue>
#include <sstream>

namespace covertmdp {

namespace {

void check_distribution(const Vec& p, double tol, const std::string& what) {
    double sum = 0.0;
    for (double x : p) {
        if (!(x >= 0.0) || x > 1.0 + tol)
            throw ValidationError(what + ": entry " + std::to_string(x) + " outside [0,1]");
        sum += x;
    }
    if (std::fabs(sum - 1.0) > tol)
        throw ValidationError(what + ": sums to " + std::to_string(sum) + ", expected 1");
}

std::vector<std::size_t> unreachable_from(const Matrix& adj, std::size_t src, bool reverse) {
    const std::size_t n = adj.rows();
    std::vector<char> seen(n, 0);
    std::queue<std::size_t> q;
    q.push(src);
    seen[src] = 1;
    while (!q.empty()) {
        std::size_t u = q.front();
        q.pop();
        for (std::size_t v = 0; v < n; ++v) {
            double w = reverse ? adj(v, u) : adj(u, v);
            if (w > 0.0 && !seen[v]) {
                seen[v] = 1;
                q.push(v);
            }
        }
    }
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < n; ++i)
        if (!seen[i]) missing.push_back(i);
    return missing;
}

}  // namespace

std::vector<std::size_t> irreducibility_defect(const TransitionMatrix& t) {
    auto fwd = unreachable_from(t.probs, 0, false);
    if (!fwd.empty()) return fwd;
    return unreachable_from(t.probs, 0, true);
}

void validate(const Mdp& mdp) {
    if (mdp.num_states == 0 || mdp.num_actions == 0)
        throw ValidationError("mdp: num_states and num_actions must be positive");
    if (mdp.transition.size() != mdp.num_states * mdp.num_actions * mdp.num_states)
        throw ValidationError("mdp: transition tensor has wrong size");
    if (mdp.reward.rows() != mdp.num_states || mdp.reward.cols() != mdp.num_actions)
        throw ValidationError("mdp: reward matrix has wrong shape");
    if (mdp.initial.size() != mdp.num_states)
        throw ValidationError("mdp: initial distribution has wrong length");

    for (std::size_t s = 0; s < mdp.num_states; ++s)
        for (std::size_t a = 0; a < mdp.num_actions; ++a) {
            Vec row(mdp.num_states);
            for (std::size_t s2 = 0; s2 < mdp.num_states; ++s2) row[s2] = mdp.t(s, a, s2);
            check_distribution(row, kStochasticTol,
                               "T(.|s=" + std::to_string(s) + ",a=" + std::to_string(a) + ")");
        }
    check_distribution(mdp.initial, kStochasticTol, "initial distribution");
    for (double r : mdp.reward.data())
        if (!std::isfinite(r)) throw ValidationError("mdp: non-finite reward entry");

    auto missing = irreducibility_defect(induced_transition_matrix(mdp, uniform_policy(mdp)));
    if (!missing.empty()) {
        std::ostringstream os;
        os << "mdp: uniform-policy chain is not irreducible; disconnected states {";
        for (std::size_t i = 0; i < missing.size(); ++i) os << (i ? "," : "") << missing[i];
        os << "}";
        throw ValidationError(os.str());
    }
}

void validate_policy(const Mdp& mdp, const Policy& policy) {
    if (policy.num_states() != mdp.num_states || policy.num_actions() != mdp.num_actions)
        throw ValidationError("policy: shape does not match mdp");
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
        Vec row(policy.probs.row(s).begin(), policy.probs.row(s).end());
        check_distribution(row, kStochasticTol, "pi(.|s=" + std::to_string(s) + ")");
    }
}

Policy uniform_policy(const Mdp& mdp) {
    Policy p{Matrix(mdp.num_states, mdp.num_actions, 1.0 / static_cast<double>(mdp.num_actions))};
    return p;
}

Policy deterministic_policy(const Mdp& mdp, const std::vector<std::size_t>& action_per_state) {
    if (action_per_state.size() != mdp.num_states)
        throw ValidationError("deterministic_policy: need one action per state");
    Policy p{Matrix(mdp.num_states, mdp.num_actions)};
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
        if (action_per_state[s] >= mdp.num_actions)
            throw ValidationError("deterministic_policy: action index out of range");
        p.probs(s, action_per_state[s]) = 1.0;
    }
    return p;
}

TransitionMatrix induced_transition_matrix(const Mdp& mdp, const Policy& policy) {
    if (policy.num_states() != mdp.num_states || policy.num_actions() != mdp.num_actions)
        throw ValidationError("induced_transition_matrix: policy shape mismatch");
    Matrix t(mdp.num_states, mdp.num_states);
    for (std::size_t s = 0; s < mdp.num_states; ++s)
        for (std::size_t a = 0; a < mdp.num_actions; ++a) {
            double w = policy.probs(s, a);
            if (w == 0.0) continue;
            for (std::size_t s2 = 0; s2 < mdp.num_states; ++s2) t(s, s2) += w * mdp.t(s, a, s2);
        }
    return {t};
}

StateDistribution stationary_distribution(const TransitionMatrix& t) {
    const std::size_t n = t.num_states();
    if (n == 0) throw ValidationError("stationary_distribution: empty matrix");
    auto missing = irreducibility_defect(t);
    if (!missing.empty())
        throw ValidationError("stationary_distribution: matrix is not irreducible (state " +
                              std::to_string(missing[0]) + " disconnected); no unique fixed point");

    Vec tau;
    if (n <= 200) {
        // (I - T^T) tau = 0 with the first row replaced by the normalization
        // sum(tau) = 1; rows of I - T^T always sum to zero, so no rank is lost.
        Matrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                a(i, j) = (i == j ? 1.0 : 0.0) - t.probs(j, i);
        Vec b(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) a(0, j) = 1.0;
        b[0] = 1.0;
        tau = solve_linear(std::move(a), std::move(b));
    } else {
        // power iteration on the lazy chain (T + I)/2: same fixed point, aperiodic
        tau.assign(n, 1.0 / static_cast<double>(n));
        Vec next(n);
        for (int it = 0; it < 1000000; ++it) {
            std::fill(next.begin(), next.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                next[i] += 0.5 * tau[i];
                for (std::size_t j = 0; j < n; ++j) next[j] += 0.5 * tau[i] * t.probs(i, j);
            }
            double delta = 0.0;
            for (std::size_t i = 0; i < n; ++i) delta = std::max(delta, std::fabs(next[i] - tau[i]));
            tau.swap(next);
            if (delta < 1e-14) break;
        }
    }

    double sum = 0.0;
    for (double& x : tau) {
        if (x < 0.0 && x > -1e-10) x = 0.0;
        sum += x;
    }
    for (double& x : tau) x /= sum;

    double residual = 0.0;
    for (std::size_t j = 0; j < t.num_states(); ++j) {
        double tj = 0.0;
        for (std::size_t i = 0; i < t.num_states(); ++i) tj += tau[i] * t.probs(i, j);
        residual = std::max(residual, std::fabs(tj - tau[j]));
    }
    if (residual > 1e-10)
        throw ValidationError("stationary_distribution: fixed-point residual " +
                              std::to_string(residual) + " exceeds 1e-10");
    return {tau};
}

DoubletDistribution doublet_distribution(const StateDistribution& tau, const TransitionMatrix& t) {
    const std::size_t n = t.num_states();
    if (tau.probs.size() != n) throw ValidationError("doublet_distribution: dimension mismatch");
    Matrix theta(n, n);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t s2 = 0; s2 < n; ++s2) theta(s, s2) = tau.probs[s] * t.probs(s, s2);
    return {theta};
}

DoubletDistribution policy_doublet(const Mdp& mdp, const Policy& policy) {
    TransitionMatrix t = induced_transition_matrix(mdp, policy);
    return doublet_distribution(stationary_distribution(t), t);
}

double average_reward(const Mdp& mdp, const Policy& policy) {
    StateDistribution tau = stationary_distribution(induced_transition_matrix(mdp, policy));
    double j = 0.0;
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
        double per_visit = 0.0;
        for (std::size_t a = 0; a < mdp.num_actions; ++a)
            per_visit += policy.probs(s, a) * mdp.reward(s, a);
        j += tau.probs[s] * per_visit;
    }
    return j;
}

double regret(const Mdp& mdp, const Policy& pi_star, const Policy& pi) {
    return average_reward(mdp, pi_star) - average_reward(mdp, pi);
}

StateActionFrequencies state_action_frequencies(const Mdp& mdp, const Policy& policy) {
    StateDistribution tau = stationary_distribution(induced_transition_matrix(mdp, policy));
    Matrix rho(mdp.num_states, mdp.num_actions);
    for (std::size_t s = 0; s < mdp.num_states; ++s)
        for (std::size_t a = 0; a < mdp.num_actions; ++a)
            rho(s, a) = tau.probs[s] * policy.probs(s, a);
    return {rho};
}

}  // namespace covertmdp
