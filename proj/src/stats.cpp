#include "covertmdp/stats.hpp"

#include <cmath>
#include <limits>

namespace covertmdp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

EmpiricalStats empirical_stats(const Trajectory& traj, std::size_t num_states) {
    const std::size_t n = traj.length();
    if (n < 2) throw ValidationError("empirical_stats: need at least 2 states");
    for (auto s : traj.states)
        if (s < 0 || static_cast<std::size_t>(s) >= num_states)
            throw ValidationError("empirical_stats: state index " + std::to_string(s) +
                                  " out of range");

    Vec tau(num_states, 0.0), tau_prefix(num_states, 0.0);
    Matrix theta(num_states, num_states);
    for (std::size_t t = 0; t < n; ++t) tau[traj.states[t]] += 1.0;
    for (std::size_t t = 0; t + 1 < n; ++t) {
        theta(traj.states[t], traj.states[t + 1]) += 1.0;
        tau_prefix[traj.states[t]] += 1.0;
    }
    for (double& x : tau) x /= static_cast<double>(n);
    for (double& x : tau_prefix) x /= static_cast<double>(n - 1);
    for (double& x : theta.data()) x /= static_cast<double>(n - 1);

    Matrix t_hat(num_states, num_states);
    for (std::size_t s = 0; s < num_states; ++s)
        for (std::size_t s2 = 0; s2 < num_states; ++s2)
            t_hat(s, s2) = tau[s] > 0.0 ? theta(s, s2) / tau[s] : 0.0;

    return {{std::move(tau)}, {std::move(theta)}, std::move(t_hat), {std::move(tau_prefix)}};
}

double relative_entropy(const Vec& p, const Vec& q) {
    if (p.size() != q.size()) throw ValidationError("relative_entropy: dimension mismatch");
    double h = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (q[i] == 0.0) return kInf;
        h += p[i] * std::log2(p[i] / q[i]);
    }
    return h < 0.0 && h > -1e-12 ? 0.0 : h;
}

StateDistribution doublet_row_marginal(const DoubletDistribution& theta) {
    const std::size_t n = theta.num_states();
    Vec m(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m[i] += theta.probs(i, j);
    return {m};
}

StateDistribution doublet_col_marginal(const DoubletDistribution& theta) {
    const std::size_t n = theta.num_states();
    Vec m(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m[j] += theta.probs(i, j);
    return {m};
}

Matrix transition_from_doublet(const DoubletDistribution& theta) {
    const std::size_t n = theta.num_states();
    StateDistribution tau = doublet_row_marginal(theta);
    Matrix t(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            t(i, j) = tau.probs[i] > 0.0 ? theta.probs(i, j) / tau.probs[i] : 0.0;
    return t;
}

bool is_shift_invariant(const DoubletDistribution& theta, double tol) {
    StateDistribution r = doublet_row_marginal(theta);
    StateDistribution c = doublet_col_marginal(theta);
    for (std::size_t i = 0; i < r.probs.size(); ++i)
        if (std::fabs(r.probs[i] - c.probs[i]) > tol) return false;
    return true;
}

double dk_divergence(const DoubletDistribution& theta1, const DoubletDistribution& theta2,
                     double tol) {
    if (theta1.num_states() != theta2.num_states())
        throw ValidationError("dk_divergence: dimension mismatch");
    if (!is_shift_invariant(theta1, tol) || !is_shift_invariant(theta2, tol))
        throw ValidationError("dk_divergence: input is not shift-invariant within tolerance " +
                              std::to_string(tol));

    const std::size_t n = theta1.num_states();
    StateDistribution tau1 = doublet_row_marginal(theta1);
    StateDistribution tau2 = doublet_row_marginal(theta2);
    double d = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        if (tau1.probs[s] == 0.0) continue;
        for (std::size_t s2 = 0; s2 < n; ++s2) {
            double t1 = theta1.probs(s, s2) / tau1.probs[s];
            if (t1 == 0.0) continue;
            double t2 = tau2.probs[s] > 0.0 ? theta2.probs(s, s2) / tau2.probs[s] : 0.0;
            if (t2 == 0.0) return kInf;
            d += tau1.probs[s] * t1 * std::log2(t1 / t2);
        }
    }
    return d < 0.0 && d > -1e-12 ? 0.0 : d;
}

ShiftInvariantProjector::ShiftInvariantProjector(std::size_t num_states) : n_(num_states) {
    // S-1 balance rows (row i marginal minus column i marginal) plus the sum row.
    const std::size_t dim = n_ * n_;
    const std::size_t m = n_;  // (n_-1) balance + 1 sum
    constraints_ = Matrix(m, dim);
    rhs_ = Vec(m, 0.0);
    for (std::size_t i = 0; i + 1 < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
            constraints_(i, i * n_ + j) += 1.0;
            constraints_(i, j * n_ + i) -= 1.0;
        }
    }
    for (std::size_t k = 0; k < dim; ++k) constraints_(m - 1, k) = 1.0;
    rhs_[m - 1] = 1.0;

    Matrix gram(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) gram(i, j) = dot(constraints_.row(i), constraints_.row(j));
    // invert the Gram matrix column by column
    gram_inverse_ = Matrix(m, m);
    for (std::size_t j = 0; j < m; ++j) {
        Vec e(m, 0.0);
        e[j] = 1.0;
        Vec col = solve_linear(gram, e);
        for (std::size_t i = 0; i < m; ++i) gram_inverse_(i, j) = col[i];
    }
}

void ShiftInvariantProjector::project_affine(Vec& x) const {
    const std::size_t m = constraints_.rows();
    Vec viol(m);
    for (std::size_t i = 0; i < m; ++i) viol[i] = dot(constraints_.row(i), x) - rhs_[i];
    Vec mult(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) mult[i] += gram_inverse_(i, j) * viol[j];
    for (std::size_t i = 0; i < m; ++i) {
        if (mult[i] == 0.0) continue;
        auto row = constraints_.row(i);
        for (std::size_t k = 0; k < x.size(); ++k) x[k] -= mult[i] * row[k];
    }
}

void ShiftInvariantProjector::project(Vec& x) const {
    // Dykstra between the affine subspace and the nonnegative orthant. The
    // affine set being a subspace translate, only the orthant needs a
    // correction term.
    Vec corr(x.size(), 0.0);
    Vec prev;
    for (int it = 0; it < 4000; ++it) {
        project_affine(x);
        prev = x;
        double change = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            double y = x[k] + corr[k];
            double clipped = y > 0.0 ? y : 0.0;
            corr[k] = y - clipped;
            change = std::max(change, std::fabs(clipped - prev[k]));
            x[k] = clipped;
        }
        if (change < 1e-14) break;
    }
    project_affine(x);
    for (double& v : x)
        if (v < 0.0) v = 0.0;  // residual negatives are below 1e-12
    double sum = 0.0;
    for (double v : x) sum += v;
    for (double& v : x) v /= sum;
}

DoubletDistribution project_to_shift_invariant(const DoubletDistribution& theta) {
    ShiftInvariantProjector proj(theta.num_states());
    Vec x = theta.probs.data();
    proj.project(x);
    Matrix out(theta.num_states(), theta.num_states());
    out.data() = std::move(x);
    return {out};
}

}  // namespace covertmdp
