#include "covertmdp/exponents.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "covertmdp/rng.hpp"

namespace covertmdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log2 of the transition matrix of theta, floored at 1e-300 so that zero
// transitions act as a steep barrier during iteration instead of an infinity.
Matrix log2_transition_floored(const DoubletDistribution& theta) {
    Matrix t = transition_from_doublet(theta);
    Matrix out(t.rows(), t.cols());
    for (std::size_t k = 0; k < t.size(); ++k)
        out.data()[k] = std::log2(std::max(t.data()[k], 1e-300));
    return out;
}

// D_K(x, target) in bits with x entries floored at `clip`.
double dk_clipped(const Vec& x, const Matrix& log2_t_target, double clip) {
    const std::size_t S = log2_t_target.rows();
    double f = 0.0;
    for (std::size_t i = 0; i < S; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < S; ++j) row += std::max(x[i * S + j], clip);
        double log_row = std::log2(row);
        for (std::size_t j = 0; j < S; ++j) {
            double v = std::max(x[i * S + j], clip);
            f += v * (std::log2(v) - log_row - log2_t_target(i, j));
        }
    }
    return f;
}

// grad(i,j) = log2(T_x(i,j) / T_target(i,j)) under the same clipping.
void dk_grad_clipped(const Vec& x, const Matrix& log2_t_target, double clip, Vec& grad) {
    const std::size_t S = log2_t_target.rows();
    for (std::size_t i = 0; i < S; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < S; ++j) row += std::max(x[i * S + j], clip);
        double log_row = std::log2(row);
        for (std::size_t j = 0; j < S; ++j) {
            double v = std::max(x[i * S + j], clip);
            grad[i * S + j] = std::log2(v) - log_row - log2_t_target(i, j);
        }
    }
}

// Projection onto M cap simplex, optionally intersected with {a.x <= b},
// by Dykstra alternating projections (corrections on the non-affine sets).
class FeasibleProjector {
public:
    FeasibleProjector(const ShiftInvariantProjector& affine, const Matrix* coeffs, double bound)
        : affine_(affine), coeffs_(coeffs), bound_(bound) {
        if (coeffs_ != nullptr)
            for (double c : coeffs_->data()) norm2_ += c * c;
    }

    void project(Vec& x) const {
        if (coeffs_ == nullptr) {
            affine_.project(x);
            return;
        }
        const std::size_t dim = x.size();
        Vec corr_h(dim, 0.0), corr_o(dim, 0.0), prev(dim);
        for (int it = 0; it < 4000; ++it) {
            prev = x;
            affine_.project_affine(x);
            // half-space, with Dykstra correction
            for (std::size_t k = 0; k < dim; ++k) x[k] += corr_h[k];
            double viol = -bound_;
            for (std::size_t k = 0; k < dim; ++k) viol += coeffs_->data()[k] * x[k];
            if (viol > 0.0 && norm2_ > 0.0) {
                double f = viol / norm2_;
                for (std::size_t k = 0; k < dim; ++k) {
                    double moved = x[k] - f * coeffs_->data()[k];
                    corr_h[k] = x[k] - moved;
                    x[k] = moved;
                }
            } else {
                std::fill(corr_h.begin(), corr_h.end(), 0.0);
            }
            // orthant, with Dykstra correction
            for (std::size_t k = 0; k < dim; ++k) {
                double y = x[k] + corr_o[k];
                double clipped = y > 0.0 ? y : 0.0;
                corr_o[k] = y - clipped;
                x[k] = clipped;
            }
            double change = 0.0;
            for (std::size_t k = 0; k < dim; ++k)
                change = std::max(change, std::fabs(x[k] - prev[k]));
            if (change < 1e-13) break;
        }
        // polish: land exactly on the affine part, drop negative dust
        affine_.project_affine(x);
        double sum = 0.0;
        for (double& v : x) {
            if (v < 0.0) v = 0.0;
            sum += v;
        }
        for (double& v : x) v /= sum;
    }

private:
    const ShiftInvariantProjector& affine_;
    const Matrix* coeffs_ = nullptr;
    double bound_ = 0.0;
    double norm2_ = 0.0;
};

struct Objective {
    const Matrix* log2_t_target = nullptr;
    const Matrix* log2_t_ref = nullptr;  // penalty term reference (D_K ball)
    double radius = 0.0;
    double weight = 0.0;  // penalty weight; 0 disables the term
    double clip = 1e-12;

    double value(const Vec& x) const {
        double f = dk_clipped(x, *log2_t_target, clip);
        if (weight > 0.0) {
            double h = std::max(0.0, dk_clipped(x, *log2_t_ref, clip) - radius);
            f += weight * h * h;
        }
        return f;
    }

    void gradient(const Vec& x, Vec& g) const {
        dk_grad_clipped(x, *log2_t_target, clip, g);
        if (weight > 0.0) {
            double h = std::max(0.0, dk_clipped(x, *log2_t_ref, clip) - radius);
            if (h > 0.0) {
                Vec gr(x.size());
                dk_grad_clipped(x, *log2_t_ref, clip, gr);
                for (std::size_t k = 0; k < x.size(); ++k) g[k] += 2.0 * weight * h * gr[k];
            }
        }
    }
};

// Projected gradient descent with backtracking line search (step halving).
double pgd(Vec& x, const Objective& obj, const FeasibleProjector& proj, int max_iters,
           double objective_tol) {
    proj.project(x);
    double f = obj.value(x);
    Vec g(x.size()), cand(x.size());
    int stall = 0;
    for (int it = 0; it < max_iters; ++it) {
        obj.gradient(x, g);
        double alpha = 1.0;
        bool moved = false;
        while (alpha >= 1e-14) {
            cand = x;
            for (std::size_t k = 0; k < x.size(); ++k) cand[k] -= alpha * g[k];
            proj.project(cand);
            double fc = obj.value(cand);
            if (fc < f - 1e-15) {
                double drop = f - fc;
                x.swap(cand);
                f = fc;
                moved = true;
                stall = drop < objective_tol * std::max(1.0, std::fabs(f)) ? stall + 1 : 0;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved || stall >= 3) break;
    }
    return f;
}

struct StartSchedule {
    std::vector<Vec> starts;
};

StartSchedule make_starts(const Vec& target, const Vec& anchor, std::size_t dim, int count,
                          std::uint64_t dither_seed) {
    StartSchedule sched;
    Vec uniform(dim, 1.0 / static_cast<double>(dim));
    std::vector<Vec> bases;
    bases.push_back(target);
    bases.push_back(anchor);
    bases.push_back(uniform);
    Vec mid1(dim), mid2(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        mid1[k] = 0.5 * (target[k] + anchor[k]);
        mid2[k] = 0.5 * (target[k] + uniform[k]);
    }
    bases.push_back(mid1);
    bases.push_back(mid2);

    Xoshiro256 rng(dither_seed);
    for (int s = 0; s < count; ++s) {
        if (s < static_cast<int>(bases.size())) {
            sched.starts.push_back(bases[s]);
        } else {
            const Vec& base = bases[s % bases.size()];
            Vec d(dim);
            for (std::size_t k = 0; k < dim; ++k)
                d[k] = std::max(base[k] + 0.3 * (rng.next_double() - 0.5), 1e-9);
            sched.starts.push_back(std::move(d));
        }
    }
    return sched;
}

struct CandidateResult {
    Vec x;
    double clipped_value = kInf;
    double violation = kInf;
};

std::string spec_string(const FeasibleSet& fs) {
    if (std::holds_alternative<Unconstrained>(fs)) return "unconstrained";
    if (const auto* a = std::get_if<AffineConstraint>(&fs))
        return a->less_equal ? "affine: L(nu) <= eta" : "affine: L(nu) >= eta";
    const auto& b = std::get<DkBall>(fs);
    return "ball: D_K(nu, ref) <= " + std::to_string(b.radius);
}

}  // namespace

Matrix dk_gradient(const DoubletDistribution& nu, const DoubletDistribution& target) {
    Matrix log2_t = log2_transition_floored(target);
    Vec g(nu.probs.size());
    dk_grad_clipped(nu.probs.data(), log2_t, 1e-12, g);
    Matrix out(nu.num_states(), nu.num_states());
    out.data() = std::move(g);
    return out;
}

RateMinimization minimize_rate(const DoubletDistribution& target, const FeasibleSet& feasible,
                               const RateSolverConfig& config) {
    const std::size_t S = target.num_states();
    const std::size_t dim = S * S;
    if (!is_shift_invariant(target, kShiftInvariantTol))
        throw ValidationError("minimize_rate: target is not shift-invariant");

    RateMinimization out;
    out.constraint_spec = spec_string(feasible);

    // normalized constraint data
    Matrix coeffs;           // a.x <= bound form
    double bound = 0.0;
    bool has_halfspace = false;
    const DkBall* ball = nullptr;

    if (const auto* a = std::get_if<AffineConstraint>(&feasible)) {
        if (a->coeffs.rows() != S || a->coeffs.cols() != S)
            throw ValidationError("minimize_rate: malformed constraint (coefficient shape)");
        for (double c : a->coeffs.data())
            if (!std::isfinite(c))
                throw ValidationError("minimize_rate: malformed constraint (non-finite coefficient)");
        if (!std::isfinite(a->bound))
            throw ValidationError("minimize_rate: malformed constraint (non-finite bound)");
        coeffs = a->coeffs;
        bound = a->bound;
        if (!a->less_equal) {
            for (double& c : coeffs.data()) c = -c;
            bound = -bound;
        }
        has_halfspace = true;
    } else if ((ball = std::get_if<DkBall>(&feasible)) != nullptr) {
        if (!(ball->radius > 0.0))
            throw ValidationError("minimize_rate: malformed constraint (ball radius must be > 0)");
        if (ball->ref.num_states() != S)
            throw ValidationError("minimize_rate: malformed constraint (ball dimension)");
        if (!is_shift_invariant(ball->ref, kShiftInvariantTol))
            throw ValidationError("minimize_rate: ball reference is not shift-invariant");
    }

    // the infimum is 0 with minimizer = target whenever target is feasible
    bool target_feasible = true;
    if (has_halfspace) {
        double l = dot(coeffs.data(), target.probs.data());
        target_feasible = l <= bound + 1e-12;
    } else if (ball != nullptr) {
        double g = dk_divergence(target, ball->ref);
        target_feasible = g <= ball->radius + 1e-12;
    }
    if (target_feasible) {
        out.minimizer = target;
        out.value = 0.0;
        out.status = RateStatus::interior_optimum;
        return out;
    }

    ShiftInvariantProjector affine(S);
    FeasibleProjector proj(affine, has_halfspace ? &coeffs : nullptr, bound);
    Matrix log2_t_target = log2_transition_floored(target);
    Matrix log2_t_ref;
    if (ball != nullptr) log2_t_ref = log2_transition_floored(ball->ref);

    // anchor start: the ball reference, or the target pushed into the half-space
    Vec anchor;
    if (ball != nullptr) {
        anchor = ball->ref.probs.data();
    } else {
        anchor = target.probs.data();
        proj.project(anchor);
    }
    StartSchedule sched =
        make_starts(target.probs.data(), anchor, dim, config.multistarts, config.dither_seed);

    std::vector<CandidateResult> results(sched.starts.size());

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sched.starts.size()); ++i) {
        Vec x = sched.starts[i];
        CandidateResult r;
        if (has_halfspace) {
            Objective obj{&log2_t_target, nullptr, 0.0, 0.0, config.clip};
            r.clipped_value = pgd(x, obj, proj, config.max_iters, config.objective_tol);
            double l = dot(coeffs.data(), x);
            r.violation = std::max(0.0, l - bound);
        } else {
            // D_K ball via exact penalty with doubling weight; later stages
            // run warm-started and need fewer iterations
            Objective obj{&log2_t_target, &log2_t_ref, ball->radius, 16.0, config.clip};
            double h = kInf;
            for (int stage = 0; stage < 18; ++stage) {
                int iters = stage == 0 ? config.max_iters : std::max(60, config.max_iters / 4);
                pgd(x, obj, proj, iters, config.objective_tol);
                h = std::max(0.0, dk_clipped(x, log2_t_ref, config.clip) - ball->radius);
                if (h <= 1e-9) break;
                obj.weight *= 8.0;
            }
            r.clipped_value = dk_clipped(x, log2_t_target, config.clip);
            r.violation = h;
        }
        r.x = std::move(x);
        results[i] = std::move(r);
    }

    // deterministic reduction: best feasible value, ties to the lowest index
    std::ptrdiff_t best = -1;
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(results.size()); ++i) {
        if (results[i].violation > config.feasibility_tol) continue;
        if (best < 0 || results[i].clipped_value < results[best].clipped_value) best = i;
    }

    if (best < 0) {
        // Half-space projection always lands inside a nonempty intersection,
        // and a D_K ball contains its reference; reaching here means the
        // feasible set is empty.
        out.status = RateStatus::infeasible_empty_set;
        out.value = kInf;
        std::ptrdiff_t least = 0;
        for (std::ptrdiff_t i = 1; i < static_cast<std::ptrdiff_t>(results.size()); ++i)
            if (results[i].violation < results[least].violation) least = i;
        Matrix m(S, S);
        m.data() = results[least].x;
        out.minimizer = {m};
        return out;
    }

    Vec x = results[best].x;
    // snap sub-clip dust to exact zeros before the unclipped evaluation
    double sum = 0.0;
    for (double& v : x) {
        if (v < 1e-13) v = 0.0;
        sum += v;
    }
    for (double& v : x) v /= sum;

    Matrix m(S, S);
    m.data() = std::move(x);
    out.minimizer = {m};
    out.value = dk_divergence(out.minimizer, target, 1e-8);
    out.status = RateStatus::boundary_optimum;
    return out;
}

Matrix llr_coefficients(const DoubletDistribution& theta_star,
                        const DoubletDistribution& theta_adv) {
    if (theta_star.num_states() != theta_adv.num_states())
        throw ValidationError("llr_coefficients: dimension mismatch");
    Matrix t1 = transition_from_doublet(theta_star);
    Matrix t2 = transition_from_doublet(theta_adv);
    const std::size_t S = t1.rows();
    Matrix lambda(S, S);
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j) {
            double a = t1(i, j), b = t2(i, j);
            if (a == 0.0 && b == 0.0) {
                lambda(i, j) = 0.0;
            } else if (a == 0.0 || b == 0.0) {
                throw ValidationError(
                    "llr_coefficients: transition matrices are not mutually absolutely "
                    "continuous; the LLR functional is unbounded");
            } else {
                lambda(i, j) = std::log2(a / b);
            }
        }
    return lambda;
}

double llr_of(const Matrix& lambda, const DoubletDistribution& nu) {
    return dot(lambda.data(), nu.probs.data());
}

Theorem2Result theorem2_details(const DoubletDistribution& theta_star,
                                const DoubletDistribution& theta_adv, double eta,
                                const RateSolverConfig& config) {
    double d_fwd = dk_divergence(theta_star, theta_adv);   // D_K(theta*, theta_adv)
    double d_rev = dk_divergence(theta_adv, theta_star);   // D_K(theta_adv, theta*)
    if (eta < -d_rev - 1e-12 || eta > d_fwd + 1e-12)
        throw ValidationError("theorem2: eta outside [-D_K(adv,*), D_K(*,adv)] = [" +
                              std::to_string(-d_rev) + ", " + std::to_string(d_fwd) + "]");
    Matrix lambda = llr_coefficients(theta_star, theta_adv);
    Theorem2Result r;
    r.alpha_minimization =
        minimize_rate(theta_star, AffineConstraint{lambda, eta, true}, config);
    r.beta_minimization =
        minimize_rate(theta_adv, AffineConstraint{lambda, eta, false}, config);
    return r;
}

ExponentPair theorem2_exponents(const DoubletDistribution& theta_star,
                                const DoubletDistribution& theta_adv, double eta,
                                const RateSolverConfig& config) {
    Theorem2Result r = theorem2_details(theta_star, theta_adv, eta, config);
    return {r.alpha_minimization.value, r.beta_minimization.value};
}

double chernoff_stein_exponent(const DoubletDistribution& theta_star,
                               const DoubletDistribution& theta_adv) {
    double d = dk_divergence(theta_star, theta_adv);
    if (!std::isfinite(d))
        throw ValidationError("chernoff_stein_exponent: D_K(theta*, theta_adv) is infinite");
    return d;
}

Theorem4Result theorem4_details(const DoubletDistribution& theta_star,
                                const DoubletDistribution& theta_adv, double eta,
                                const RateSolverConfig& config) {
    if (!(eta > 0.0)) throw ValidationError("theorem4: eta must be positive");
    Theorem4Result r;
    r.beta_minimization = minimize_rate(theta_adv, DkBall{theta_star, eta}, config);
    r.exponents = {eta, r.beta_minimization.value};
    return r;
}

ExponentPair theorem4_exponents(const DoubletDistribution& theta_star,
                                const DoubletDistribution& theta_adv, double eta,
                                const RateSolverConfig& config) {
    return theorem4_details(theta_star, theta_adv, eta, config).exponents;
}

}  // namespace covertmdp
