#include "covertmdp/detection.hpp"

#include <omp.h>

#include <cmath>
#include <limits>

#include "covertmdp/simulate.hpp"

namespace covertmdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Normalized LLR from a doublet count matrix, summed in fixed (s,s') order so
// equal count matrices produce bit-identical values.
double llr_from_counts(const Matrix& counts, const Matrix& t_star, const Matrix& t_adv,
                       double transitions) {
    bool p_star_zero = false, p_adv_zero = false;
    double sum = 0.0;
    const std::size_t S = counts.rows();
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j) {
            double c = counts(i, j);
            if (c == 0.0) continue;
            double ts = t_star(i, j), ta = t_adv(i, j);
            if (ts == 0.0 && ta == 0.0)
                throw ValidationError("log_likelihood_ratio: trajectory impossible under both hypotheses");
            if (ts == 0.0) p_star_zero = true;
            else if (ta == 0.0) p_adv_zero = true;
            else sum += c * std::log2(ts / ta);
        }
    if (p_star_zero && p_adv_zero)
        throw ValidationError("log_likelihood_ratio: trajectory impossible under both hypotheses");
    if (p_star_zero) return -kInf;
    if (p_adv_zero) return kInf;
    return sum / transitions;
}

Matrix counts_of(const Trajectory& traj, std::size_t num_states) {
    Matrix counts(num_states, num_states);
    for (std::size_t t = 0; t + 1 < traj.length(); ++t)
        counts(traj.states[t], traj.states[t + 1]) += 1.0;
    return counts;
}

// D_K(theta_emp, theta_star) from a count matrix. The raw empirical doublet
// distribution misses M by at most 1/(n-1) (first vs last state); within
// 2/(n-1) it is projected, beyond that it is rejected.
double hoeffding_statistic(const Matrix& counts, const DoubletDistribution& theta_star,
                           double transitions, const ShiftInvariantProjector& projector) {
    const std::size_t S = counts.rows();
    Matrix theta(S, S);
    for (std::size_t k = 0; k < theta.size(); ++k) theta.data()[k] = counts.data()[k] / transitions;
    DoubletDistribution emp{theta};

    double violation = 0.0;
    {
        StateDistribution r = doublet_row_marginal(emp);
        StateDistribution c = doublet_col_marginal(emp);
        for (std::size_t i = 0; i < S; ++i)
            violation = std::max(violation, std::fabs(r.probs[i] - c.probs[i]));
    }
    if (violation > 2.0 / transitions + 1e-12)
        throw ValidationError("hoeffding_detector: empirical distribution misses M by " +
                              std::to_string(violation) + ", beyond the boundary-effect bound");
    if (violation > 1e-12) {
        Vec x = emp.probs.data();
        projector.project(x);
        emp.probs.data() = std::move(x);
    }
    return dk_divergence(emp, theta_star, kShiftInvariantTol);
}

}  // namespace

double log_likelihood_ratio(const Trajectory& traj, const TransitionMatrix& t_star,
                            const TransitionMatrix& t_adv) {
    if (traj.length() < 2) throw ValidationError("log_likelihood_ratio: need n >= 2");
    if (t_star.num_states() != t_adv.num_states())
        throw ValidationError("log_likelihood_ratio: matrix dimension mismatch");
    Matrix counts = counts_of(traj, t_star.num_states());
    return llr_from_counts(counts, t_star.probs, t_adv.probs,
                           static_cast<double>(traj.length() - 1));
}

Decision np_detector(const Trajectory& traj, const TransitionMatrix& t_star,
                     const TransitionMatrix& t_adv, double eta) {
    if (!std::isfinite(eta)) throw ValidationError("np_detector: threshold must be finite");
    double l = log_likelihood_ratio(traj, t_star, t_adv);
    return {l > eta ? 0 : 1, l, eta};
}

Decision hoeffding_detector(const Trajectory& traj, const DoubletDistribution& theta_star,
                            double eta) {
    if (!(eta > 0.0)) throw ValidationError("hoeffding_detector: eta must be positive");
    if (traj.length() < 2) throw ValidationError("hoeffding_detector: need n >= 2");
    Matrix counts = counts_of(traj, theta_star.num_states());
    ShiftInvariantProjector projector(theta_star.num_states());
    double stat = hoeffding_statistic(counts, theta_star, static_cast<double>(traj.length() - 1),
                                      projector);
    return {stat < eta ? 0 : 1, stat, eta};
}

bool dk_typical_membership(const Trajectory& traj, const TransitionMatrix& t_star,
                           const TransitionMatrix& t_adv, double delta) {
    if (!(delta > 0.0)) throw ValidationError("dk_typical_membership: delta must be positive");
    DoubletDistribution theta_star =
        doublet_distribution(stationary_distribution(t_star), t_star);
    DoubletDistribution theta_adv = doublet_distribution(stationary_distribution(t_adv), t_adv);
    double d = dk_divergence(theta_star, theta_adv);
    if (!std::isfinite(d))
        throw ValidationError("dk_typical_membership: D_K(theta*, theta_adv) is infinite");
    double l = log_likelihood_ratio(traj, t_star, t_adv);
    return std::fabs(l - d) <= delta;
}

ErrorRates error_rates_monte_carlo(const Mdp& mdp, const Policy& pi_star, const Policy& pi_adv,
                                   const DetectorSpec& spec, std::size_t n,
                                   std::size_t replications, std::uint64_t master_seed) {
    if (replications < 1) throw ValidationError("error_rates_monte_carlo: replications >= 1");
    if (n < 2) throw ValidationError("error_rates_monte_carlo: need n >= 2");
    validate_policy(mdp, pi_star);
    validate_policy(mdp, pi_adv);
    if (spec.kind == DetectorKind::hoeffding && !(spec.eta > 0.0))
        throw ValidationError("error_rates_monte_carlo: hoeffding eta must be positive");
    if (spec.kind == DetectorKind::np && !std::isfinite(spec.eta))
        throw ValidationError("error_rates_monte_carlo: np eta must be finite");

    TransitionMatrix t_star = induced_transition_matrix(mdp, pi_star);
    TransitionMatrix t_adv = induced_transition_matrix(mdp, pi_adv);
    DoubletDistribution theta_star =
        doublet_distribution(stationary_distribution(t_star), t_star);
    ShiftInvariantProjector projector(mdp.num_states);
    const double transitions = static_cast<double>(n - 1);

    long long rejected_null = 0, accepted_adv = 0;
    bool failed = false;
    std::string error;

#pragma omp parallel for schedule(static) reduction(+ : rejected_null, accepted_adv)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(replications); ++r) {
        try {
            auto rep = static_cast<std::uint64_t>(r);
            Matrix c_null = simulate_doublet_counts(t_star, mdp.initial, n,
                                                    derive_seed(master_seed, 2 * rep));
            Matrix c_adv = simulate_doublet_counts(t_adv, mdp.initial, n,
                                                   derive_seed(master_seed, 2 * rep + 1));
            if (spec.kind == DetectorKind::np) {
                double l0 = llr_from_counts(c_null, t_star.probs, t_adv.probs, transitions);
                double l1 = llr_from_counts(c_adv, t_star.probs, t_adv.probs, transitions);
                if (!(l0 > spec.eta)) ++rejected_null;
                if (l1 > spec.eta) ++accepted_adv;
            } else {
                double s0 = hoeffding_statistic(c_null, theta_star, transitions, projector);
                double s1 = hoeffding_statistic(c_adv, theta_star, transitions, projector);
                if (!(s0 < spec.eta)) ++rejected_null;
                if (s1 < spec.eta) ++accepted_adv;
            }
        } catch (const std::exception& e) {
#pragma omp critical
            {
                failed = true;
                error = e.what();
            }
        }
    }
    if (failed) throw ValidationError("error_rates_monte_carlo: " + error);

    ErrorRates out;
    out.method = ErrorMethod::monte_carlo;
    out.n = n;
    out.replications = replications;
    out.alpha = static_cast<double>(rejected_null) / static_cast<double>(replications);
    out.beta = static_cast<double>(accepted_adv) / static_cast<double>(replications);
    auto halfwidth = [&](double p) {
        return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(replications));
    };
    out.alpha_halfwidth = halfwidth(out.alpha);
    out.beta_halfwidth = halfwidth(out.beta);
    return out;
}

namespace {

struct EnumContext {
    const Mdp* mdp;
    Matrix t_star, t_adv;
    Vec initial;
    std::size_t n;
    std::uint64_t total;  // S^n
};

EnumContext make_enum_context(const Mdp& mdp, const Policy& pi_star, const Policy& pi_adv,
                              std::size_t n) {
    if (n < 2) throw ValidationError("exact enumeration: need n >= 2");
    validate_policy(mdp, pi_star);
    validate_policy(mdp, pi_adv);
    long double total_ld = 1.0L;
    for (std::size_t i = 0; i < n; ++i) total_ld *= static_cast<long double>(mdp.num_states);
    if (total_ld > static_cast<long double>(kEnumerationGuard))
        throw GuardError("exact enumeration: |S|^n = " + std::to_string(total_ld) +
                         " exceeds the 2^24 guard");
    EnumContext ctx;
    ctx.mdp = &mdp;
    ctx.t_star = induced_transition_matrix(mdp, pi_star).probs;
    ctx.t_adv = induced_transition_matrix(mdp, pi_adv).probs;
    ctx.initial = mdp.initial;
    ctx.n = n;
    ctx.total = static_cast<std::uint64_t>(total_ld);
    return ctx;
}

// Decodes the code into digits (most significant digit = s_1) and fills the
// transition count matrix. Returns the first state.
inline std::size_t decode_counts(std::uint64_t code, std::size_t S, std::size_t n,
                                 std::vector<int>& scratch, Matrix& counts) {
    for (std::size_t i = n; i-- > 0;) {
        scratch[i] = static_cast<int>(code % S);
        code /= S;
    }
    std::fill(counts.data().begin(), counts.data().end(), 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) counts(scratch[i], scratch[i + 1]) += 1.0;
    return static_cast<std::size_t>(scratch[0]);
}

// Path probability from counts in fixed (i,j) order: mu(s1) * prod T(i,j)^c.
inline double path_probability(const Matrix& counts, const Matrix& t, double mu_s1) {
    double p = mu_s1;
    const std::size_t S = counts.rows();
    for (std::size_t i = 0; i < S && p > 0.0; ++i)
        for (std::size_t j = 0; j < S; ++j) {
            double c = counts(i, j);
            if (c == 0.0) continue;
            double tij = t(i, j);
            if (tij == 0.0) return 0.0;
            p *= std::pow(tij, c);
        }
    return p;
}

constexpr std::uint64_t kChunk = 1 << 14;

}  // namespace

namespace {

// Likelihood-ratio branch: the sequence space is split into fixed
// prefix-defined subtrees; each worker walks its subtrees depth-first,
// extending the path probabilities and the LLR incrementally.
void np_exact_rates(const EnumContext& ctx, double eta, std::vector<KahanSum>& alpha_chunks,
                    std::vector<KahanSum>& beta_chunks, std::size_t prefix_len) {
    const std::size_t S = ctx.t_star.rows();
    const std::size_t n = ctx.n;
    const double transitions = static_cast<double>(n - 1);
    Matrix log_ratio(S, S);  // zero-probability transitions resolve via dead flags
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j) {
            double ts = ctx.t_star(i, j), ta = ctx.t_adv(i, j);
            if (ts > 0.0 && ta > 0.0) log_ratio(i, j) = std::log2(ts / ta);
        }

    std::uint64_t num_prefixes = 1;
    for (std::size_t i = 0; i < prefix_len; ++i) num_prefixes *= S;

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t pfx = 0; pfx < static_cast<std::ptrdiff_t>(num_prefixes); ++pfx) {
        std::vector<int> digits(n);
        std::uint64_t c = static_cast<std::uint64_t>(pfx);
        for (std::size_t i = prefix_len; i-- > 0;) {
            digits[i] = static_cast<int>(c % S);
            c /= S;
        }
        Matrix counts(S, S);
        double p_star = ctx.initial[digits[0]];
        double p_adv = p_star;
        int dead_star = 0, dead_adv = 0;
        for (std::size_t t = 0; t + 1 < prefix_len; ++t) {
            int a = digits[t], b = digits[t + 1];
            p_star *= ctx.t_star(a, b);
            p_adv *= ctx.t_adv(a, b);
            dead_star += ctx.t_star(a, b) == 0.0;
            dead_adv += ctx.t_adv(a, b) == 0.0;
            counts(a, b) += 1.0;
        }
        KahanSum alpha, beta;

        // depth-first over the remaining levels; the leaf LLR is assembled
        // from the counts in fixed (i,j) order, so sequences with identical
        // counts get bit-identical statistics (ties resolve consistently)
        auto leaf_llr = [&]() {
            double l = 0.0;
            for (std::size_t i = 0; i < S; ++i)
                for (std::size_t j = 0; j < S; ++j) {
                    double cij = counts(i, j);
                    if (cij != 0.0) l += cij * log_ratio(i, j);
                }
            return l / transitions;
        };
        auto walk = [&](auto&& self, std::size_t pos, double ps, double pa, int ds,
                        int da) -> void {
            if (pos == n) {
                if (ps == 0.0 && pa == 0.0) return;
                double stat = ds ? -kInf : da ? kInf : leaf_llr();
                if (!(stat > eta))
                    alpha.add(ps);
                else
                    beta.add(pa);
                return;
            }
            int a = digits[pos - 1];
            for (int b = 0; b < static_cast<int>(S); ++b) {
                double ts = ctx.t_star(a, b), ta = ctx.t_adv(a, b);
                if (ts == 0.0 && ta == 0.0) continue;
                digits[pos] = b;
                counts(a, b) += 1.0;
                self(self, pos + 1, ps * ts, pa * ta, ds + (ts == 0.0), da + (ta == 0.0));
                counts(a, b) -= 1.0;
            }
        };
        walk(walk, prefix_len, p_star, p_adv, dead_star, dead_adv);
        alpha_chunks[pfx] = alpha;
        beta_chunks[pfx] = beta;
    }
}

}  // namespace

ErrorRates exact_error_rates(const Mdp& mdp, const Policy& pi_star, const Policy& pi_adv,
                             const DetectorSpec& spec, std::size_t n) {
    EnumContext ctx = make_enum_context(mdp, pi_star, pi_adv, n);
    if (spec.kind == DetectorKind::hoeffding && !(spec.eta > 0.0))
        throw ValidationError("exact_error_rates: hoeffding eta must be positive");
    if (spec.kind == DetectorKind::np && !std::isfinite(spec.eta))
        throw ValidationError("exact_error_rates: np eta must be finite");

    const std::size_t S = mdp.num_states;
    const double transitions = static_cast<double>(n - 1);

    ErrorRates out;
    out.method = ErrorMethod::exact_enumeration;
    out.n = n;

    if (spec.kind == DetectorKind::np) {
        // prefixes of ~2^10 subtrees balance parallel slack against overhead
        std::size_t prefix_len = 1;
        std::uint64_t prefixes = S;
        while (prefix_len + 1 < n && prefixes * S <= 2048) {
            prefixes *= S;
            ++prefix_len;
        }
        std::vector<KahanSum> alpha_chunks(prefixes), beta_chunks(prefixes);
        np_exact_rates(ctx, spec.eta, alpha_chunks, beta_chunks, prefix_len);
        KahanSum alpha, beta;
        for (std::uint64_t c = 0; c < prefixes; ++c) {
            alpha.merge(alpha_chunks[c]);
            beta.merge(beta_chunks[c]);
        }
        out.alpha = alpha.value();
        out.beta = beta.value();
        return out;
    }

    const std::uint64_t num_chunks = (ctx.total + kChunk - 1) / kChunk;
    std::vector<KahanSum> alpha_chunks(num_chunks), beta_chunks(num_chunks);

    TransitionMatrix ts{ctx.t_star};
    DoubletDistribution theta_star = doublet_distribution(stationary_distribution(ts), ts);
    ShiftInvariantProjector projector(S);

    bool failed = false;
    std::string error;

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t chunk = 0; chunk < static_cast<std::ptrdiff_t>(num_chunks); ++chunk) {
        try {
            std::vector<int> scratch(n);
            Matrix counts(S, S);
            KahanSum alpha, beta;
            // sequences sharing (counts, s1) share the projection; cache the
            // decision-resolved (alpha, beta) masses per class
            std::map<std::pair<Vec, std::size_t>, std::pair<double, double>> cache;
            const std::uint64_t begin = static_cast<std::uint64_t>(chunk) * kChunk;
            const std::uint64_t end = std::min(begin + kChunk, ctx.total);
            for (std::uint64_t code = begin; code < end; ++code) {
                std::size_t s1 = decode_counts(code, S, n, scratch, counts);
                auto key = std::make_pair(counts.data(), s1);
                auto it = cache.find(key);
                if (it == cache.end()) {
                    double mu = ctx.initial[s1];
                    double p_star = path_probability(counts, ctx.t_star, mu);
                    double p_adv = path_probability(counts, ctx.t_adv, mu);
                    double stat = hoeffding_statistic(counts, theta_star, transitions, projector);
                    bool reject = !(stat < spec.eta);
                    it = cache
                             .emplace(key, std::make_pair(reject ? p_star : 0.0,
                                                          reject ? 0.0 : p_adv))
                             .first;
                }
                alpha.add(it->second.first);
                beta.add(it->second.second);
            }
            alpha_chunks[chunk] = alpha;
            beta_chunks[chunk] = beta;
        } catch (const std::exception& e) {
#pragma omp critical
            {
                failed = true;
                error = e.what();
            }
        }
    }
    if (failed) throw ValidationError("exact_error_rates: " + error);

    KahanSum alpha, beta;
    for (std::uint64_t c = 0; c < num_chunks; ++c) {
        alpha.merge(alpha_chunks[c]);
        beta.merge(beta_chunks[c]);
    }
    out.alpha = alpha.value();
    out.beta = beta.value();
    return out;
}

LlrDistribution exact_llr_distribution(const Mdp& mdp, const Policy& pi_star,
                                       const Policy& pi_adv, std::size_t n) {
    EnumContext ctx = make_enum_context(mdp, pi_star, pi_adv, n);
    const std::size_t S = mdp.num_states;
    const double transitions = static_cast<double>(n - 1);
    const std::uint64_t num_chunks = (ctx.total + kChunk - 1) / kChunk;
    std::vector<LlrDistribution> partial(num_chunks);

    bool failed = false;
    std::string error;

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t chunk = 0; chunk < static_cast<std::ptrdiff_t>(num_chunks); ++chunk) {
        try {
            std::vector<int> scratch(n);
            Matrix counts(S, S);
            LlrDistribution local;
            const std::uint64_t begin = static_cast<std::uint64_t>(chunk) * kChunk;
            const std::uint64_t end = std::min(begin + kChunk, ctx.total);
            for (std::uint64_t code = begin; code < end; ++code) {
                std::size_t s1 = decode_counts(code, S, n, scratch, counts);
                double mu = ctx.initial[s1];
                if (mu == 0.0) continue;
                double p_star = path_probability(counts, ctx.t_star, mu);
                double p_adv = path_probability(counts, ctx.t_adv, mu);
                if (p_star == 0.0 && p_adv == 0.0) continue;
                double l = p_star == 0.0 ? -kInf
                           : p_adv == 0.0
                               ? kInf
                               : llr_from_counts(counts, ctx.t_star, ctx.t_adv, transitions);
                auto& cell = local[l];
                cell.first += p_star;
                cell.second += p_adv;
            }
            partial[chunk] = std::move(local);
        } catch (const std::exception& e) {
#pragma omp critical
            {
                failed = true;
                error = e.what();
            }
        }
    }
    if (failed) throw ValidationError("exact_llr_distribution: " + error);

    LlrDistribution out;
    for (auto& p : partial)
        for (auto& [l, mass] : p) {
            auto& cell = out[l];
            cell.first += mass.first;
            cell.second += mass.second;
        }
    return out;
}

NpCapResult np_beta_under_alpha_cap(const Mdp& mdp, const Policy& pi_star, const Policy& pi_adv,
                                    std::size_t n, double cap, bool randomized) {
    if (!(cap > 0.0) || !(cap < 1.0))
        throw ValidationError("np_beta_under_alpha_cap: cap must be in (0,1)");
    LlrDistribution dist = exact_llr_distribution(mdp, pi_star, pi_adv, n);

    NpCapResult res;
    res.eta = -kInf;
    double cum_star = 0.0, rejected_adv = 0.0;
    for (const auto& [l, mass] : dist) {
        if (cum_star + mass.first <= cap + 1e-15) {
            cum_star += mass.first;
            rejected_adv += mass.second;
            res.eta = l;
        } else {
            if (randomized && mass.first > 0.0) {
                double gamma = (cap - cum_star) / mass.first;
                rejected_adv += gamma * mass.second;
                cum_star = cap;
            }
            break;
        }
    }
    res.alpha = cum_star;
    res.beta = 1.0 - rejected_adv;
    return res;
}

}  // namespace covertmdp
