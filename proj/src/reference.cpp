#include "covertmdp/reference.hpp"

#include <cmath>
#include <limits>

#include "covertmdp/simulate.hpp"

namespace covertmdp::ref {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct DfsState {
    const Matrix* t_star;
    const Matrix* t_adv;
    const DoubletDistribution* theta_star;
    const ShiftInvariantProjector* projector;
    DetectorSpec spec;
    std::size_t n = 0;
    double alpha = 0.0;
    double beta = 0.0;
    Matrix counts;
};

double hoeffding_stat(const Matrix& counts, const DoubletDistribution& theta_star,
                      double transitions, const ShiftInvariantProjector& projector) {
    const std::size_t S = counts.rows();
    Matrix theta(S, S);
    for (std::size_t k = 0; k < theta.size(); ++k) theta.data()[k] = counts.data()[k] / transitions;
    DoubletDistribution emp{theta};
    if (!is_shift_invariant(emp, 1e-12)) {
        Vec x = emp.probs.data();
        projector.project(x);
        emp.probs.data() = std::move(x);
    }
    return dk_divergence(emp, theta_star, kShiftInvariantTol);
}

void dfs(DfsState& st, std::size_t depth, std::size_t state, double p_star, double p_adv,
         double llr_sum, bool star_dead, bool adv_dead) {
    if (p_star == 0.0 && p_adv == 0.0) return;
    if (depth == st.n) {
        bool reject;
        const double transitions = static_cast<double>(st.n - 1);
        if (st.spec.kind == DetectorKind::np) {
            double l = star_dead ? -kInf : adv_dead ? kInf : llr_sum / transitions;
            reject = !(l > st.spec.eta);
        } else {
            double stat = hoeffding_stat(st.counts, *st.theta_star, transitions, *st.projector);
            reject = !(stat < st.spec.eta);
        }
        if (reject)
            st.alpha += p_star;
        else
            st.beta += p_adv;
        return;
    }
    const std::size_t S = st.t_star->rows();
    for (std::size_t next = 0; next < S; ++next) {
        double ts = (*st.t_star)(state, next);
        double ta = (*st.t_adv)(state, next);
        if (ts == 0.0 && ta == 0.0) continue;
        st.counts(state, next) += 1.0;
        dfs(st, depth + 1, next, p_star * ts, p_adv * ta,
            ts > 0.0 && ta > 0.0 ? llr_sum + std::log2(ts / ta) : llr_sum,
            star_dead || ts == 0.0, adv_dead || ta == 0.0);
        st.counts(state, next) -= 1.0;
    }
}

}  // namespace

ErrorRates exact_error_rates(const Mdp& mdp, const Policy& pi_star, const Policy& pi_adv,
                             const DetectorSpec& spec, std::size_t n) {
    if (n < 2) throw ValidationError("ref::exact_error_rates: need n >= 2");
    long double total = 1.0L;
    for (std::size_t i = 0; i < n; ++i) total *= static_cast<long double>(mdp.num_states);
    if (total > static_cast<long double>(kEnumerationGuard))
        throw GuardError("ref::exact_error_rates: |S|^n exceeds the 2^24 guard");

    DfsState st;
    Matrix t_star = induced_transition_matrix(mdp, pi_star).probs;
    Matrix t_adv = induced_transition_matrix(mdp, pi_adv).probs;
    st.t_star = &t_star;
    st.t_adv = &t_adv;
    st.spec = spec;
    st.n = n;
    st.counts = Matrix(mdp.num_states, mdp.num_states);

    DoubletDistribution theta_star{Matrix(mdp.num_states, mdp.num_states)};
    ShiftInvariantProjector projector(mdp.num_states);
    if (spec.kind == DetectorKind::hoeffding) {
        TransitionMatrix ts{t_star};
        theta_star = doublet_distribution(stationary_distribution(ts), ts);
    }
    st.theta_star = &theta_star;
    st.projector = &projector;

    for (std::size_t s1 = 0; s1 < mdp.num_states; ++s1) {
        double mu = mdp.initial[s1];
        if (mu == 0.0) continue;
        dfs(st, 1, s1, mu, mu, 0.0, false, false);
    }

    ErrorRates out;
    out.method = ErrorMethod::exact_enumeration;
    out.n = n;
    out.alpha = st.alpha;
    out.beta = st.beta;
    return out;
}

ErrorRates error_rates_monte_carlo(const Mdp& mdp, const Policy& pi_star, const Policy& pi_adv,
                                   const DetectorSpec& spec, std::size_t n,
                                   std::size_t replications, std::uint64_t master_seed) {
    if (replications < 1) throw ValidationError("ref::error_rates_monte_carlo: replications >= 1");
    TransitionMatrix t_star = induced_transition_matrix(mdp, pi_star);
    TransitionMatrix t_adv = induced_transition_matrix(mdp, pi_adv);
    DoubletDistribution theta_star = doublet_distribution(stationary_distribution(t_star), t_star);
    ShiftInvariantProjector projector(mdp.num_states);
    const double transitions = static_cast<double>(n - 1);

    auto np_stat = [&](const Matrix& counts) {
        double sum = 0.0;
        bool star_dead = false, adv_dead = false;
        for (std::size_t i = 0; i < counts.rows(); ++i)
            for (std::size_t j = 0; j < counts.cols(); ++j) {
                double c = counts(i, j);
                if (c == 0.0) continue;
                double ts = t_star.probs(i, j), ta = t_adv.probs(i, j);
                if (ts == 0.0) star_dead = true;
                else if (ta == 0.0) adv_dead = true;
                else sum += c * std::log2(ts / ta);
            }
        return star_dead ? -kInf : adv_dead ? kInf : sum / transitions;
    };

    long long rejected_null = 0, accepted_adv = 0;
    for (std::size_t r = 0; r < replications; ++r) {
        Matrix c0 = simulate_doublet_counts(t_star, mdp.initial, n, derive_seed(master_seed, 2 * r));
        Matrix c1 = simulate_doublet_counts(t_adv, mdp.initial, n, derive_seed(master_seed, 2 * r + 1));
        if (spec.kind == DetectorKind::np) {
            if (!(np_stat(c0) > spec.eta)) ++rejected_null;
            if (np_stat(c1) > spec.eta) ++accepted_adv;
        } else {
            if (!(hoeffding_stat(c0, theta_star, transitions, projector) < spec.eta))
                ++rejected_null;
            if (hoeffding_stat(c1, theta_star, transitions, projector) < spec.eta) ++accepted_adv;
        }
    }

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

}  // namespace covertmdp::ref
