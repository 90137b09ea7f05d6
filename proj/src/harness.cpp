#include "covertmdp/harness.hpp"

#include <omp.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "covertmdp/covert_lp.hpp"
#include "covertmdp/io.hpp"
#include "covertmdp/rng.hpp"

namespace covertmdp {

using nlohmann::json;

namespace {

const char* mode_name(ExperimentMode m) {
    switch (m) {
        case ExperimentMode::eval: return "eval";
        case ExperimentMode::covert_lp: return "covert-lp";
        case ExperimentMode::detect: return "detect";
        case ExperimentMode::exponents: return "exponents";
        case ExperimentMode::adversary: return "adversary";
        case ExperimentMode::exponent_sweep: return "exponent-sweep";
    }
    return "?";
}

struct Csv {
    std::ostringstream out;
    bool first_in_row = true;

    void cell(const std::string& v) {
        if (!first_in_row) out << ",";
        out << v;
        first_in_row = false;
    }
    void cell(double v) { cell(format_double(v)); }
    void cell(std::size_t v) { cell(std::to_string(v)); }
    void endrow() {
        out << "\n";
        first_in_row = true;
    }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + path);
    f << content;
}

json config_json(const ExperimentConfig& c) {
    json j;
    j["tool_version"] = kToolVersion;
    j["mode"] = mode_name(c.mode);
    j["mdp"] = c.mdp_path;
    j["pi_star"] = c.pi_star_path;
    if (!c.pi_adv_path.empty()) j["pi_adv"] = c.pi_adv_path;
    j["detector"] = c.detector == DetectorKind::np ? "np" : "hoeffding";
    j["eta"] = c.eta;
    if (c.eta_beta) j["eta_beta"] = *c.eta_beta;
    j["n_values"] = c.n_values;
    j["replications"] = c.replications;
    j["master_seed"] = c.master_seed;
    j["output"] = c.output_path;
    j["exact"] = c.exact;
    if (!c.frontier_values.empty()) j["frontier"] = c.frontier_values;
    if (c.alpha_cap) j["alpha_cap"] = *c.alpha_cap;
    j["exponents_mode"] = c.exponents_mode;
    j["threads"] = c.threads;
    j["seed_rule"] = "per-replication seed = splitmix(master, 2*rep + hypothesis);"
                     " per-n sweep seed = splitmix(master, 1000 + n)";
    return j;
}

void write_sidecar(const ExperimentConfig& c, json extra) {
    json j = config_json(c);
    j["results"] = std::move(extra);
    write_file(c.output_path + ".meta.json", j.dump(2) + "\n");
}

std::uint64_t sweep_seed(std::uint64_t master, std::size_t n) {
    return derive_seed(master, 1000 + n);
}

// ---- per-mode runners -------------------------------------------------

void run_eval(const ExperimentConfig& c, const Mdp& mdp, const Policy& pi_star,
              const std::optional<Policy>& pi_adv) {
    Csv csv;
    StateDistribution tau_star =
        stationary_distribution(induced_transition_matrix(mdp, pi_star));
    csv.cell("j_pi_star");
    if (pi_adv) {
        csv.cell("j_pi_adv");
        csv.cell("regret");
    }
    for (std::size_t s = 0; s < mdp.num_states; ++s) csv.cell("tau_star_" + std::to_string(s));
    if (pi_adv)
        for (std::size_t s = 0; s < mdp.num_states; ++s) csv.cell("tau_adv_" + std::to_string(s));
    csv.endrow();

    double j_star = average_reward(mdp, pi_star);
    csv.cell(j_star);
    json extra;
    extra["j_pi_star"] = j_star;
    if (pi_adv) {
        double j_adv = average_reward(mdp, *pi_adv);
        csv.cell(j_adv);
        csv.cell(j_star - j_adv);
        extra["j_pi_adv"] = j_adv;
        extra["regret"] = j_star - j_adv;
    }
    for (double t : tau_star.probs) csv.cell(t);
    if (pi_adv) {
        StateDistribution tau_adv =
            stationary_distribution(induced_transition_matrix(mdp, *pi_adv));
        for (double t : tau_adv.probs) csv.cell(t);
    }
    csv.endrow();
    write_file(c.output_path, csv.out.str());
    write_sidecar(c, extra);
}

void run_covert_lp(const ExperimentConfig& c, const Mdp& mdp, const Policy& pi_star) {
    Policy covert = optimal_covert_policy(mdp, pi_star);
    double total_regret = regret(mdp, pi_star, covert);

    Csv csv;
    csv.cell("state");
    csv.cell("null_dim");
    csv.cell("lp_objective");
    for (std::size_t a = 0; a < mdp.num_actions; ++a) csv.cell("delta_pi_" + std::to_string(a));
    csv.cell("total_regret");
    csv.endrow();
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
        CovertLpResult lp = solve_covert_lp(mdp, pi_star, s);
        csv.cell(s);
        csv.cell(lp.feasible_dim);
        csv.cell(lp.objective);
        for (double d : lp.delta_pi) csv.cell(d);
        csv.cell(total_regret);
        csv.endrow();
    }
    write_file(c.output_path, csv.out.str());
    json extra;
    extra["total_regret"] = total_regret;
    write_sidecar(c, extra);
}

void run_detect(const ExperimentConfig& c, const Mdp& mdp, const Policy& pi_star,
                const Policy& pi_adv) {
    DetectorSpec spec{c.detector, c.eta};
    Csv csv;
    csv.cell("detector");
    csv.cell("eta");
    csv.cell("n");
    csv.cell("method");
    csv.cell("replications");
    csv.cell("alpha");
    csv.cell("beta");
    csv.cell("alpha_halfwidth");
    csv.cell("beta_halfwidth");
    csv.endrow();
    json derived = json::object();
    for (std::size_t n : c.n_values) {
        ErrorRates rates;
        std::uint64_t seed = c.n_values.size() == 1 ? c.master_seed : sweep_seed(c.master_seed, n);
        if (c.exact)
            rates = exact_error_rates(mdp, pi_star, pi_adv, spec, n);
        else
            rates = error_rates_monte_carlo(mdp, pi_star, pi_adv, spec, n, c.replications, seed);
        csv.cell(c.detector == DetectorKind::np ? "np" : "hoeffding");
        csv.cell(c.eta);
        csv.cell(n);
        csv.cell(rates.method == ErrorMethod::exact_enumeration ? "exact_enumeration"
                                                                : "monte_carlo");
        csv.cell(rates.replications);
        csv.cell(rates.alpha);
        csv.cell(rates.beta);
        csv.cell(rates.alpha_halfwidth);
        csv.cell(rates.beta_halfwidth);
        csv.endrow();
        if (!c.exact) derived["n=" + std::to_string(n)] = seed;
    }
    write_file(c.output_path, csv.out.str());
    json extra;
    extra["derived_seeds"] = derived;
    write_sidecar(c, extra);
}

void run_exponents(const ExperimentConfig& c, const Mdp& mdp, const Policy& pi_star,
                   const Policy& pi_adv) {
    DoubletDistribution theta_star = policy_doublet(mdp, pi_star);
    DoubletDistribution theta_adv = policy_doublet(mdp, pi_adv);
    const std::size_t S = mdp.num_states;

    Csv csv;
    json extra;
    auto minimizer_cells = [&](const char* prefix, const DoubletDistribution& m, bool header) {
        for (std::size_t i = 0; i < S; ++i)
            for (std::size_t j = 0; j < S; ++j) {
                if (header)
                    csv.cell(std::string(prefix) + "_" + std::to_string(i) + "_" +
                             std::to_string(j));
                else
                    csv.cell(m.probs(i, j));
            }
    };

    if (c.exponents_mode == "np") {
        Theorem2Result r = theorem2_details(theta_star, theta_adv, c.eta);
        csv.cell("mode");
        csv.cell("eta");
        csv.cell("e_alpha");
        csv.cell("e_beta");
        minimizer_cells("alpha_minimizer", theta_star, true);
        minimizer_cells("beta_minimizer", theta_star, true);
        csv.endrow();
        csv.cell("np");
        csv.cell(c.eta);
        csv.cell(r.alpha_minimization.value);
        csv.cell(r.beta_minimization.value);
        minimizer_cells("", r.alpha_minimization.minimizer, false);
        minimizer_cells("", r.beta_minimization.minimizer, false);
        csv.endrow();
        extra["e_alpha"] = r.alpha_minimization.value;
        extra["e_beta"] = r.beta_minimization.value;
    } else if (c.exponents_mode == "stein") {
        double d = chernoff_stein_exponent(theta_star, theta_adv);
        csv.cell("mode");
        csv.cell("eta");
        csv.cell("e_alpha");
        csv.cell("e_beta");
        csv.endrow();
        csv.cell("stein");
        csv.cell("");
        csv.cell("");
        csv.cell(d);
        csv.endrow();
        extra["e_beta"] = d;
    } else if (c.exponents_mode == "hoeffding") {
        Theorem4Result r = theorem4_details(theta_star, theta_adv, c.eta);
        csv.cell("mode");
        csv.cell("eta");
        csv.cell("e_alpha");
        csv.cell("e_beta");
        minimizer_cells("beta_minimizer", theta_star, true);
        csv.endrow();
        csv.cell("hoeffding");
        csv.cell(c.eta);
        csv.cell(r.exponents.e_alpha);
        csv.cell(r.exponents.e_beta);
        minimizer_cells("", r.beta_minimization.minimizer, false);
        csv.endrow();
        extra["e_alpha"] = r.exponents.e_alpha;
        extra["e_beta"] = r.exponents.e_beta;
    } else {
        throw ValidationError("exponents: unknown mode '" + c.exponents_mode + "'");
    }
    write_file(c.output_path, csv.out.str());
    write_sidecar(c, extra);
}

void run_adversary(const ExperimentConfig& c, const Mdp& mdp, const Policy& pi_star) {
    AdversaryProblem problem{mdp, pi_star, c.eta, c.eta_beta.value_or(0.0)};
    std::vector<double> etas = c.frontier_values;
    std::vector<AdversarySolution> sols;
    if (etas.empty()) {
        sols.push_back(solve(problem));
        etas.push_back(problem.eta_beta);
    } else {
        sols = frontier(problem, etas);
    }

    Csv csv;
    csv.cell("eta_beta");
    csv.cell("regret");
    csv.cell("constraint_value");
    csv.cell("feasible");
    for (std::size_t s = 0; s < mdp.num_states; ++s)
        for (std::size_t a = 0; a < mdp.num_actions; ++a)
            csv.cell("pi_" + std::to_string(s) + "_" + std::to_string(a));
    csv.endrow();
    for (std::size_t i = 0; i < sols.size(); ++i) {
        csv.cell(etas[i]);
        csv.cell(sols[i].regret);
        csv.cell(sols[i].constraint_value);
        csv.cell(std::string(sols[i].feasible ? "1" : "0"));
        for (double p : sols[i].policy.probs.data()) csv.cell(p);
        csv.endrow();
    }
    write_file(c.output_path, csv.out.str());
    json extra;
    extra["points"] = sols.size();
    write_sidecar(c, extra);
}

SweepReport build_sweep_report(const ExperimentConfig& c, const Mdp& mdp, const Policy& pi_star,
                               const Policy& pi_adv, json& derived) {
    SweepReport rep;
    rep.detector = c.detector == DetectorKind::np ? "np" : "hoeffding";
    rep.eta = c.eta;
    rep.alpha_cap = c.alpha_cap;
    rep.perfectly_covert = is_perfectly_covert(mdp, pi_star, pi_adv, 1e-9);

    DetectorSpec spec{c.detector, c.eta};
    for (std::size_t n : c.n_values) {
        ErrorRates rates;
        std::string method;
        if (c.alpha_cap) {
            NpCapResult cap = np_beta_under_alpha_cap(mdp, pi_star, pi_adv, n, *c.alpha_cap);
            rates.alpha = cap.alpha;
            rates.beta = cap.beta;
            rates.n = n;
            method = "exact_np_alpha_cap";
        } else if (c.exact) {
            rates = exact_error_rates(mdp, pi_star, pi_adv, spec, n);
            method = "exact_enumeration";
        } else {
            std::uint64_t seed = sweep_seed(c.master_seed, n);
            derived["n=" + std::to_string(n)] = seed;
            rates = error_rates_monte_carlo(mdp, pi_star, pi_adv, spec, n, c.replications, seed);
            method = "monte_carlo";
        }
        SweepRow row;
        row.n = n;
        row.alpha = rates.alpha;
        row.beta = rates.beta;
        row.log2_alpha_over_n = std::log2(rates.alpha) / static_cast<double>(n);
        row.log2_beta_over_n = std::log2(rates.beta) / static_cast<double>(n);
        row.method = method;
        rep.rows.push_back(row);
    }

    DoubletDistribution theta_star = policy_doublet(mdp, pi_star);
    DoubletDistribution theta_adv = policy_doublet(mdp, pi_adv);
    if (c.alpha_cap) {
        // capped-alpha regime: the type-I error is pinned, not decaying
        rep.theory = {0.0, chernoff_stein_exponent(theta_star, theta_adv)};
    } else if (c.detector == DetectorKind::np) {
        rep.theory = theorem2_exponents(theta_star, theta_adv, c.eta);
    } else {
        rep.theory = theorem4_exponents(theta_star, theta_adv, c.eta);
    }
    rep.fit_slope_alpha = fit_error_slope(rep.rows, true);
    rep.fit_slope_beta = fit_error_slope(rep.rows, false);
    return rep;
}

void run_exponent_sweep(const ExperimentConfig& c, const Mdp& mdp, const Policy& pi_star,
                        const Policy& pi_adv) {
    json derived = json::object();
    SweepReport rep = build_sweep_report(c, mdp, pi_star, pi_adv, derived);

    Csv csv;
    csv.cell("n");
    csv.cell("alpha");
    csv.cell("beta");
    csv.cell("log2_alpha_over_n");
    csv.cell("log2_beta_over_n");
    csv.cell("method");
    csv.endrow();
    for (const auto& r : rep.rows) {
        csv.cell(r.n);
        csv.cell(r.alpha);
        csv.cell(r.beta);
        csv.cell(r.log2_alpha_over_n);
        csv.cell(r.log2_beta_over_n);
        csv.cell(r.method);
        csv.endrow();
    }
    write_file(c.output_path, csv.out.str());

    std::vector<VerdictRow> verdicts = compare_sweep(rep);
    Csv vcsv;
    vcsv.cell("check");
    vcsv.cell("expected");
    vcsv.cell("observed");
    vcsv.cell("gap");
    vcsv.cell("tolerance");
    vcsv.cell("verdict");
    vcsv.endrow();
    for (const auto& v : verdicts) {
        vcsv.cell(v.check);
        vcsv.cell(v.expected);
        vcsv.cell(v.observed);
        vcsv.cell(v.gap);
        vcsv.cell(v.tolerance);
        vcsv.cell(v.verdict);
        vcsv.endrow();
    }
    write_file(c.output_path + ".verdicts.csv", vcsv.out.str());

    json extra;
    extra["theory_e_alpha"] = rep.theory.e_alpha;
    extra["theory_e_beta"] = rep.theory.e_beta;
    extra["fit_slope_alpha"] = rep.fit_slope_alpha;
    extra["fit_slope_beta"] = rep.fit_slope_beta;
    extra["perfectly_covert"] = rep.perfectly_covert;
    extra["derived_seeds"] = derived;
    write_sidecar(c, extra);
}

}  // namespace

double fit_error_slope(const std::vector<SweepRow>& rows, bool use_alpha) {
    const std::size_t k = rows.size();
    if (k < 2) return std::nan("");
    const std::size_t begin = k / 2;  // largest half of the n values
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t i = begin; i < k; ++i) {
        double rate = use_alpha ? rows[i].alpha : rows[i].beta;
        if (!(rate > 0.0) || !(rate < 1.0)) return std::nan("");
        double x = static_cast<double>(rows[i].n);
        double y = std::log2(rate);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    double denom = static_cast<double>(m) * sxx - sx * sx;
    if (denom == 0.0) return std::nan("");
    return (static_cast<double>(m) * sxy - sx * sy) / denom;
}

std::vector<VerdictRow> compare_sweep(const SweepReport& report) {
    std::vector<VerdictRow> out;
    auto one = [&](const std::string& which, double theory_exponent, double slope) {
        VerdictRow v;
        v.observed = slope;
        if (theory_exponent <= 1e-12) {
            v.check = "no_decay_" + which;
            v.expected = 0.0;
            v.tolerance = kFlatSlopeTol;
            v.gap = std::fabs(slope);
            v.verdict = std::isnan(slope) ? "unmeasurable at this n"
                        : v.gap <= v.tolerance ? "pass"
                                               : "fail";
        } else {
            v.check = "slope_" + which + "_vs_theory";
            v.expected = -theory_exponent;
            v.tolerance = kSlopeRelTol * theory_exponent;
            v.gap = std::fabs(slope - v.expected);
            v.verdict = std::isnan(slope) ? "unmeasurable at this n"
                        : v.gap <= v.tolerance ? "pass"
                                               : "fail";
        }
        out.push_back(v);
    };
    one("alpha", report.theory.e_alpha, report.fit_slope_alpha);
    one("beta", report.theory.e_beta, report.fit_slope_beta);
    if (report.perfectly_covert) {
        VerdictRow v;
        v.check = "perfectly_covert_flat_rates";
        v.expected = 0.0;
        v.observed = std::max(std::fabs(report.fit_slope_alpha), std::fabs(report.fit_slope_beta));
        v.gap = v.observed;
        v.tolerance = kFlatSlopeTol;
        v.verdict = std::isnan(v.observed) ? "unmeasurable at this n"
                    : v.gap <= v.tolerance ? "pass"
                                           : "fail";
        out.push_back(v);
    }
    return out;
}

void validate_config(const ExperimentConfig& c) {
    if (c.mdp_path.empty()) throw ValidationError("config: --mdp is required");
    if (c.output_path.empty()) throw ValidationError("config: output path is required");
    const bool needs_adv = c.mode == ExperimentMode::detect ||
                           c.mode == ExperimentMode::exponents ||
                           c.mode == ExperimentMode::exponent_sweep;
    if (c.pi_star_path.empty()) throw ValidationError("config: --pi-star is required");
    if (needs_adv && c.pi_adv_path.empty())
        throw ValidationError("config: --pi-adv is required for this mode");
    if (c.mode == ExperimentMode::detect || c.mode == ExperimentMode::exponent_sweep) {
        if (c.n_values.empty()) throw ValidationError("config: at least one n value is required");
        for (std::size_t i = 0; i < c.n_values.size(); ++i) {
            if (c.n_values[i] < 2) throw ValidationError("config: n values must be >= 2");
            if (i > 0 && c.n_values[i] <= c.n_values[i - 1])
                throw ValidationError("config: n values must be ascending");
        }
        if (!c.exact && !c.alpha_cap && c.replications < 1)
            throw ValidationError("config: replications must be >= 1");
    }
    if (c.mode == ExperimentMode::adversary) {
        if (!(c.eta > 0.0)) throw ValidationError("config: adversary mode needs --eta > 0");
        if (!c.eta_beta && c.frontier_values.empty())
            throw ValidationError("config: adversary mode needs --eta-beta or --frontier");
    }
    if (c.alpha_cap && (!(*c.alpha_cap > 0.0) || !(*c.alpha_cap < 1.0)))
        throw ValidationError("config: --alpha-cap must be in (0,1)");
}

void run(const ExperimentConfig& config) {
    validate_config(config);
    if (config.threads > 0) omp_set_num_threads(config.threads);

    Mdp mdp = load_mdp(config.mdp_path);
    Policy pi_star = load_policy(config.pi_star_path, mdp);
    std::optional<Policy> pi_adv;
    if (!config.pi_adv_path.empty()) pi_adv = load_policy(config.pi_adv_path, mdp);

    switch (config.mode) {
        case ExperimentMode::eval:
            run_eval(config, mdp, pi_star, pi_adv);
            break;
        case ExperimentMode::covert_lp:
            run_covert_lp(config, mdp, pi_star);
            break;
        case ExperimentMode::detect:
            run_detect(config, mdp, pi_star, *pi_adv);
            break;
        case ExperimentMode::exponents:
            run_exponents(config, mdp, pi_star, *pi_adv);
            break;
        case ExperimentMode::adversary:
            run_adversary(config, mdp, pi_star);
            break;
        case ExperimentMode::exponent_sweep:
            run_exponent_sweep(config, mdp, pi_star, *pi_adv);
            break;
    }
}

}  // namespace covertmdp
