// covertctl: experiment driver for covert-actuation analysis on finite MDPs.
// Subcommands: eval, covert-lp, detect, exponents, adversary, sweep.
#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "covertmdp/harness.hpp"

using namespace covertmdp;

namespace {

std::string default_out(const std::string& name) {
    const char* dir = std::getenv("COVERTMDP_OUT_DIR");
    if (dir != nullptr && *dir != '\0') return std::string(dir) + "/" + name;
    return name;
}

void add_common(CLI::App* sub, ExperimentConfig& cfg) {
    sub->add_option("--mdp", cfg.mdp_path, "MDP JSON file")->required();
    sub->add_option("--pi-star,--policy", cfg.pi_star_path, "controller policy JSON file")
        ->required();
    sub->add_option("--seed", cfg.master_seed, "master seed (default 0)");
    sub->add_option("--out", cfg.output_path, "output CSV path");
    sub->add_option("--threads", cfg.threads, "worker threads (speed only, never results)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"covert adversarial actuation in finite MDPs"};
    app.require_subcommand(1);

    ExperimentConfig cfg;
    std::string detector = "np";
    std::string frontier_csv;

    auto* eval = app.add_subcommand("eval", "average rewards, regret and stationary laws");
    add_common(eval, cfg);
    eval->add_option("--pi-adv", cfg.pi_adv_path, "adversarial policy JSON file");

    auto* lp = app.add_subcommand("covert-lp", "per-state perfectly covert LP");
    add_common(lp, cfg);

    auto* detect = app.add_subcommand("detect", "error rates of a detector");
    add_common(detect, cfg);
    detect->add_option("--pi-adv", cfg.pi_adv_path, "adversarial policy JSON file")->required();
    detect->add_option("--detector", detector, "np | hoeffding");
    detect->add_option("--eta", cfg.eta, "detector threshold")->required();
    detect->add_option("--n", cfg.n_values, "trajectory length(s)")->required();
    detect->add_option("--reps", cfg.replications, "Monte-Carlo replications");
    detect->add_flag("--exact", cfg.exact, "exhaustive enumeration instead of Monte Carlo");

    auto* exps = app.add_subcommand("exponents", "theoretical error exponents");
    add_common(exps, cfg);
    exps->add_option("--pi-adv", cfg.pi_adv_path, "adversarial policy JSON file")->required();
    exps->add_option("--mode", cfg.exponents_mode, "np | stein | hoeffding");
    exps->add_option("--eta", cfg.eta, "threshold (np) or type-I exponent (hoeffding)");

    auto* adv = app.add_subcommand("adversary", "constrained regret maximization (problem of the"
                                                " universal-test setting)");
    add_common(adv, cfg);
    double eta_beta = 0.0;
    adv->add_option("--eta", cfg.eta, "controller's type-I exponent")->required();
    auto* eb = adv->add_option("--eta-beta", eta_beta, "acceptable type-II exponent");
    adv->add_option("--frontier", frontier_csv, "comma-separated ascending eta_beta values");

    auto* sweep = app.add_subcommand("sweep", "empirical vs theoretical exponent sweep over n");
    add_common(sweep, cfg);
    sweep->add_option("--pi-adv", cfg.pi_adv_path, "adversarial policy JSON file")->required();
    sweep->add_option("--detector", detector, "np | hoeffding");
    sweep->add_option("--eta", cfg.eta, "detector threshold");
    sweep->add_option("--n-values", cfg.n_values, "ascending trajectory lengths")->required();
    sweep->add_option("--reps", cfg.replications, "Monte-Carlo replications");
    sweep->add_flag("--exact", cfg.exact, "exhaustive enumeration instead of Monte Carlo");
    double alpha_cap = 0.0;
    auto* cap = sweep->add_option("--alpha-cap", alpha_cap,
                                  "per-n Neyman-Pearson threshold from this type-I cap (exact)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (eval->parsed()) cfg.mode = ExperimentMode::eval;
        if (lp->parsed()) cfg.mode = ExperimentMode::covert_lp;
        if (detect->parsed()) cfg.mode = ExperimentMode::detect;
        if (exps->parsed()) cfg.mode = ExperimentMode::exponents;
        if (adv->parsed()) {
            cfg.mode = ExperimentMode::adversary;
            if (!eb->empty()) cfg.eta_beta = eta_beta;
            if (!frontier_csv.empty()) {
                std::stringstream ss(frontier_csv);
                std::string tok;
                while (std::getline(ss, tok, ',')) cfg.frontier_values.push_back(std::stod(tok));
            }
        }
        if (sweep->parsed()) {
            cfg.mode = ExperimentMode::exponent_sweep;
            if (!cap->empty()) cfg.alpha_cap = alpha_cap;
        }
        if (detector == "np") cfg.detector = DetectorKind::np;
        else if (detector == "hoeffding") cfg.detector = DetectorKind::hoeffding;
        else throw ValidationError("unknown detector '" + detector + "'");

        if (cfg.output_path.empty()) {
            const char* name = eval->parsed()       ? "eval.csv"
                               : lp->parsed()       ? "covert-lp.csv"
                               : detect->parsed()   ? "detect.csv"
                               : exps->parsed()     ? "exponents.csv"
                               : adv->parsed()      ? "adversary.csv"
                                                    : "sweep.csv";
            cfg.output_path = default_out(name);
        }

        run(cfg);
        std::cout << "wrote " << cfg.output_path << "\n";
        return 0;
    } catch (const GuardError& e) {
        std::cerr << "guard violation: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
