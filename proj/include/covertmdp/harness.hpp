// Experiment driver behind the CLI: loads inputs, dispatches to the library,
// writes one CSV per run plus a JSON sidecar with the fully resolved config.
// Identical configs produce byte-identical CSVs at any thread count.
#pragma once

#include <optional>

#include "covertmdp/adversary.hpp"
#include "covertmdp/detection.hpp"

namespace covertmdp {

inline constexpr const char* kToolVersion = "covertmdp 0.1.0";

enum class ExperimentMode { eval, covert_lp, detect, exponents, adversary, exponent_sweep };

struct ExperimentConfig {
    ExperimentMode mode = ExperimentMode::eval;
    std::string mdp_path;
    std::string pi_star_path;
    std::string pi_adv_path;  // optional for eval/covert-lp/adversary
    DetectorKind detector = DetectorKind::np;
    double eta = 0.0;
    std::optional<double> eta_beta;
    std::vector<std::size_t> n_values;
    std::size_t replications = 1000;
    std::uint64_t master_seed = 0;
    std::string output_path;
    bool exact = false;
    std::vector<double> frontier_values;     // adversary mode sweep of eta_beta
    std::optional<double> alpha_cap;         // exponent-sweep: NP threshold from a type-I cap
    std::string exponents_mode = "np";       // exponents mode: np | stein | hoeffding
    int threads = 0;                         // 0 = runtime default; affects speed only
};

struct SweepRow {
    std::size_t n = 0;
    double alpha = 0.0;
    double beta = 0.0;
    double log2_alpha_over_n = 0.0;
    double log2_beta_over_n = 0.0;
    std::string method;
};

struct SweepReport {
    std::vector<SweepRow> rows;  // sorted by n
    ExponentPair theory;         // theoretical exponents for the configured detector
    double fit_slope_alpha = 0.0;
    double fit_slope_beta = 0.0;
    bool perfectly_covert = false;
    std::string detector;
    double eta = 0.0;
    std::optional<double> alpha_cap;
};

struct VerdictRow {
    std::string check;
    double expected = 0.0;
    double observed = 0.0;
    double gap = 0.0;
    double tolerance = 0.0;
    std::string verdict;  // pass | fail | unmeasurable at this n
};

// Tolerances of the sweep verdicts: relative window on measurable exponents
// and the flatness band for no-decay checks (bits per step).
inline constexpr double kSlopeRelTol = 0.25;
inline constexpr double kFlatSlopeTol = 0.02;

// Least-squares slope of log2(rate) against n over the largest half of the
// rows; NaN when any rate in the window is 0 or 1 (exponent unmeasurable).
double fit_error_slope(const std::vector<SweepRow>& rows, bool use_alpha);

std::vector<VerdictRow> compare_sweep(const SweepReport& report);

void validate_config(const ExperimentConfig& config);

// Runs the experiment and writes output_path (CSV), a ".meta.json" sidecar,
// and for sweeps a ".verdicts.csv". Throws ValidationError / GuardError.
void run(const ExperimentConfig& config);

}  // namespace covertmdp
