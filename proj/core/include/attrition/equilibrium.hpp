#pragma once

#include "attrition/payoffs.hpp"
#include "attrition/stopping.hpp"
#include "attrition/strategy.hpp"

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace attrition {

struct EquilibriumOptions {
    int oracle_states = 4001;
    bool certify = false;             // run the DP oracle on the pure profiles
    double homogeneity_tol = 1e-9;    // |l1 - l2| <= tol * max(1, |l2|) counts as equal
    int certificate_grid = 400;       // states sampled by the analytic inequality checks
    int kappa_grid = 2000;            // grid for the infimum of w and the root scan
    double deviation_tol = 1e-3;      // oracle gain allowed, times max(1, |l_i|)
    std::optional<double> q1;         // deterministic mode: atom probability to verify
    double q_step = 1e-3;
};

// Roles by threshold: `low` has the smaller single-player threshold. In the
// standard model that is firm 1.
struct ThresholdPair {
    FirmId low = 1;
    FirmId high = 2;
    std::array<ThresholdSolution, 2> by_firm;

    const ThresholdSolution& of(FirmId i) const { return by_firm[static_cast<std::size_t>(i - 1)]; }
    double theta_low() const { return of(low).theta; }
    double theta_high() const { return of(high).theta; }
    double gap() const { return theta_high() - theta_low(); }
};

ThresholdPair solve_thresholds(const GameModel& model);

struct OracleCertification {
    int states = 0;
    double spacing = 0;               // in the grid coordinate
    std::array<double, 2> deviation_gain{};
    std::array<double, 2> tolerance{};
    std::array<double, 2> argmax_x{};
    double bellman_residual = 0;
    bool passed = false;
};

struct PureEquilibrium {
    StrategyProfile profile;
    FirmId exiting_firm = 2;
    double theta = 0;                 // exit threshold of the exiting firm
    // "weak-exits", "kappa" or "condition-direct"
    std::string method;
    // min over the checked states of (value of waiting for the rival) - (own exit payoff)
    double analytic_margin = 0;
    double margin_at = 0;
    int checked_states = 0;
    std::optional<OracleCertification> oracle;
};

// Value from x > level of staying until the state first reaches `level`,
// where the payoff is `payoff_at_level`: R(x) + (payoff - R(level)) phi(x) / phi(level).
double waiting_value(const StoppingProblem& problem, double x, double level, double payoff_at_level);

// The high-threshold firm leaves at its threshold, the other never does.
// Throws Error(Inconsistency) if the certificate fails.
PureEquilibrium pure_mpe_weak_exits(const ValidatedModel& model, const EquilibriumOptions& options = {});

struct KappaResult {
    double kappa = 0;                 // +inf when the defining equation has no root in the window
    double root = 0;                  // theta_high - kappa, when finite
    double w_floor = 0;               // grid infimum of the high firm's w
    double w_floor_at = 0;
    int grid = 0;
    double target = 0;                // beta_high(theta_high)
};

KappaResult kappa_theta(const ValidatedModel& model, const EquilibriumOptions& options = {});

// The low-threshold firm leaves at its threshold, the other never does.
// Empty when neither the kappa test nor the direct check holds.
std::optional<PureEquilibrium> pure_mpe_strong_exits(const ValidatedModel& model,
                                                     const EquilibriumOptions& options = {});

struct MixedEquilibrium {
    StrategyProfile profile;          // hazards only, support up to theta
    double theta = 0;
    std::string note;
};

struct NonexistenceCertificate {
    FirmId low = 1;
    FirmId high = 2;
    double theta_low = 0;
    double theta_high = 0;
    double gap = 0;
    double break_even_low = 0;
    // States in (theta_low, theta_high) where the low firm's solo value
    // exceeds its exit payoff. Keeping it indifferent there would need the
    // rival to leave with negative probability.
    Window witness;
    double min_surplus = 0;           // min of V_low - l_low over the witness grid
    double max_required_probability = 0;  // (l - V) / (w - V), negative on the witness
    // (x_c_low, theta_high), where the indifference rate for the low firm is negative
    std::optional<Window> negative_rate_interval;
    double most_negative_rate = 0;
    double pasting_defect = 0;        // beta_low'(theta_high) < 0
    std::string reason;
};

using MixedAnalysis = std::variant<MixedEquilibrium, NonexistenceCertificate>;

MixedAnalysis mixed_mpe_analysis(const ValidatedModel& model, const EquilibriumOptions& options = {});

struct DeterministicCheck {
    double q1 = 0;
    bool feasible = false;
    bool no_atom = false;             // q1 == 0: nothing fires at theta_low
    double waiting_margin = 0;        // min over (theta_low, theta_high] of waiting value - l_high
    double waiting_margin_at = 0;
    double low_waiting_margin = 0;    // min over (theta_low, hi] of the low firm's waiting value - l_low
    double indifference_residual = 0; // max |V - l| below theta_low, both firms
    double min_rate = 0;              // smallest hazard value on the support
};

struct DeterministicReport {
    FirmId low = 1;
    FirmId high = 2;
    double theta_low = 0;
    double theta_high = 0;
    StrategyProfile profile;
    DeterministicCheck check;
    // scanned over (0, 1) with step q_step
    std::optional<std::array<double, 2>> feasible_interval;
    int scanned = 0;
    int feasible_count = 0;
    bool contiguous = true;
    double q_lower_bound = 0;         // smallest q1 meeting the waiting condition (may exceed 1)
};

// Checks the atom-plus-hazards profile for a given q1 and scans q1.
// Throws Error(Mode) unless sigma is identically zero.
DeterministicReport deterministic_mixed_mpe(const ValidatedModel& model, double q1,
                                            const EquilibriumOptions& options = {});

struct EquilibriumReport {
    ThresholdPair thresholds;
    std::optional<PureEquilibrium> pure_weak;
    std::optional<PureEquilibrium> pure_strong;
    std::optional<KappaResult> kappa;
    std::optional<MixedEquilibrium> mixed;
    std::optional<NonexistenceCertificate> nonexistence;
    std::optional<DeterministicReport> deterministic;
    std::optional<double> x0;
    std::vector<std::string> notes;

    // "mixed+pure", "pure-only", or for sigma = 0 "deterministic-mixed" / "deterministic-none"
    std::string classification() const;
};

EquilibriumReport analyze_equilibria(const ValidatedModel& model, const EquilibriumOptions& options = {},
                                     std::optional<double> x0 = {});

}  // namespace attrition
