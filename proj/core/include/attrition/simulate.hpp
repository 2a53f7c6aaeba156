#pragma once

#include "attrition/payoffs.hpp"
#include "attrition/strategy.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace attrition {

enum class CensorPolicy { Exclude, Bound };

struct SimConfig {
    int n_paths = 10000;
    double dt = 1e-3;
    std::optional<double> horizon;     // default 50 / min r
    std::uint64_t seed = 1;
    double x0 = 0;
    bool antithetic = false;           // paths 2k and 2k+1 use mirrored normals
    // Check for threshold crossings between steps with the Brownian-bridge
    // probability as well as at the post-step state.
    bool brownian_bridge = false;
    CensorPolicy censor = CensorPolicy::Bound;
    int threads = 0;                   // 0: hardware concurrency

    void check() const;
    double horizon_for(const GameModel& model) const;
};

// Stored paths, row p holding X at t_k = k dt. Meant for small runs; the game
// player streams paths itself and produces identical states.
struct PathSet {
    double dt = 0;
    std::vector<std::vector<double>> paths;
    std::vector<char> left_window;     // path was clamped at a window edge
};

PathSet simulate_paths(const DiffusionSpec& spec, const SimConfig& cfg, double horizon);

enum class Winner { Firm1, Firm2, Tie, Censored };
const char* to_string(Winner w) noexcept;

struct GameOutcome {
    Winner winner = Winner::Censored;
    double exit_time = 0;
    double exit_state = 0;
    std::array<double, 2> payoff{};    // realized discounted payoffs
    int tie_coin = 0;                  // on a tie, the firm a fair coin names the winner
    bool left_window = false;
};

std::vector<GameOutcome> play_game(const GameModel& model, const StrategyProfile& profile, const SimConfig& cfg);
// Same game on stored paths (no Brownian-bridge draws across missing steps
// beyond the stored ones).
std::vector<GameOutcome> play_game(const PathSet& paths, const GameModel& model, const StrategyProfile& profile,
                                   const SimConfig& cfg);

struct ValueEstimate {
    double mean = 0;
    double se = 0;
    int n = 0;
};

struct OutcomeSummary {
    std::array<ValueEstimate, 2> value;
    int outcomes = 0;
    int wins1 = 0, wins2 = 0, ties = 0, censored = 0;
    int tie_coin1 = 0;
    int left_window = 0;
    double mean_exit_time = 0;
    std::vector<std::string> warnings;
};

// Means and standard errors. Antithetic pairs are averaged before the SE.
// Throws Error(Estimation) with fewer than two usable outcomes.
OutcomeSummary estimate_values(const std::vector<GameOutcome>& outcomes, const SimConfig& cfg);

struct IndifferenceDiagnostic {
    double x0 = 0;
    OutcomeSummary summary;
    std::array<double, 2> exit_payoff{};
    std::array<double, 2> z{};         // (estimate - l_i) / SE
};

IndifferenceDiagnostic indifference_diagnostic(const GameModel& model, const StrategyProfile& profile,
                                               const SimConfig& cfg);

}  // namespace attrition
