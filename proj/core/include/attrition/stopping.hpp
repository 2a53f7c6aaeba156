#pragma once

#include "attrition/diffusion.hpp"
#include "attrition/payoffs.hpp"

#include <memory>
#include <string>

namespace attrition {

class StoppingProblem;

struct ThresholdSolution {
    FirmId firm = 1;
    double theta = 0;              // optimal exit threshold
    double break_even = 0;         // x_c, the right end of the bracket
    double beta_at_theta = 0;
    double beta_prime_at_theta = 0;
    double bracket_scale = 0;      // |beta'| at the bracket midpoint
    double value_matching_residual = 0;   // V(theta) - l(theta)
    double smooth_pasting_residual = 0;   // V'(theta+) - l'(theta)
    double tail_bound = 0;         // size of the beyond-window correction in beta'(theta)
    int iterations = 0;
    std::shared_ptr<const StoppingProblem> problem;

    // single-firm optimal value, l below theta and continuation above
    double value(double x) const;
    double value_slope(double x) const;
};

// One firm's exit problem against a rival that never leaves:
// maximise E[int_0^tau e^{-r t} pi(X_t) dt + e^{-r tau} l(X_tau)].
class StoppingProblem {
public:
    StoppingProblem(const GameModel& model, FirmId firm);

    const GameModel& model() const { return model_; }
    FirmId firm() const { return firm_; }
    const FundamentalPair& fundamentals() const;
    double break_even() const { return break_even_; }

    // R(x) = E[int_0^inf e^{-r t} pi(X_t) dt], and its slope
    double expected_profit(double x) const;
    double expected_profit_slope(double x) const;
    // beta(x) = (l(x) - R(x)) / phi(x); beta'(x) from the Green-kernel integral
    double beta(double x) const;
    double beta_prime(double x) const;
    // value from x of exiting the first time X reaches `threshold` (x >= threshold)
    double threshold_value(double x, double threshold) const;
    double threshold_value_slope(double x, double threshold) const;

    ThresholdSolution solve() const;

    // magnitude of the beyond-window correction inside beta'(x)
    double beta_prime_tail(double x) const;

private:
    struct Kernel;
    GameModel model_;
    FirmId firm_;
    double break_even_ = 0;  // NaN when pi - r l has no root in the window
    std::string break_even_error_;
    std::shared_ptr<const Kernel> kernel_;
};

// Convenience wrappers. Each builds a StoppingProblem, so prefer the class
// for repeated evaluation.
double expected_profit_R(const GameModel& model, double x, FirmId firm = 1);
double beta(const GameModel& model, FirmId firm, double x);
double beta_prime(const GameModel& model, FirmId firm, double x);
ThresholdSolution optimal_threshold(const GameModel& model, FirmId firm);
double single_player_value(const GameModel& model, FirmId firm, double x);

}  // namespace attrition
