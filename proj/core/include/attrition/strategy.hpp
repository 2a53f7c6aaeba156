#pragma once

#include "attrition/payoffs.hpp"

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace attrition {

// Exit with `probability` the first time the state is at or below `level`.
// Only non-Markov profiles use these.
struct Atom {
    double level = 0;
    double probability = 0;
};

// Exit intensity, zero outside (support_lo, support_hi].
class Hazard {
public:
    Hazard() = default;
    Hazard(std::function<double(double)> rate, double support_lo, double support_hi,
           std::string description);

    static Hazard constant(double rate, double support_lo, double support_hi);

    double operator()(double x) const;
    bool active() const { return static_cast<bool>(rate_); }
    double support_lo() const { return lo_; }
    double support_hi() const { return hi_; }
    const std::string& description() const { return description_; }

    // same support, rate multiplied by k
    Hazard scaled(double k) const;

private:
    std::function<double(double)> rate_;
    double lo_ = -std::numeric_limits<double>::infinity();
    double hi_ = -std::numeric_limits<double>::infinity();
    std::string description_ = "none";
};

struct Strategy {
    std::optional<double> exit_threshold;  // leave at once when x <= threshold
    Hazard hazard;
    std::vector<Atom> atoms;
    std::string label;

    static Strategy never_exit();
    static Strategy threshold(double theta);
    static Strategy mixed(Hazard hazard);

    bool in_exit_region(double x) const { return exit_threshold && x <= *exit_threshold; }
    // exit region and hazard support must not overlap; probabilities in [0, 1]
    void check() const;
    std::string describe() const;
};

struct StrategyProfile {
    std::array<Strategy, 2> firms;
    std::string label;

    const Strategy& of(FirmId i) const { return firms[static_cast<std::size_t>(i - 1)]; }
    Strategy& of(FirmId i) { return firms[static_cast<std::size_t>(i - 1)]; }
};

// Rival exit intensity that keeps firm `indifferent` exactly indifferent
// between leaving and staying: -net_flow / (w - l). May be negative.
double candidate_exit_rate(const GameModel& model, FirmId indifferent, double x);

// That rate as a hazard on (-inf, cutoff], clamped at zero and multiplied by `scale`.
Hazard indifference_hazard(const GameModel& model, FirmId indifferent, double cutoff, double scale = 1.0);

}  // namespace attrition
