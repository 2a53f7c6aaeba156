#pragma once

#include "attrition/payoffs.hpp"

#include <functional>

namespace attrition {

// Paths of dx/dt = mu(x) with mu < 0, used when sigma is identically zero.
class DeterministicPath {
public:
    DeterministicPath(const GameModel& model, FirmId firm);

    struct Leg {
        double time = 0;             // time to travel from x down to level
        double discounted_flow = 0;  // int_0^time e^{-r t} pi(x_t) dt
        double discount = 1;         // e^{-r time}
    };
    Leg travel(double x, double level) const;

    struct HazardLeg {
        double payoff = 0;     // discounted flow plus w on a rival exit, up to the horizon
        double weight = 0;     // e^{-r T} times the probability the rival is still in
        double state = 0;      // X_T
    };
    // Staying from x for `horizon` time units while the rival leaves at
    // intensity `rival_hazard`. The full value is payoff + weight * V(state).
    HazardLeg run_with_hazard(double x, const std::function<double(double)>& rival_hazard,
                              double horizon) const;

    double state_after(double x, double t) const;

private:
    GameModel model_;
    FirmId firm_;
};

}  // namespace attrition
