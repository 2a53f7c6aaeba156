#pragma once

#include "attrition/diffusion.hpp"
#include "attrition/function.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace attrition {

// Firm index, 1 or 2. Firm 1 is the one with the smaller exit payoff in the
// standard model.
using FirmId = int;

inline FirmId rival(FirmId i) { return 3 - i; }

struct FirmPrimitives {
    double r = 0;
    ScalarFunction flow;    // duopoly flow profit
    ScalarFunction winner;  // payoff of the firm that outlasts its rival
    ScalarFunction exit;    // exit payoff, a constant in the standard model
};

// Diffusion plus both firms' payoffs. In the standard model the firms share
// r, flow and winner payoff and differ only in their constant exit payoffs.
// The heterogeneous mode lets every primitive differ and exit payoffs depend
// on the state.
class GameModel {
public:
    // A missing truncation window is filled in from the break-even states.
    static GameModel standard(DiffusionSpec diffusion, double r, ScalarFunction flow,
                              ScalarFunction winner, double l1, double l2);
    static GameModel heterogeneous(DiffusionSpec diffusion, FirmPrimitives firm1,
                                   FirmPrimitives firm2);

    const DiffusionSpec& diffusion() const { return diffusion_; }
    const FirmPrimitives& firm(FirmId i) const;
    bool heterogeneous() const { return heterogeneous_; }
    bool deterministic() const { return diffusion_.deterministic(); }

    double r(FirmId i) const { return firm(i).r; }
    double flow(FirmId i, double x) const { return firm(i).flow(x); }
    double winner(FirmId i, double x) const { return firm(i).winner(x); }
    double exit_payoff(FirmId i, double x) const { return firm(i).exit(x); }
    // payoff when both firms leave at the same instant
    double tie_payoff(FirmId i, double x) const;
    // constant exit payoff; only valid when it does not depend on the state
    double l(FirmId i) const;

    // pi_i(x) + 1/2 sigma^2 l_i'' + mu l_i' - r_i l_i. Equals pi - r l for a
    // constant exit payoff; its root is the break-even state.
    double net_flow(FirmId i, double x) const;

    // Copies sharing the diffusion window.
    GameModel with_exit_payoffs(double l1, double l2) const;
    GameModel with_window(Window w) const;
    GameModel without_noise() const;

private:
    GameModel() = default;
    void resolve_window();

    DiffusionSpec diffusion_ = DiffusionSpec::arithmetic(0, 1);
    std::array<FirmPrimitives, 2> firms_;
    bool heterogeneous_ = false;
};

// Root of net_flow inside the window (x_c).
double break_even_state(const GameModel& model, FirmId i);

enum class CheckStatus { Pass, Warn, Fail };
const char* to_string(CheckStatus s) noexcept;

struct AssumptionCheck {
    std::string name;
    CheckStatus status = CheckStatus::Pass;
    double worst_x = 0;       // grid point with the smallest margin
    double worst_value = 0;   // margin there (positive means satisfied)
    std::string detail;
};

struct ValidationReport {
    int grid_size = 0;
    Window window;
    std::vector<AssumptionCheck> checks;
    std::array<std::optional<double>, 2> break_even;

    bool passed() const;
    std::vector<std::string> failures() const;
    const AssumptionCheck* find(const std::string& name) const;
};

ValidationReport validate(const GameModel& model, int grid_size = 1000);

// A model that passed validation. Equilibrium construction only accepts these.
class ValidatedModel {
public:
    // throws Error(Assumption) listing the failed checks
    static ValidatedModel check(GameModel model, int grid_size = 1000);

    const GameModel& model() const { return model_; }
    const ValidationReport& report() const { return report_; }

private:
    ValidatedModel(GameModel m, ValidationReport r) : model_(std::move(m)), report_(std::move(r)) {}
    GameModel model_;
    ValidationReport report_;
};

}  // namespace attrition
