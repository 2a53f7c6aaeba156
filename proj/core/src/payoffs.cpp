#include "attrition/payoffs.hpp"

#include "attrition/error.hpp"
#include "attrition/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace attrition {

namespace {

void check_firm(const FirmPrimitives& f, FirmId i) {
    if (!(f.r > 0) || !std::isfinite(f.r)) {
        std::ostringstream os;
        os << "firm " << i << ": discount rate must be positive, got " << f.r;
        fail(ErrorKind::Domain, os.str());
    }
}

double nominal_center(const DiffusionSpec& s) {
    if (s.kind() == DiffusionKind::OrnsteinUhlenbeck) return s.mean_parameter();
    if (s.coordinate() == Coordinate::Log) return 1.0;
    if (s.in_state_space(0.0)) return 0.0;
    return 0.5 * (s.state_lo() + s.state_hi());
}

// grid-coordinate limits of the state space, pulled in slightly
std::pair<double, double> grid_limits(const DiffusionSpec& s) {
    double lo = -1e300, hi = 1e300;
    if (s.coordinate() == Coordinate::Log) {
        lo = -700;
        hi = 700;
    }
    if (std::isfinite(s.state_lo()) && s.state_lo() > 0) lo = std::max(lo, s.to_grid(s.state_lo()));
    if (std::isfinite(s.state_hi())) hi = std::min(hi, s.to_grid(s.state_hi()));
    if (s.coordinate() == Coordinate::Linear && std::isfinite(s.state_lo()))
        lo = std::max(lo, s.state_lo());
    const double pad = 1e-9 * std::max(1.0, std::abs(hi - lo) < 1e299 ? hi - lo : 1.0);
    return {lo + pad, hi - pad};
}

// First upward sign change of f on a uniform grid over [ya, yb] (grid coordinate).
std::optional<std::pair<double, double>> upward_crossing(const std::function<double(double)>& f,
                                                         const DiffusionSpec& s, double ya, double yb,
                                                         int n) {
    double xp = s.from_grid(ya), fp = f(xp);
    for (int k = 1; k <= n; ++k) {
        const double x = s.from_grid(ya + (yb - ya) * k / n);
        const double fx = f(x);
        if (std::isfinite(fp) && std::isfinite(fx) && fp <= 0 && fx > 0) return std::make_pair(xp, x);
        xp = x;
        fp = fx;
    }
    return std::nullopt;
}

double root_between(const std::function<double(double)>& f, double a, double b) {
    const double fa = f(a), fb = f(b);
    if (fa == 0) return a;
    return numerics::find_root(f, a, b, fa, fb).x;
}

double search_break_even(const GameModel& m, FirmId i) {
    const auto& s = m.diffusion();
    auto f = [&](double x) { return m.net_flow(i, x); };
    const double yc = s.to_grid(nominal_center(s));
    const auto [glo, ghi] = grid_limits(s);
    for (double d = 1; d < 1e9; d *= 2) {
        const double ya = std::max(glo, yc - d), yb = std::min(ghi, yc + d);
        if (auto br = upward_crossing(f, s, ya, yb, 400)) return root_between(f, br->first, br->second);
        if (ya <= glo && yb >= ghi) break;
    }
    std::ostringstream os;
    os << "firm " << i << ": net flow profit never changes sign, no break-even state";
    fail(ErrorKind::Assumption, os.str());
}

}  // namespace

GameModel GameModel::standard(DiffusionSpec diffusion, double r, ScalarFunction flow,
                              ScalarFunction winner, double l1, double l2) {
    GameModel m;
    m.diffusion_ = std::move(diffusion);
    m.firms_[0] = FirmPrimitives{r, flow, winner, ScalarFunction::constant(l1)};
    m.firms_[1] = FirmPrimitives{r, std::move(flow), std::move(winner), ScalarFunction::constant(l2)};
    check_firm(m.firms_[0], 1);
    if (!std::isfinite(l1) || !std::isfinite(l2)) fail(ErrorKind::Domain, "exit payoffs must be finite");
    m.resolve_window();
    return m;
}

GameModel GameModel::heterogeneous(DiffusionSpec diffusion, FirmPrimitives firm1, FirmPrimitives firm2) {
    GameModel m;
    m.diffusion_ = std::move(diffusion);
    check_firm(firm1, 1);
    check_firm(firm2, 2);
    m.firms_[0] = std::move(firm1);
    m.firms_[1] = std::move(firm2);
    m.heterogeneous_ = true;
    m.resolve_window();
    return m;
}

void GameModel::resolve_window() {
    if (diffusion_.has_window()) return;
    const double x1 = search_break_even(*this, 1), x2 = search_break_even(*this, 2);
    const auto& s = diffusion_;
    const double center = s.from_grid(0.5 * (s.to_grid(x1) + s.to_grid(x2)));
    if (!s.deterministic()) {
        diffusion_ = s.with_window(default_window(s, std::min(firms_[0].r, firms_[1].r), center));
        return;
    }
    // deterministic: wide enough for the flow to carry the state well past
    // both break-even points within a few discounting horizons
    const double yc = s.to_grid(center);
    const double jac = s.coordinate() == Coordinate::Log ? center : 1.0;
    const double rmin = std::min(firms_[0].r, firms_[1].r);
    double span = std::max({5.0, 50 * std::abs(s.mu(center)) / (rmin * jac),
                            4 * std::abs(s.to_grid(x1) - s.to_grid(x2))});
    const auto [glo, ghi] = grid_limits(s);
    diffusion_ = s.with_window({s.from_grid(std::max(glo, yc - span)), s.from_grid(std::min(ghi, yc + span))});
}

const FirmPrimitives& GameModel::firm(FirmId i) const {
    if (i != 1 && i != 2) fail(ErrorKind::Domain, "firm index must be 1 or 2");
    return firms_[static_cast<std::size_t>(i - 1)];
}

double GameModel::tie_payoff(FirmId i, double x) const {
    return 0.5 * (exit_payoff(i, x) + winner(i, x));
}

double GameModel::l(FirmId i) const {
    const auto& f = firm(i).exit;
    if (!f.is_constant()) fail(ErrorKind::Mode, "exit payoff depends on the state");
    return f.constant_value();
}

double GameModel::net_flow(FirmId i, double x) const {
    const auto& f = firm(i);
    const double sg = diffusion_.sigma(x);
    return f.flow(x) + 0.5 * sg * sg * f.exit.d2(x) + diffusion_.mu(x) * f.exit.d1(x) - f.r * f.exit(x);
}

GameModel GameModel::with_exit_payoffs(double l1, double l2) const {
    if (heterogeneous_) fail(ErrorKind::Mode, "with_exit_payoffs is for the standard model");
    GameModel m = *this;
    m.firms_[0].exit = ScalarFunction::constant(l1);
    m.firms_[1].exit = ScalarFunction::constant(l2);
    return m;
}

GameModel GameModel::with_window(Window w) const {
    GameModel m = *this;
    m.diffusion_ = diffusion_.with_window(w);
    return m;
}

GameModel GameModel::without_noise() const {
    GameModel m = *this;
    m.diffusion_ = diffusion_.without_noise();
    return m;
}

double break_even_state(const GameModel& m, FirmId i) {
    const auto& s = m.diffusion();
    const auto& w = s.window();
    auto f = [&](double x) { return m.net_flow(i, x); };
    auto br = upward_crossing(f, s, s.to_grid(w.lo), s.to_grid(w.hi), 4000);
    if (!br) {
        std::ostringstream os;
        os << "firm " << i << ": no break-even state inside the window [" << w.lo << ", " << w.hi << "]";
        fail(ErrorKind::Assumption, os.str());
    }
    return root_between(f, br->first, br->second);
}

// ---------------------------------------------------------------------------

const char* to_string(CheckStatus s) noexcept {
    switch (s) {
        case CheckStatus::Pass: return "pass";
        case CheckStatus::Warn: return "warn";
        case CheckStatus::Fail: return "fail";
    }
    return "unknown";
}

bool ValidationReport::passed() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const AssumptionCheck& c) { return c.status == CheckStatus::Fail; });
}

std::vector<std::string> ValidationReport::failures() const {
    std::vector<std::string> out;
    for (const auto& c : checks) {
        if (c.status != CheckStatus::Fail) continue;
        std::ostringstream os;
        os << c.name << " (worst margin " << c.worst_value << " at x = " << c.worst_x << ")";
        if (!c.detail.empty()) os << ": " << c.detail;
        out.push_back(os.str());
    }
    return out;
}

const AssumptionCheck* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

// Tracks the smallest margin over the grid; a check passes when every margin
// is strictly positive.
struct MarginScan {
    double worst = std::numeric_limits<double>::infinity();
    double worst_x = 0;
    bool finite = true;

    void add(double x, double margin) {
        if (!std::isfinite(margin)) {
            if (finite) worst_x = x;
            finite = false;
            return;
        }
        if (margin < worst) {
            worst = margin;
            if (finite) worst_x = x;
        }
    }

    AssumptionCheck result(std::string name, std::string detail = {}) const {
        AssumptionCheck c;
        c.name = std::move(name);
        c.worst_x = worst_x;
        c.worst_value = finite ? worst : std::numeric_limits<double>::quiet_NaN();
        c.status = finite && worst > 0 ? CheckStatus::Pass : CheckStatus::Fail;
        c.detail = finite ? std::move(detail) : "non-finite value on the grid";
        return c;
    }
};

std::string suffix(const GameModel& m, FirmId i) {
    return m.heterogeneous() ? "-" + std::to_string(i) : "";
}

}  // namespace

ValidationReport validate(const GameModel& m, int grid_size) {
    if (grid_size < 100) fail(ErrorKind::Domain, "validation grid needs at least 100 points");
    const auto& s = m.diffusion();
    ValidationReport rep;
    rep.grid_size = grid_size;
    rep.window = s.window();
    std::vector<double> xs;
    for (double y : numerics::linspace(s.to_grid(rep.window.lo), s.to_grid(rep.window.hi),
                                       static_cast<std::size_t>(grid_size)))
        xs.push_back(s.from_grid(y));

    const std::vector<FirmId> firms = m.heterogeneous() ? std::vector<FirmId>{1, 2} : std::vector<FirmId>{1};

    if (!m.heterogeneous()) {
        AssumptionCheck c;
        c.name = "exit-payoff-order";
        c.worst_value = m.l(2) - m.l(1);
        c.status = c.worst_value >= 0 ? CheckStatus::Pass : CheckStatus::Fail;
        c.detail = "l1 <= l2";
        rep.checks.push_back(c);
    }

    if (m.deterministic()) {
        MarginScan scan;
        for (double x : xs) scan.add(x, -s.mu(x));
        rep.checks.push_back(scan.result("drift-negative", "deterministic mode needs mu < 0"));
    } else {
        MarginScan scan;
        for (double x : xs) scan.add(x, s.sigma(x));
        rep.checks.push_back(scan.result("volatility-positive"));
    }

    for (FirmId i : firms) {
        // strictly increasing flow, or net flow in the heterogeneous mode
        MarginScan scan;
        for (std::size_t k = 1; k < xs.size(); ++k)
            scan.add(xs[k], m.net_flow(i, xs[k]) - m.net_flow(i, xs[k - 1]));
        rep.checks.push_back(scan.result(m.heterogeneous() ? "net-flow-increasing-" + std::to_string(i)
                                                           : "flow-increasing"));
    }

    if (m.heterogeneous()) {
        for (FirmId i : firms) {
            MarginScan scan;
            for (double x : xs) scan.add(x, m.winner(i, x) - m.exit_payoff(i, x));
            rep.checks.push_back(scan.result("winner-above-exit-" + std::to_string(i)));
        }
        for (FirmId i : firms) {
            MarginScan scan;
            const auto& l = m.firm(i).exit;
            for (double x : xs) scan.add(x, std::isfinite(l.d2(x)) ? 1.0 : -1.0);
            rep.checks.push_back(scan.result("exit-payoff-smooth-" + std::to_string(i)));
        }
    } else {
        MarginScan scan;
        const double l2 = m.l(2);
        for (double x : xs) scan.add(x, m.winner(1, x) - l2);
        rep.checks.push_back(scan.result("winner-above-exit", "w(x) > l2"));
    }

    for (FirmId i : firms) {
        // w(x) > E[int pi + e^{-rt} w(X_t)] for all t, i.e. generator applied
        // to w plus flow stays strictly below r w
        MarginScan scan;
        const auto& f = m.firm(i);
        for (double x : xs) {
            const double sg = s.sigma(x);
            const double gen = 0.5 * sg * sg * f.winner.d2(x) + s.mu(x) * f.winner.d1(x);
            scan.add(x, f.r * f.winner(x) - gen - f.flow(x));
        }
        rep.checks.push_back(scan.result("winner-impatience" + suffix(m, i)));
    }

    for (FirmId i : {1, 2}) {
        AssumptionCheck c;
        c.name = "break-even-interior-" + std::to_string(i);
        try {
            const double xc = break_even_state(m, i);
            rep.break_even[static_cast<std::size_t>(i - 1)] = xc;
            c.worst_x = xc;
            c.worst_value = std::min(s.to_grid(xc) - s.to_grid(rep.window.lo),
                                     s.to_grid(rep.window.hi) - s.to_grid(xc));
            c.status = CheckStatus::Pass;
        } catch (const Error& e) {
            c.status = CheckStatus::Fail;
            c.detail = e.what();
        }
        rep.checks.push_back(c);
    }

    if (!m.deterministic()) {
        // Contribution of the tails beyond the window to the expected profit
        // at the reference point, extrapolating flow as constant.
        for (FirmId i : firms) {
            AssumptionCheck c;
            c.name = "tail-integrability" + suffix(m, i);
            try {
                const auto fp = fundamental_solutions(s, m.r(i));
                const double xr = s.x_ref(), B = fp.wronskian(), r = m.r(i);
                const auto& w = rep.window;
                const double right = std::abs(m.flow(i, w.hi)) * fp.psi(xr) * -fp.dphi(w.hi) /
                                     (B * r * std::exp(fp.log_scale_density(w.hi)));
                const double left = std::abs(m.flow(i, w.lo)) * fp.phi(xr) * fp.dpsi(w.lo) /
                                    (B * r * std::exp(fp.log_scale_density(w.lo)));
                const double ref = std::max(1.0, std::abs(m.flow(i, xr))) / r;
                c.worst_x = xr;
                c.worst_value = (left + right) / ref;
                c.status = std::isfinite(c.worst_value) && c.worst_value <= 1e-6 ? CheckStatus::Pass
                                                                                  : CheckStatus::Warn;
                c.detail = "relative tail mass beyond the window";
            } catch (const Error& e) {
                c.status = CheckStatus::Warn;
                c.detail = e.what();
            }
            rep.checks.push_back(c);
        }
    }

    if (s.kind() == DiffusionKind::Custom) {
        // sampled only; a large value is a warning, never a rejection
        AssumptionCheck c;
        c.name = "lipschitz-sampled";
        const double lm = sampled_lipschitz(s.drift(), s), ls = sampled_lipschitz(s.volatility(), s);
        c.worst_value = std::max(lm, ls);
        c.status = std::isfinite(c.worst_value) && c.worst_value < 1e6 ? CheckStatus::Pass : CheckStatus::Warn;
        std::ostringstream os;
        os << "finite-difference slopes: drift " << lm << ", volatility " << ls;
        c.detail = os.str();
        rep.checks.push_back(c);
    }
    return rep;
}

ValidatedModel ValidatedModel::check(GameModel model, int grid_size) {
    auto rep = validate(model, grid_size);
    if (!rep.passed()) {
        std::ostringstream os;
        os << "model failed validation:";
        for (const auto& f : rep.failures()) os << "\n  " << f;
        fail(ErrorKind::Assumption, os.str());
    }
    return ValidatedModel(std::move(model), std::move(rep));
}

}  // namespace attrition
