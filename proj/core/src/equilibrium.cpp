#include "attrition/equilibrium.hpp"

#include "attrition/deterministic.hpp"
#include "attrition/error.hpp"
#include "attrition/numerics.hpp"
#include "attrition/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace attrition {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// n states uniform in the grid coordinate on (a, b]
std::vector<double> open_left_grid(const DiffusionSpec& s, double a, double b, int n) {
    std::vector<double> xs;
    if (!(b > a) || n < 1) return xs;
    const double ya = s.to_grid(a), yb = s.to_grid(b);
    xs.reserve(static_cast<std::size_t>(n));
    for (int k = 1; k < n; ++k) xs.push_back(s.from_grid(ya + (yb - ya) * k / n));
    xs.push_back(b);
    return xs;
}

void require_noise(const GameModel& m, const char* what) {
    if (m.deterministic()) {
        std::ostringstream os;
        os << what << " needs sigma > 0";
        fail(ErrorKind::Mode, os.str());
    }
}

OracleCertification certify_profile(const GameModel& m, const StrategyProfile& profile, double theta,
                                    const EquilibriumOptions& opt) {
    const auto grid = build_grid(m, opt.oracle_states);
    OracleCertification c;
    c.states = static_cast<int>(grid.size());
    c.spacing = grid.spacing;
    c.passed = true;
    for (FirmId i : {1, 2}) {
        const auto k = static_cast<std::size_t>(i - 1);
        const auto br = dp_best_response(grid, m, i, profile.of(rival(i)), profile.of(i));
        c.deviation_gain[k] = br.deviation_gain;
        c.argmax_x[k] = br.argmax_x;
        c.tolerance[k] = opt.deviation_tol * std::max(1.0, std::abs(m.exit_payoff(i, theta)));
        c.bellman_residual = std::max(c.bellman_residual, br.bellman_residual);
        if (!(br.deviation_gain <= c.tolerance[k])) c.passed = false;
    }
    return c;
}

// min over xs of the value of waiting for the rival to leave at `level`, minus own exit payoff
std::pair<double, double> waiting_margin(const GameModel& m, FirmId i, double level,
                                         const std::vector<double>& xs) {
    StoppingProblem p(m, i);
    const double prize = m.winner(i, level);
    double worst = inf, at = level;
    for (double x : xs) {
        const double v = waiting_value(p, x, level, prize) - m.exit_payoff(i, x);
        if (v < worst) {
            worst = v;
            at = x;
        }
    }
    return {worst, at};
}

StrategyProfile pure_profile(FirmId exiting, double theta, const std::string& label) {
    StrategyProfile prof;
    prof.of(exiting) = Strategy::threshold(theta);
    prof.of(rival(exiting)) = Strategy::never_exit();
    prof.label = label;
    return prof;
}

}  // namespace

ThresholdPair solve_thresholds(const GameModel& model) {
    ThresholdPair tp;
    tp.by_firm = {optimal_threshold(model, 1), optimal_threshold(model, 2)};
    if (tp.by_firm[1].theta < tp.by_firm[0].theta) {
        tp.low = 2;
        tp.high = 1;
    }
    return tp;
}

double waiting_value(const StoppingProblem& p, double x, double level, double payoff_at_level) {
    if (x <= level) return payoff_at_level;
    const auto& fp = p.fundamentals();
    return p.expected_profit(x) +
           (payoff_at_level - p.expected_profit(level)) * std::exp(fp.log_phi(x) - fp.log_phi(level));
}

PureEquilibrium pure_mpe_weak_exits(const ValidatedModel& vm, const EquilibriumOptions& opt) {
    const auto& m = vm.model();
    require_noise(m, "the weak-exits profile");
    const auto tp = solve_thresholds(m);
    PureEquilibrium eq;
    eq.exiting_firm = tp.high;
    eq.theta = tp.theta_high();
    eq.method = "weak-exits";
    eq.profile = pure_profile(tp.high, eq.theta, "weak-exits");
    const auto xs = open_left_grid(m.diffusion(), eq.theta, m.diffusion().window().hi, opt.certificate_grid);
    std::tie(eq.analytic_margin, eq.margin_at) = waiting_margin(m, tp.low, eq.theta, xs);
    eq.checked_states = static_cast<int>(xs.size());
    if (!(eq.analytic_margin > 0)) {
        std::ostringstream os;
        os << "weak-exits certificate failed: waiting margin " << eq.analytic_margin << " at x = " << eq.margin_at;
        fail(ErrorKind::Inconsistency, os.str());
    }
    if (opt.certify) {
        eq.oracle = certify_profile(m, eq.profile, eq.theta, opt);
        if (!eq.oracle->passed) {
            std::ostringstream os;
            os << "weak-exits oracle certificate failed: deviation gains " << eq.oracle->deviation_gain[0] << ", "
               << eq.oracle->deviation_gain[1];
            fail(ErrorKind::Inconsistency, os.str());
        }
    }
    return eq;
}

KappaResult kappa_theta(const ValidatedModel& vm, const EquilibriumOptions& opt) {
    const auto& m = vm.model();
    require_noise(m, "kappa");
    const auto tp = solve_thresholds(m);
    const FirmId hi_firm = tp.high;
    const double th = tp.theta_high();
    const auto& s = m.diffusion();
    const auto w = s.window();
    StoppingProblem p(m, hi_firm);

    KappaResult k;
    k.grid = opt.kappa_grid;
    k.w_floor = inf;
    const double y0 = s.to_grid(w.lo), y1 = s.to_grid(w.hi);
    for (int j = 0; j <= opt.kappa_grid; ++j) {
        const double x = s.from_grid(y0 + (y1 - y0) * j / opt.kappa_grid);
        const double v = m.winner(hi_firm, x);
        if (v < k.w_floor) {
            k.w_floor = v;
            k.w_floor_at = x;
        }
    }
    k.target = p.beta(th);
    const auto& fp = p.fundamentals();
    auto f = [&](double x) { return (k.w_floor - p.expected_profit(x)) / fp.phi(x) - k.target; };

    // scan down from theta_high for the first sign change
    const double yt = s.to_grid(th);
    double x_prev = th, f_prev = f(th);
    k.kappa = inf;
    k.root = -inf;
    for (int j = 1; j <= opt.kappa_grid; ++j) {
        const double x = s.from_grid(yt + (y0 - yt) * j / opt.kappa_grid);
        const double fx = f(x);
        if (fx <= 0) {
            const double root = fx == 0 ? x : numerics::find_root(f, x, x_prev, fx, f_prev).x;
            k.root = root;
            k.kappa = th - root;
            break;
        }
        x_prev = x;
        f_prev = fx;
    }
    return k;
}

std::optional<PureEquilibrium> pure_mpe_strong_exits(const ValidatedModel& vm, const EquilibriumOptions& opt) {
    const auto& m = vm.model();
    require_noise(m, "the strong-exits profile");
    const auto tp = solve_thresholds(m);
    const auto kappa = kappa_theta(vm, opt);
    PureEquilibrium eq;
    eq.exiting_firm = tp.low;
    eq.theta = tp.theta_low();
    eq.profile = pure_profile(tp.low, eq.theta, "strong-exits");
    const auto xs = open_left_grid(m.diffusion(), eq.theta, tp.theta_high(), opt.certificate_grid);
    if (xs.empty()) {
        eq.analytic_margin = m.winner(tp.high, eq.theta) - m.exit_payoff(tp.high, eq.theta);
        eq.margin_at = eq.theta;
    } else {
        std::tie(eq.analytic_margin, eq.margin_at) = waiting_margin(m, tp.high, eq.theta, xs);
    }
    eq.checked_states = static_cast<int>(xs.size());
    if (tp.gap() < kappa.kappa) eq.method = "kappa";
    else if (eq.analytic_margin > 0) eq.method = "condition-direct";
    else return std::nullopt;
    if (opt.certify) eq.oracle = certify_profile(m, eq.profile, eq.theta, opt);
    return eq;
}

MixedAnalysis mixed_mpe_analysis(const ValidatedModel& vm, const EquilibriumOptions& opt) {
    const auto& m = vm.model();
    require_noise(m, "mixed-strategy analysis");
    const auto tp = solve_thresholds(m);

    bool homogeneous;
    std::string note;
    if (!m.heterogeneous()) {
        homogeneous = std::abs(m.l(1) - m.l(2)) <= opt.homogeneity_tol * std::max(1.0, std::abs(m.l(2)));
    } else {
        homogeneous = tp.gap() <= 1e-8 * std::max(1.0, std::abs(tp.theta_high()));
        if (homogeneous) note = "thresholds indistinguishable; hazards from the indifference rates";
    }
    if (homogeneous) {
        MixedEquilibrium mixed;
        mixed.theta = tp.theta_low();
        mixed.note = note;
        for (FirmId i : {1, 2}) {
            mixed.profile.of(i) = Strategy::mixed(indifference_hazard(m, rival(i), mixed.theta));
            mixed.profile.of(i).label = "mixed";
        }
        mixed.profile.label = "mixed";
        return mixed;
    }

    NonexistenceCertificate c;
    c.low = tp.low;
    c.high = tp.high;
    c.theta_low = tp.theta_low();
    c.theta_high = tp.theta_high();
    c.gap = tp.gap();
    StoppingProblem p(m, c.low);
    c.break_even_low = p.break_even();
    c.witness = {c.theta_low, c.theta_high};
    c.min_surplus = inf;
    c.max_required_probability = -inf;
    auto xs = open_left_grid(m.diffusion(), c.theta_low, c.theta_high, opt.certificate_grid);
    if (!xs.empty()) xs.pop_back();  // open at theta_high
    if (xs.empty()) xs.push_back(0.5 * (c.theta_low + c.theta_high));
    for (double x : xs) {
        const double v = p.threshold_value(x, c.theta_low);
        const double l = m.exit_payoff(c.low, x), w = m.winner(c.low, x);
        c.min_surplus = std::min(c.min_surplus, v - l);
        c.max_required_probability = std::max(c.max_required_probability, (l - v) / (w - v));
    }
    if (c.break_even_low < c.theta_high) {
        c.negative_rate_interval = Window{c.break_even_low, c.theta_high};
        c.most_negative_rate = inf;
        for (double x : open_left_grid(m.diffusion(), c.break_even_low, c.theta_high, opt.certificate_grid))
            c.most_negative_rate = std::min(c.most_negative_rate, candidate_exit_rate(m, c.low, x));
    }
    c.pasting_defect = p.beta_prime(c.theta_high);
    std::ostringstream os;
    os << "firm " << c.low << " strictly prefers staying on (" << c.theta_low << ", " << c.theta_high
       << "), so a common hazard support would need a negative rival exit probability there";
    c.reason = os.str();
    return c;
}

DeterministicReport deterministic_mixed_mpe(const ValidatedModel& vm, double q1, const EquilibriumOptions& opt) {
    const auto& m = vm.model();
    if (!m.deterministic()) fail(ErrorKind::Mode, "the atom-plus-hazards check needs sigma identically zero");
    if (!(q1 >= 0 && q1 < 1)) fail(ErrorKind::Domain, "q1 must lie in [0, 1)");
    const auto tp = solve_thresholds(m);
    DeterministicReport rep;
    rep.low = tp.low;
    rep.high = tp.high;
    rep.theta_low = tp.theta_low();
    rep.theta_high = tp.theta_high();
    const double tl = rep.theta_low;
    const auto& s = m.diffusion();

    rep.profile.of(rep.low) = Strategy::mixed(indifference_hazard(m, rep.high, tl));
    rep.profile.of(rep.low).atoms.push_back({tl, q1});
    rep.profile.of(rep.high) = Strategy::mixed(indifference_hazard(m, rep.low, tl));
    rep.profile.label = "deterministic-mixed";

    // (a) the high firm waits through (theta_low, theta_high] for the atom
    DeterministicPath high_path(m, rep.high), low_path(m, rep.low);
    struct Point {
        double x, flow, discount, l;
    };
    std::vector<Point> pts;
    for (double x : open_left_grid(s, tl, rep.theta_high, opt.certificate_grid)) {
        const auto leg = high_path.travel(x, tl);
        pts.push_back({x, leg.discounted_flow, leg.discount, m.exit_payoff(rep.high, x)});
    }
    const double w_at = m.winner(rep.high, tl), l_at = m.exit_payoff(rep.high, tl);
    const double scale = std::max(1.0, std::abs(l_at));
    auto margin_for = [&](double q, double* where) {
        double worst = inf;
        for (const auto& p : pts) {
            const double v = p.flow + p.discount * (q * w_at + (1 - q) * l_at) - p.l;
            if (v < worst) {
                worst = v;
                if (where) *where = p.x;
            }
        }
        return pts.empty() ? 0.0 : worst;
    };
    rep.q_lower_bound = 0;
    for (const auto& p : pts) {
        const double need = (p.l - p.flow - p.discount * l_at) / (p.discount * (w_at - l_at));
        rep.q_lower_bound = std::max(rep.q_lower_bound, need);
    }

    // the low firm keeps waiting above its threshold
    double low_margin = inf;
    for (double x : open_left_grid(s, tl, s.window().hi, opt.certificate_grid / 4)) {
        const auto leg = low_path.travel(x, tl);
        low_margin = std::min(low_margin, leg.discounted_flow + leg.discount * m.exit_payoff(rep.low, tl) -
                                              m.exit_payoff(rep.low, x));
    }
    if (low_margin == inf) low_margin = 0;

    // (b) below theta_low each hazard keeps the rival exactly indifferent
    double residual = 0, min_rate = inf;
    for (FirmId i : {1, 2}) {
        DeterministicPath path(m, i);
        const Hazard& h = rep.profile.of(rival(i)).hazard;
        const double horizon = 40 / m.r(i);
        const double lo = s.window().lo;
        for (double x : open_left_grid(s, lo, tl, 24)) {
            min_rate = std::min(min_rate, candidate_exit_rate(m, i, x));
            const auto leg = path.run_with_hazard(x, h, horizon);
            const double v = leg.payoff + leg.weight * m.exit_payoff(i, leg.state);
            residual = std::max(residual, std::abs(v - m.exit_payoff(i, x)) / std::max(1.0, std::abs(m.exit_payoff(i, x))));
        }
    }
    const bool hazards_ok = residual <= 1e-7 && min_rate >= -1e-12;
    const bool low_ok = low_margin >= -1e-10 * scale;

    auto check_for = [&](double q) {
        DeterministicCheck c;
        c.q1 = q;
        c.no_atom = q == 0;
        c.waiting_margin = margin_for(q, &c.waiting_margin_at);
        c.low_waiting_margin = low_margin;
        c.indifference_residual = residual;
        c.min_rate = min_rate;
        c.feasible = hazards_ok && low_ok && c.waiting_margin >= -1e-10 * scale;
        return c;
    };
    rep.check = check_for(q1);

    const int steps = static_cast<int>(std::lround(1 / opt.q_step));
    double first = -1, last = -1;
    int last_k = -1;
    for (int k = 1; k < steps; ++k) {
        const double q = k * opt.q_step;
        ++rep.scanned;
        if (!check_for(q).feasible) continue;
        if (first < 0) first = q;
        else if (k != last_k + 1) rep.contiguous = false;
        last = q;
        last_k = k;
        ++rep.feasible_count;
    }
    if (rep.feasible_count > 0) rep.feasible_interval = std::array<double, 2>{first, last};
    return rep;
}

std::string EquilibriumReport::classification() const {
    if (deterministic) return deterministic->feasible_interval ? "deterministic-mixed" : "deterministic-none";
    return mixed ? "mixed+pure" : "pure-only";
}

EquilibriumReport analyze_equilibria(const ValidatedModel& vm, const EquilibriumOptions& opt,
                                     std::optional<double> x0) {
    const auto& m = vm.model();
    EquilibriumReport rep;
    rep.thresholds = solve_thresholds(m);
    rep.x0 = x0;
    if (m.deterministic()) {
        auto d = deterministic_mixed_mpe(vm, opt.q1.value_or(0.5), opt);
        if (!opt.q1 && d.feasible_interval) {
            const double mid = 0.5 * ((*d.feasible_interval)[0] + (*d.feasible_interval)[1]);
            d = deterministic_mixed_mpe(vm, mid, opt);
        }
        rep.deterministic = std::move(d);
        rep.notes.push_back("sigma = 0: pure profiles are not certified in this mode");
    } else {
        rep.pure_weak = pure_mpe_weak_exits(vm, opt);
        rep.kappa = kappa_theta(vm, opt);
        rep.pure_strong = pure_mpe_strong_exits(vm, opt);
        auto mixed = mixed_mpe_analysis(vm, opt);
        if (auto* mx = std::get_if<MixedEquilibrium>(&mixed)) rep.mixed = std::move(*mx);
        else rep.nonexistence = std::get<NonexistenceCertificate>(std::move(mixed));
    }
    if (x0 && *x0 < rep.thresholds.theta_low())
        rep.notes.push_back("x0 is below both thresholds: outside the range where the pure profiles are unique; "
                            "multi-threshold equilibria are not enumerated");
    return rep;
}

}  // namespace attrition
