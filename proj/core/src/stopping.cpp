#include "attrition/stopping.hpp"

#include "attrition/deterministic.hpp"
#include "attrition/error.hpp"
#include "attrition/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace attrition {

// Green-kernel pieces shared by every evaluation. Integrals are taken in the
// grid coordinate. Mass beyond the window is integrated directly when the
// fundamental pair has a closed form. Otherwise it is added analytically
// through (phi'/S')' = r phi m' and (psi'/S')' = r psi m' with the
// integrand's non-kernel factor frozen at the window edge.
struct StoppingProblem::Kernel {
    FundamentalPair fp;
    double a = 0, b = 0;   // window
    double r = 0;
    double flow_tail_lo = 0;  // int_alpha^a psi m' pi
    double flow_tail_hi = 0;  // int_b^beta phi m' pi
    double net_tail_hi = 0;   // int_b^beta phi m' (pi - A l)
    double right_of_break_even = 0;  // int_{x_c}^b phi g m' + tail

    explicit Kernel(FundamentalPair f) : fp(std::move(f)) {}

    double log_m(double y) const { return fp.log_speed_density(y); }

    // int_u^v h(y) dy with the substitution to grid coordinates
    double integrate(const std::function<double(double)>& h, double u, double v) const {
        const auto& s = fp.spec();
        if (u == v) return 0;
        if (s.coordinate() == Coordinate::Linear) return numerics::integrate(h, u, v).value;
        auto g = [&](double t) {
            const double y = std::exp(t);
            return h(y) * y;
        };
        return numerics::integrate(g, std::log(u), std::log(v)).value;
    }

    // int of h over (b, beta) for dir = +1 or (alpha, a) for dir = -1,
    // in chunks of one window width until a chunk stops mattering
    double integrate_beyond(const std::function<double(double)>& h, int dir) const {
        const auto& s = fp.spec();
        const double t0 = s.to_grid(dir > 0 ? b : a);
        const double width = s.to_grid(b) - s.to_grid(a);
        const double lo_t = s.state_lo() > -INFINITY ? s.to_grid(s.state_lo()) : -INFINITY;
        const double hi_t = s.state_hi() < INFINITY ? s.to_grid(s.state_hi()) : INFINITY;
        double total = 0, t = t0, step = width;
        for (int k = 0; k < 60; ++k) {
            double next = t + dir * step;
            next = std::clamp(next, lo_t, hi_t);
            if (next == t) break;
            const double part = integrate(h, s.from_grid(std::min(t, next)), s.from_grid(std::max(t, next)));
            total += part;
            if (!std::isfinite(total)) return total;
            if (std::abs(part) <= 1e-16 * std::abs(total)) break;
            t = next;
            step *= 2;
        }
        return total;
    }
};

namespace {

void require_window_point(const DiffusionSpec& s, double x) {
    const auto& w = s.window();
    if (!(x >= w.lo && x <= w.hi) || !std::isfinite(x)) {
        std::ostringstream os;
        os << "x = " << x << " outside the truncation window [" << w.lo << ", " << w.hi << "]";
        fail(ErrorKind::Domain, os.str());
    }
}

}  // namespace

StoppingProblem::StoppingProblem(const GameModel& model, FirmId firm) : model_(model), firm_(firm) {
    // R and beta make sense without a break-even state; only solve() needs it
    try {
        break_even_ = break_even_state(model_, firm_);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Assumption) throw;
        break_even_ = std::numeric_limits<double>::quiet_NaN();
        break_even_error_ = e.what();
    }
    if (model_.deterministic()) return;
    const auto& s = model_.diffusion();
    auto k = std::make_shared<Kernel>(fundamental_solutions(s, model_.r(firm_)));
    k->a = s.window().lo;
    k->b = s.window().hi;
    k->r = model_.r(firm_);
    const auto& fp = k->fp;
    const auto* kp = k.get();
    auto phi_m = [kp](double y) { return std::exp(kp->fp.log_phi(y) + kp->log_m(y)); };
    auto psi_m = [kp](double y) { return std::exp(kp->fp.log_psi(y) + kp->log_m(y)); };
    const double tail_phi = -fp.phi_slope(k->b) * std::exp(fp.log_phi(k->b) - fp.log_scale_density(k->b)) / k->r;
    const double tail_psi = fp.psi_slope(k->a) * std::exp(fp.log_psi(k->a) - fp.log_scale_density(k->a)) / k->r;
    k->flow_tail_lo = model_.flow(firm_, k->a) * tail_psi;
    k->flow_tail_hi = model_.flow(firm_, k->b) * tail_phi;
    k->net_tail_hi = model_.net_flow(firm_, k->b) * tail_phi;
    if (fp.closed_form()) {
        auto keep_finite = [](double& slot, double v) {
            if (std::isfinite(v)) slot = v;
        };
        // weights underflow long before pi overflows for integrable pi
        auto weighted = [](double wgt, auto&& f) { return wgt == 0 ? 0.0 : wgt * f(); };
        try {
            keep_finite(k->flow_tail_lo, k->integrate_beyond(
                                             [&](double y) {
                                                 return weighted(psi_m(y), [&] { return model_.flow(firm_, y); });
                                             },
                                             -1));
            keep_finite(k->flow_tail_hi, k->integrate_beyond(
                                             [&](double y) {
                                                 return weighted(phi_m(y), [&] { return model_.flow(firm_, y); });
                                             },
                                             +1));
            keep_finite(k->net_tail_hi, k->integrate_beyond(
                                            [&](double y) {
                                                return weighted(phi_m(y), [&] { return model_.net_flow(firm_, y); });
                                            },
                                            +1));
        } catch (const Error&) {
            // non-integrable tail: keep the frozen-edge estimate
        }
    }
    if (std::isfinite(break_even_)) {
        k->right_of_break_even =
            k->integrate([&](double y) { return phi_m(y) * model_.net_flow(firm_, y); }, break_even_, k->b) +
            k->net_tail_hi;
    }
    kernel_ = std::move(k);
}

const FundamentalPair& StoppingProblem::fundamentals() const {
    if (!kernel_) fail(ErrorKind::Mode, "no fundamental solutions in deterministic mode");
    return kernel_->fp;
}

double StoppingProblem::expected_profit(double x) const {
    if (!kernel_) fail(ErrorKind::Mode, "expected profit needs sigma > 0");
    require_window_point(model_.diffusion(), x);
    const auto& k = *kernel_;
    const auto& fp = k.fp;
    const double lphi = fp.log_phi(x), lpsi = fp.log_psi(x);
    auto left = [&](double y) { return std::exp(lphi + fp.log_psi(y) + k.log_m(y)) * model_.flow(firm_, y); };
    auto right = [&](double y) { return std::exp(lpsi + fp.log_phi(y) + k.log_m(y)) * model_.flow(firm_, y); };
    double v = k.integrate(left, k.a, x) + k.integrate(right, x, k.b);
    v += std::exp(lphi) * k.flow_tail_lo;
    v += std::exp(lpsi) * k.flow_tail_hi;
    return v / fp.wronskian();
}

double StoppingProblem::expected_profit_slope(double x) const {
    if (!kernel_) fail(ErrorKind::Mode, "expected profit needs sigma > 0");
    require_window_point(model_.diffusion(), x);
    const auto& k = *kernel_;
    const auto& fp = k.fp;
    const double lphi = fp.log_phi(x), lpsi = fp.log_psi(x);
    auto left = [&](double y) { return std::exp(lphi + fp.log_psi(y) + k.log_m(y)) * model_.flow(firm_, y); };
    auto right = [&](double y) { return std::exp(lpsi + fp.log_phi(y) + k.log_m(y)) * model_.flow(firm_, y); };
    const double lo_part = k.integrate(left, k.a, x) + std::exp(lphi) * k.flow_tail_lo;
    const double hi_part = k.integrate(right, x, k.b) + std::exp(lpsi) * k.flow_tail_hi;
    return (fp.phi_slope(x) * lo_part + fp.psi_slope(x) * hi_part) / fp.wronskian();
}

double StoppingProblem::beta(double x) const {
    return (model_.exit_payoff(firm_, x) - expected_profit(x)) / fundamentals().phi(x);
}

double StoppingProblem::beta_prime(double x) const {
    if (!kernel_) fail(ErrorKind::Mode, "beta' needs sigma > 0");
    require_window_point(model_.diffusion(), x);
    const auto& k = *kernel_;
    const auto& fp = k.fp;
    auto integrand = [&](double y) { return std::exp(fp.log_phi(y) + k.log_m(y)) * model_.net_flow(firm_, y); };
    double inner;
    if (x <= break_even_) {
        inner = k.integrate(integrand, x, break_even_) + k.right_of_break_even;
    } else {
        inner = k.integrate(integrand, x, k.b) + k.net_tail_hi;
    }
    return -std::exp(fp.log_scale_density(x) - 2 * fp.log_phi(x)) * inner;
}

double StoppingProblem::beta_prime_tail(double x) const {
    if (!kernel_) return 0;
    const auto& k = *kernel_;
    const auto& fp = k.fp;
    return std::exp(fp.log_scale_density(x) - 2 * fp.log_phi(x)) * std::abs(k.net_tail_hi);
}

double StoppingProblem::threshold_value(double x, double threshold) const {
    if (x <= threshold) return model_.exit_payoff(firm_, x);
    if (!kernel_) {
        DeterministicPath path(model_, firm_);
        const auto leg = path.travel(x, threshold);
        return leg.discounted_flow + leg.discount * model_.exit_payoff(firm_, threshold);
    }
    const auto& fp = kernel_->fp;
    return expected_profit(x) +
           (model_.exit_payoff(firm_, threshold) - expected_profit(threshold)) *
               std::exp(fp.log_phi(x) - fp.log_phi(threshold));
}

double StoppingProblem::threshold_value_slope(double x, double threshold) const {
    if (x < threshold) return model_.firm(firm_).exit.d1(x);
    if (!kernel_) fail(ErrorKind::Mode, "value slope needs sigma > 0");
    const auto& fp = kernel_->fp;
    return expected_profit_slope(x) + beta(threshold) * fp.dphi(x);
}

ThresholdSolution StoppingProblem::solve() const {
    if (!std::isfinite(break_even_)) fail(ErrorKind::Assumption, break_even_error_);
    auto self = std::make_shared<const StoppingProblem>(*this);
    ThresholdSolution out;
    out.firm = firm_;
    out.break_even = break_even_;
    out.problem = self;
    if (!kernel_) {
        // deterministic, monotone decreasing state: no option value, so the
        // firm leaves as soon as flow drops below the exit flow
        out.theta = break_even_;
        return out;
    }
    const auto& s = model_.diffusion();
    auto bp = [this](double x) { return beta_prime(x); };
    const double hi = break_even_;
    const double f_hi = bp(hi);
    double lo = s.window().lo;
    double f_lo = bp(lo);
    // beta' must be positive at the left end; otherwise the optimum lies
    // below the window or the window is too tight to see it
    for (int k = 0; k < 40 && !(f_lo > 0); ++k) {
        lo = s.from_grid(0.5 * (s.to_grid(lo) + s.to_grid(hi)));
        if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) break;
        f_lo = bp(lo);
    }
    if (!(f_lo > 0)) {
        const auto w = s.window();
        std::ostringstream os;
        os << "firm " << firm_ << ": beta' is not positive anywhere left of x_c = " << hi
           << "; widen the window below " << w.lo << " (e.g. to "
           << s.from_grid(s.to_grid(w.lo) - 2 * (s.to_grid(w.hi) - s.to_grid(w.lo))) << ")";
        fail(ErrorKind::Truncation, os.str());
    }
    if (!(f_hi < 0)) {
        std::ostringstream os;
        os << "firm " << firm_ << ": beta'(x_c) = " << f_hi << " is not negative";
        fail(ErrorKind::Solver, os.str());
    }
    out.bracket_scale = std::abs(bp(s.from_grid(0.5 * (s.to_grid(lo) + s.to_grid(hi)))));
    const auto root = numerics::find_root(bp, lo, hi, f_lo, f_hi);
    out.theta = root.x;
    out.iterations = root.iterations;
    out.beta_at_theta = beta(out.theta);
    out.beta_prime_at_theta = bp(out.theta);
    const auto& fp = kernel_->fp;
    const double l = model_.exit_payoff(firm_, out.theta);
    out.value_matching_residual = expected_profit(out.theta) + out.beta_at_theta * fp.phi(out.theta) - l;
    out.smooth_pasting_residual = expected_profit_slope(out.theta) + out.beta_at_theta * fp.dphi(out.theta) -
                                  model_.firm(firm_).exit.d1(out.theta);
    out.tail_bound = beta_prime_tail(out.theta);
    return out;
}

double ThresholdSolution::value(double x) const {
    if (!problem) fail(ErrorKind::Domain, "threshold solution has no attached problem");
    return problem->threshold_value(x, theta);
}

double ThresholdSolution::value_slope(double x) const {
    if (!problem) fail(ErrorKind::Domain, "threshold solution has no attached problem");
    return problem->threshold_value_slope(x, theta);
}

double expected_profit_R(const GameModel& model, double x, FirmId firm) {
    return StoppingProblem(model, firm).expected_profit(x);
}

double beta(const GameModel& model, FirmId firm, double x) {
    return StoppingProblem(model, firm).beta(x);
}

double beta_prime(const GameModel& model, FirmId firm, double x) {
    return StoppingProblem(model, firm).beta_prime(x);
}

ThresholdSolution optimal_threshold(const GameModel& model, FirmId firm) {
    return StoppingProblem(model, firm).solve();
}

double single_player_value(const GameModel& model, FirmId firm, double x) {
    return optimal_threshold(model, firm).value(x);
}

}  // namespace attrition
