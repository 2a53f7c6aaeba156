#include "attrition/diffusion.hpp"

#include "attrition/error.hpp"
#include "attrition/numerics.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace attrition {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// roots of a g^2 + b g - r = 0 with a > 0, r > 0: one negative, one positive
std::pair<double, double> quadratic_roots(double a, double b, double r) {
    const double disc = std::sqrt(b * b + 4 * a * r);
    // numerically stable pair
    const double q = -0.5 * (b + std::copysign(disc, b));
    double g1 = q / a, g2 = -r / q;
    if (g1 > g2) std::swap(g1, g2);
    return {g1, g2};
}

}  // namespace

const char* to_string(DiffusionKind kind) noexcept {
    switch (kind) {
        case DiffusionKind::Arithmetic: return "arithmetic";
        case DiffusionKind::Geometric: return "geometric";
        case DiffusionKind::OrnsteinUhlenbeck: return "ornstein-uhlenbeck";
        case DiffusionKind::Custom: return "custom";
    }
    return "unknown";
}

DiffusionSpec DiffusionSpec::arithmetic(double drift, double volatility) {
    if (!(volatility > 0) || !std::isfinite(drift))
        fail(ErrorKind::Domain, "arithmetic diffusion needs finite drift and volatility > 0");
    DiffusionSpec s;
    s.kind_ = DiffusionKind::Arithmetic;
    s.drift_ = ScalarFunction::constant(drift);
    s.volatility_ = ScalarFunction::constant(volatility);
    s.p_[0] = drift;
    s.p_[1] = volatility;
    s.state_lo_ = -kInf;
    s.state_hi_ = kInf;
    return s;
}

DiffusionSpec DiffusionSpec::geometric(double drift, double volatility) {
    if (!(volatility > 0) || !std::isfinite(drift))
        fail(ErrorKind::Domain, "geometric diffusion needs finite drift and volatility > 0");
    DiffusionSpec s;
    s.kind_ = DiffusionKind::Geometric;
    s.drift_ = ScalarFunction::affine(0, drift);
    s.volatility_ = ScalarFunction::affine(0, volatility);
    s.p_[0] = drift;
    s.p_[1] = volatility;
    s.state_lo_ = 0;
    s.state_hi_ = kInf;
    s.coordinate_ = Coordinate::Log;
    return s;
}

DiffusionSpec DiffusionSpec::ornstein_uhlenbeck(double speed, double mean, double volatility) {
    if (!(volatility > 0) || !(speed > 0) || !std::isfinite(mean))
        fail(ErrorKind::Domain, "Ornstein-Uhlenbeck needs speed > 0 and volatility > 0");
    DiffusionSpec s;
    s.kind_ = DiffusionKind::OrnsteinUhlenbeck;
    s.drift_ = ScalarFunction::affine(speed * mean, -speed);
    s.volatility_ = ScalarFunction::constant(volatility);
    s.p_[0] = speed;
    s.p_[1] = volatility;
    s.p_[2] = mean;
    s.state_lo_ = -kInf;
    s.state_hi_ = kInf;
    return s;
}

DiffusionSpec DiffusionSpec::custom(ScalarFunction drift, ScalarFunction volatility, double state_lo,
                                    double state_hi, std::optional<Coordinate> coordinate) {
    if (!(state_lo < state_hi)) fail(ErrorKind::Domain, "custom diffusion needs state_lo < state_hi");
    DiffusionSpec s;
    s.kind_ = DiffusionKind::Custom;
    s.drift_ = std::move(drift);
    s.volatility_ = std::move(volatility);
    s.state_lo_ = state_lo;
    s.state_hi_ = state_hi;
    s.coordinate_ = coordinate.value_or(state_lo >= 0 ? Coordinate::Log : Coordinate::Linear);
    if (s.coordinate_ == Coordinate::Log && state_lo < 0)
        fail(ErrorKind::Domain, "log grid coordinate needs a non-negative state space");
    return s;
}

void DiffusionSpec::check_window(const Window& w) const {
    if (!(w.lo < w.hi) || !std::isfinite(w.lo) || !std::isfinite(w.hi)) {
        std::ostringstream os;
        os << "truncation window [" << w.lo << ", " << w.hi << "] is not a finite interval";
        fail(ErrorKind::Domain, os.str());
    }
    if (!(w.lo > state_lo_ && w.hi < state_hi_)) {
        std::ostringstream os;
        os << "truncation window [" << w.lo << ", " << w.hi << "] leaves the state space ("
           << state_lo_ << ", " << state_hi_ << ")";
        fail(ErrorKind::Domain, os.str());
    }
}

DiffusionSpec DiffusionSpec::with_window(Window w) const {
    check_window(w);
    DiffusionSpec s = *this;
    s.window_ = w;
    return s;
}

DiffusionSpec DiffusionSpec::without_noise() const {
    DiffusionSpec s = *this;
    s.deterministic_ = true;
    return s;
}

const Window& DiffusionSpec::window() const {
    if (!window_) fail(ErrorKind::Domain, "diffusion has no truncation window");
    return *window_;
}

double DiffusionSpec::x_ref() const {
    const auto& w = window();
    return from_grid(0.5 * (to_grid(w.lo) + to_grid(w.hi)));
}

double DiffusionSpec::to_grid(double x) const {
    return coordinate_ == Coordinate::Log ? std::log(x) : x;
}

double DiffusionSpec::from_grid(double y) const {
    return coordinate_ == Coordinate::Log ? std::exp(y) : y;
}

namespace {

double log_scale_density_of(const DiffusionSpec& spec, double x) {
    if (spec.deterministic()) fail(ErrorKind::Mode, "scale density needs sigma > 0");
    const double xr = spec.x_ref();
    switch (spec.kind()) {
        case DiffusionKind::Arithmetic: {
            const double m = spec.drift_parameter(), s = spec.volatility_parameter();
            return -2 * m * (x - xr) / (s * s);
        }
        case DiffusionKind::Geometric: {
            const double m = spec.drift_parameter(), s = spec.volatility_parameter();
            return -2 * m / (s * s) * std::log(x / xr);
        }
        case DiffusionKind::OrnsteinUhlenbeck: {
            const double k = spec.speed_parameter(), s = spec.volatility_parameter();
            const double c = spec.mean_parameter();
            return -2 * k / (s * s) * (c * (x - xr) - 0.5 * (x * x - xr * xr));
        }
        case DiffusionKind::Custom: {
            auto integrand = [&](double y) {
                const double sg = spec.sigma(y);
                return 2 * spec.mu(y) / (sg * sg);
            };
            return -numerics::integrate(integrand, xr, x).value;
        }
    }
    return 0;
}

}  // namespace

double scale_density(const DiffusionSpec& spec, double x) {
    return std::exp(log_scale_density_of(spec, x));
}

double speed_density(const DiffusionSpec& spec, double x) {
    const double sg = spec.sigma(x);
    return 2 / (sg * sg * scale_density(spec, x));
}

Window default_window(const DiffusionSpec& spec, double r, double center, double weight) {
    if (!(r > 0)) fail(ErrorKind::Domain, "discount rate must be positive");
    if (!spec.in_state_space(center)) fail(ErrorKind::Domain, "window center outside state space");
    const double target = -std::log(weight);
    if (spec.kind() == DiffusionKind::Arithmetic || spec.kind() == DiffusionKind::Geometric) {
        const double m = spec.drift_parameter(), s = spec.volatility_parameter();
        const double a = 0.5 * s * s;
        const double b = spec.kind() == DiffusionKind::Arithmetic ? m : m - a;
        const auto [gm, gp] = quadratic_roots(a, b, r);
        const double yc = spec.to_grid(center);
        return {spec.from_grid(yc + target / gm), spec.from_grid(yc + target / gp)};
    }
    // March outward with frozen-coefficient exponents until the accumulated
    // log-weight reaches the target or the state boundary gets close.
    auto march = [&](double dir) {
        const double yc = spec.to_grid(center);
        double scale = 1.0;
        {
            const double sg = spec.sigma(center);
            const auto [gm, gp] = quadratic_roots(0.5 * sg * sg, spec.mu(center), r);
            scale = 1.0 / std::max(std::abs(gm), std::abs(gp));
            if (spec.coordinate() == Coordinate::Log) scale /= std::max(center, 1e-300);
        }
        const double h = std::min(scale, 1.0) * 1e-2;
        double acc = 0, y = yc;
        for (int it = 0; it < 10'000'000 && acc < target; ++it) {
            const double yn = y + dir * h;
            const double x0 = spec.from_grid(y), x1 = spec.from_grid(yn);
            if (!spec.in_state_space(x1)) break;
            const double xm = spec.from_grid(0.5 * (y + yn));
            const double sg = spec.sigma(xm);
            if (!(sg > 0)) fail(ErrorKind::Domain, "sigma vanishes inside the state space");
            const auto [gm, gp] = quadratic_roots(0.5 * sg * sg, spec.mu(xm), r);
            acc += (dir > 0 ? gp : -gm) * std::abs(x1 - x0);
            y = yn;
        }
        return spec.from_grid(y);
    };
    Window w{march(-1.0), march(1.0)};
    // keep a sliver away from finite state boundaries
    if (std::isfinite(spec.state_lo()) && !(w.lo > spec.state_lo())) w.lo = spec.state_lo() + 1e-12;
    if (std::isfinite(spec.state_hi()) && !(w.hi < spec.state_hi())) w.hi = spec.state_hi() - 1e-12;
    return w;
}

// ---------------------------------------------------------------------------
// Numeric fundamental solutions.
//
// Work with the logarithmic derivative u = f'/f, which satisfies the Riccati
// equation u' = 2 (r - mu u) / sigma^2 - u^2. The decreasing solution is
// integrated leftwards from the top of the window and the increasing one
// rightwards from the bottom; in those directions the Riccati flow contracts
// onto the wanted branch, so the start value (the frozen-coefficient root)
// only matters near the far edge. Values are stored on a grid uniform in the
// grid coordinate and interpolated with quintic Hermite pieces.

struct FundamentalPair::Tables {
    numerics::QuinticTable u_minus, log_minus, u_plus, log_plus, log_scale;
    double log_scale_at_ref = 0;
    double log_minus_at_ref = 0, log_plus_at_ref = 0;
};

namespace {

using State = std::array<double, 3>;

struct RiccatiParts {
    double du, d2u;  // derivatives with respect to the grid coordinate
    double ds, d2s;  // same for log scale density
};

// x(y) Jacobian dx/dy and its derivative
std::pair<double, double> jacobian(const DiffusionSpec& s, double x) {
    if (s.coordinate() == Coordinate::Log) return {x, x};
    return {1.0, 0.0};
}

RiccatiParts riccati_parts(const DiffusionSpec& s, double r, double x, double u) {
    const double mu = s.mu(x), sg = s.volatility()(x);
    const double dmu = s.drift().d1(x), dsg = s.volatility().d1(x);
    const double s2 = sg * sg;
    const double F = 2 * (r - mu * u) / s2 - u * u;
    const double Fu = -2 * mu / s2 - 2 * u;
    const double Fx = -2 * dmu * u / s2 - 4 * (r - mu * u) * dsg / (s2 * sg);
    const auto [J, dJ] = jacobian(s, x);
    RiccatiParts p;
    p.du = J * F;
    p.d2u = dJ * F + J * (Fx * J + Fu * p.du);
    const double h = -2 * mu / s2;
    const double dh = -2 * dmu / s2 + 4 * mu * dsg / (s2 * sg);
    p.ds = J * h;
    p.d2s = dJ * h + J * J * dh;
    return p;
}

}  // namespace

FundamentalPair::FundamentalPair(DiffusionSpec spec, double r) : spec_(std::move(spec)), r_(r) {}

bool FundamentalPair::closed_form() const { return !tables_; }

FundamentalPair fundamental_solutions(const DiffusionSpec& spec, double r) {
    if (spec.deterministic()) fail(ErrorKind::Mode, "fundamental solutions need sigma > 0");
    if (!(r > 0)) fail(ErrorKind::Domain, "discount rate must be positive");
    FundamentalPair fp(spec, r);
    const double xr = spec.x_ref();
    if (spec.kind() == DiffusionKind::Arithmetic) {
        const double m = spec.drift_parameter(), s = spec.volatility_parameter();
        std::tie(fp.g_minus_, fp.g_plus_) = quadratic_roots(0.5 * s * s, m, r);
        fp.wronskian_ = fp.g_plus_ - fp.g_minus_;
        return fp;
    }
    if (spec.kind() == DiffusionKind::Geometric) {
        const double m = spec.drift_parameter(), s = spec.volatility_parameter();
        std::tie(fp.g_minus_, fp.g_plus_) = quadratic_roots(0.5 * s * s, m - 0.5 * s * s, r);
        fp.wronskian_ = (fp.g_plus_ - fp.g_minus_) / xr;
        return fp;
    }

    namespace ode = boost::numeric::odeint;
    const auto& w = spec.window();
    const double y0 = spec.to_grid(w.lo), y1 = spec.to_grid(w.hi);
    constexpr std::size_t nodes = 4001;
    const double h = (y1 - y0) / static_cast<double>(nodes - 1);
    auto x_at = [&](std::size_t k) { return spec.from_grid(y0 + h * static_cast<double>(k)); };
    for (std::size_t k = 0; k < nodes; k += 50) {
        const double sg = spec.sigma(x_at(k));
        if (!(sg > 0) || !std::isfinite(sg) || !std::isfinite(spec.mu(x_at(k)))) {
            std::ostringstream os;
            os << "diffusion coefficients degenerate at x = " << x_at(k);
            fail(ErrorKind::Domain, os.str());
        }
    }

    // state: u, log f, log scale density; independent variable: grid coordinate
    auto system = [&](const State& st, State& d, double y) {
        const double x = spec.from_grid(y);
        const double mu = spec.mu(x), sg = spec.sigma(x);
        const double J = spec.coordinate() == Coordinate::Log ? x : 1.0;
        d[0] = J * (2 * (r - mu * st[0]) / (sg * sg) - st[0] * st[0]);
        d[1] = J * st[0];
        d[2] = -J * 2 * mu / (sg * sg);
    };
    auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-13, 1e-13);

    auto sweep = [&](bool leftwards, std::vector<double>& u, std::vector<double>& du,
                     std::vector<double>& d2u, std::vector<double>& lg, std::vector<double>& sc,
                     std::vector<double>& dsc, std::vector<double>& d2sc) {
        u.assign(nodes, 0);
        du.assign(nodes, 0);
        d2u.assign(nodes, 0);
        lg.assign(nodes, 0);
        sc.assign(nodes, 0);
        dsc.assign(nodes, 0);
        d2sc.assign(nodes, 0);
        const std::size_t start = leftwards ? nodes - 1 : 0;
        const double xs = x_at(start);
        const double sg = spec.sigma(xs);
        const auto roots = quadratic_roots(0.5 * sg * sg, spec.mu(xs), r);
        State st{leftwards ? roots.first : roots.second, 0.0, 0.0};
        for (std::size_t n = 0; n < nodes; ++n) {
            const std::size_t k = leftwards ? nodes - 1 - n : n;
            if (n > 0) {
                const double ya = y0 + h * static_cast<double>(leftwards ? k + 1 : k - 1);
                const double yb = y0 + h * static_cast<double>(k);
                ode::integrate_adaptive(stepper, system, st, ya, yb, (yb - ya) / 4);
                if (!std::isfinite(st[0]))
                    fail(ErrorKind::Solver, "fundamental-solution ODE diverged");
            }
            const double x = x_at(k);
            const auto parts = riccati_parts(spec, r, x, st[0]);
            u[k] = st[0];
            du[k] = parts.du;
            d2u[k] = parts.d2u;
            lg[k] = st[1];
            sc[k] = st[2];
            dsc[k] = parts.ds;
            d2sc[k] = parts.d2s;
        }
    };

    std::vector<double> um, dum, d2um, lm, s_unused, ds_unused, d2s_unused;
    sweep(true, um, dum, d2um, lm, s_unused, ds_unused, d2s_unused);
    std::vector<double> up, dup, d2up, lp, sc, dsc, d2sc;
    sweep(false, up, dup, d2up, lp, sc, dsc, d2sc);

    auto tables = std::make_shared<FundamentalPair::Tables>();
    auto log_table = [&](const std::vector<double>& lg, const std::vector<double>& u,
                         const std::vector<double>& du) {
        std::vector<double> d1(nodes), d2(nodes);
        for (std::size_t k = 0; k < nodes; ++k) {
            const auto [J, dJ] = jacobian(spec, x_at(k));
            d1[k] = J * u[k];
            d2[k] = dJ * u[k] + J * du[k];
        }
        return numerics::QuinticTable(y0, h, lg, d1, d2);
    };
    tables->u_minus = numerics::QuinticTable(y0, h, um, dum, d2um);
    tables->u_plus = numerics::QuinticTable(y0, h, up, dup, d2up);
    tables->log_minus = log_table(lm, um, dum);
    tables->log_plus = log_table(lp, up, dup);
    tables->log_scale = numerics::QuinticTable(y0, h, sc, dsc, d2sc);
    const double yr = spec.to_grid(xr);
    tables->log_minus_at_ref = tables->log_minus.value(yr);
    tables->log_plus_at_ref = tables->log_plus.value(yr);
    tables->log_scale_at_ref = tables->log_scale.value(yr);
    fp.wronskian_ = tables->u_plus.value(yr) - tables->u_minus.value(yr);
    fp.tables_ = std::move(tables);
    return fp;
}

double FundamentalPair::log_phi(double x) const {
    if (tables_) return tables_->log_minus.value(spec_.to_grid(x)) - tables_->log_minus_at_ref;
    const double xr = spec_.x_ref();
    if (spec_.kind() == DiffusionKind::Geometric) return g_minus_ * std::log(x / xr);
    return g_minus_ * (x - xr);
}

double FundamentalPair::log_psi(double x) const {
    if (tables_) return tables_->log_plus.value(spec_.to_grid(x)) - tables_->log_plus_at_ref;
    const double xr = spec_.x_ref();
    if (spec_.kind() == DiffusionKind::Geometric) return g_plus_ * std::log(x / xr);
    return g_plus_ * (x - xr);
}

double FundamentalPair::phi_slope(double x) const {
    if (tables_) return tables_->u_minus.value(spec_.to_grid(x));
    return spec_.kind() == DiffusionKind::Geometric ? g_minus_ / x : g_minus_;
}

double FundamentalPair::psi_slope(double x) const {
    if (tables_) return tables_->u_plus.value(spec_.to_grid(x));
    return spec_.kind() == DiffusionKind::Geometric ? g_plus_ / x : g_plus_;
}

namespace {

// f''/f from the log-derivative u and its x-derivative
double curvature(double u, double du_dx) { return du_dx + u * u; }

}  // namespace

double FundamentalPair::phi(double x) const { return std::exp(log_phi(x)); }
double FundamentalPair::psi(double x) const { return std::exp(log_psi(x)); }
double FundamentalPair::dphi(double x) const { return phi_slope(x) * phi(x); }
double FundamentalPair::dpsi(double x) const { return psi_slope(x) * psi(x); }

double FundamentalPair::d2phi(double x) const {
    const double u = phi_slope(x);
    double du;
    if (tables_) {
        du = tables_->u_minus.derivative(spec_.to_grid(x)) / jacobian(spec_, x).first;
    } else {
        du = spec_.kind() == DiffusionKind::Geometric ? -g_minus_ / (x * x) : 0.0;
    }
    return curvature(u, du) * phi(x);
}

double FundamentalPair::d2psi(double x) const {
    const double u = psi_slope(x);
    double du;
    if (tables_) {
        du = tables_->u_plus.derivative(spec_.to_grid(x)) / jacobian(spec_, x).first;
    } else {
        du = spec_.kind() == DiffusionKind::Geometric ? -g_plus_ / (x * x) : 0.0;
    }
    return curvature(u, du) * psi(x);
}

double FundamentalPair::log_scale_density(double x) const {
    if (tables_) return tables_->log_scale.value(spec_.to_grid(x)) - tables_->log_scale_at_ref;
    return log_scale_density_of(spec_, x);
}

double FundamentalPair::log_speed_density(double x) const {
    const double sg = spec_.sigma(x);
    return std::log(2 / (sg * sg)) - log_scale_density(x);
}

double sampled_lipschitz(const ScalarFunction& f, const DiffusionSpec& spec, int n) {
    const auto& w = spec.window();
    const auto ys = numerics::linspace(spec.to_grid(w.lo), spec.to_grid(w.hi), static_cast<std::size_t>(n));
    double best = 0;
    double xp = spec.from_grid(ys[0]), fp = f(xp);
    for (std::size_t i = 1; i < ys.size(); ++i) {
        const double x = spec.from_grid(ys[i]), fx = f(x);
        const double slope = std::abs(fx - fp) / (x - xp);
        if (!std::isfinite(slope)) return std::numeric_limits<double>::infinity();
        best = std::max(best, slope);
        xp = x;
        fp = fx;
    }
    return best;
}

}  // namespace attrition
