#include "attrition/deterministic.hpp"

#include "attrition/error.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <sstream>

namespace attrition {

namespace odeint = boost::numeric::odeint;

namespace {

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N>
auto stepper() {
    return odeint::make_controlled(1e-12, 1e-12, odeint::runge_kutta_dopri5<State<N>>());
}

}  // namespace

DeterministicPath::DeterministicPath(const GameModel& model, FirmId firm) : model_(model), firm_(firm) {
    if (!model_.deterministic()) fail(ErrorKind::Mode, "deterministic paths need sigma identically zero");
}

DeterministicPath::Leg DeterministicPath::travel(double x, double level) const {
    if (level > x) fail(ErrorKind::Domain, "the state only moves down; level must not exceed x");
    Leg leg;
    if (level == x) return leg;
    const auto& s = model_.diffusion();
    const double r = model_.r(firm_);
    // integrate in the state: dt/dy = 1/mu, d(flow)/dy = e^{-r t} pi / mu
    State<2> z{0.0, 0.0};
    auto rhs = [&](const State<2>& u, State<2>& du, double y) {
        const double mu = s.mu(y);
        if (!(mu < 0)) {
            std::ostringstream os;
            os << "drift " << mu << " at x = " << y << " is not negative";
            fail(ErrorKind::Domain, os.str());
        }
        du[0] = 1 / mu;
        du[1] = std::exp(-r * u[0]) * model_.flow(firm_, y) / mu;
    };
    odeint::integrate_adaptive(stepper<2>(), rhs, z, x, level, -(x - level) / 64);
    leg.time = z[0];
    leg.discounted_flow = z[1];
    leg.discount = std::exp(-r * leg.time);
    return leg;
}

DeterministicPath::HazardLeg DeterministicPath::run_with_hazard(
    double x, const std::function<double(double)>& rival_hazard, double horizon) const {
    const auto& s = model_.diffusion();
    const double r = model_.r(firm_);
    // state, integrated hazard, accumulated payoff
    State<3> z{x, 0.0, 0.0};
    auto rhs = [&](const State<3>& u, State<3>& du, double t) {
        const double y = u[0];
        const double h = rival_hazard(y);
        du[0] = s.mu(y);
        du[1] = h;
        du[2] = std::exp(-r * t - u[1]) * (model_.flow(firm_, y) + h * model_.winner(firm_, y));
    };
    odeint::integrate_adaptive(stepper<3>(), rhs, z, 0.0, horizon, horizon / 256);
    return {z[2], std::exp(-r * horizon - z[1]), z[0]};
}

double DeterministicPath::state_after(double x, double t) const {
    const auto& s = model_.diffusion();
    State<1> z{x};
    auto rhs = [&](const State<1>& u, State<1>& du, double) { du[0] = s.mu(u[0]); };
    if (t <= 0) return x;
    odeint::integrate_adaptive(stepper<1>(), rhs, z, 0.0, t, t / 64);
    return z[0];
}

}  // namespace attrition
