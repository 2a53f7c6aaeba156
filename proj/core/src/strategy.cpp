#include "attrition/strategy.hpp"

#include "attrition/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace attrition {

Hazard::Hazard(std::function<double(double)> rate, double support_lo, double support_hi,
               std::string description)
    : rate_(std::move(rate)), lo_(support_lo), hi_(support_hi), description_(std::move(description)) {
    if (!(support_lo < support_hi)) fail(ErrorKind::Domain, "hazard support must be a nonempty interval");
}

Hazard Hazard::constant(double rate, double support_lo, double support_hi) {
    if (!(rate >= 0)) fail(ErrorKind::Domain, "hazard rate must be nonnegative");
    std::ostringstream os;
    os << "constant(" << rate << ")";
    return Hazard([rate](double) { return rate; }, support_lo, support_hi, os.str());
}

double Hazard::operator()(double x) const {
    if (!rate_ || !(x > lo_ && x <= hi_)) return 0.0;
    return rate_(x);
}

Hazard Hazard::scaled(double k) const {
    if (!rate_) return *this;
    std::ostringstream os;
    os << k << " * " << description_;
    auto base = rate_;
    return Hazard([base, k](double x) { return k * base(x); }, lo_, hi_, os.str());
}

Strategy Strategy::never_exit() {
    Strategy s;
    s.label = "never exit";
    return s;
}

Strategy Strategy::threshold(double theta) {
    Strategy s;
    s.exit_threshold = theta;
    std::ostringstream os;
    os << "exit at or below " << theta;
    s.label = os.str();
    return s;
}

Strategy Strategy::mixed(Hazard hazard) {
    Strategy s;
    s.label = "hazard " + hazard.description();
    s.hazard = std::move(hazard);
    return s;
}

void Strategy::check() const {
    if (exit_threshold && hazard.active() && hazard.support_lo() < *exit_threshold)
        fail(ErrorKind::Domain, "exit region and hazard support overlap");
    for (const auto& a : atoms) {
        if (!(a.probability >= 0 && a.probability <= 1))
            fail(ErrorKind::Domain, "atom probability must lie in [0, 1]");
    }
}

std::string Strategy::describe() const {
    std::ostringstream os;
    bool any = false;
    if (exit_threshold) {
        os << "exit at or below " << *exit_threshold;
        any = true;
    }
    if (hazard.active()) {
        os << (any ? "; " : "") << "hazard " << hazard.description() << " on (" << hazard.support_lo() << ", "
           << hazard.support_hi() << "]";
        any = true;
    }
    for (const auto& a : atoms) {
        os << (any ? "; " : "") << "atom " << a.probability << " on first reaching " << a.level;
        any = true;
    }
    if (!any) os << "never exit";
    return os.str();
}

double candidate_exit_rate(const GameModel& m, FirmId indifferent, double x) {
    const double gap = m.winner(indifferent, x) - m.exit_payoff(indifferent, x);
    return -m.net_flow(indifferent, x) / gap;
}

Hazard indifference_hazard(const GameModel& m, FirmId indifferent, double cutoff, double scale) {
    // copy the model so the hazard outlives its caller
    auto rate = [m, indifferent, scale](double x) {
        return scale * std::max(0.0, candidate_exit_rate(m, indifferent, x));
    };
    std::ostringstream os;
    if (scale != 1.0) os << scale << " * ";
    os << "indifference(firm " << indifferent << ")";
    return Hazard(rate, -std::numeric_limits<double>::infinity(), cutoff, os.str());
}

}  // namespace attrition
