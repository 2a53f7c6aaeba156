#include "attrition_io/report.hpp"

#include "attrition/error.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

namespace attrition::io {

namespace {

Json window_json(const Window& w) { return Json::array({number(w.lo), number(w.hi)}); }

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Config, "cannot write '" + path + "'");
    out << std::setprecision(17);
    return out;
}

Json certification_json(const OracleCertification& c) {
    return {{"states", c.states},
            {"spacing", number(c.spacing)},
            {"deviation_gain", {number(c.deviation_gain[0]), number(c.deviation_gain[1])}},
            {"tolerance", {number(c.tolerance[0]), number(c.tolerance[1])}},
            {"argmax_x", {number(c.argmax_x[0]), number(c.argmax_x[1])}},
            {"bellman_residual", number(c.bellman_residual)},
            {"passed", c.passed}};
}

}  // namespace

Json number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

Json to_json(const ValidationReport& rep) {
    Json checks = Json::array();
    for (const auto& c : rep.checks) {
        Json j{{"name", c.name}, {"status", to_string(c.status)}, {"worst_x", number(c.worst_x)},
               {"worst_margin", number(c.worst_value)}};
        if (!c.detail.empty()) j["detail"] = c.detail;
        checks.push_back(j);
    }
    Json be = Json::array();
    for (const auto& b : rep.break_even) be.push_back(b ? number(*b) : Json(nullptr));
    return {{"passed", rep.passed()}, {"grid_size", rep.grid_size}, {"window", window_json(rep.window)},
            {"break_even", be}, {"checks", checks}};
}

Json to_json(const ThresholdSolution& s) {
    return {{"firm", s.firm},
            {"theta", number(s.theta)},
            {"break_even", number(s.break_even)},
            {"beta_at_theta", number(s.beta_at_theta)},
            {"beta_prime_at_theta", number(s.beta_prime_at_theta)},
            {"bracket_scale", number(s.bracket_scale)},
            {"value_matching_residual", number(s.value_matching_residual)},
            {"smooth_pasting_residual", number(s.smooth_pasting_residual)},
            {"tail_bound", number(s.tail_bound)},
            {"iterations", s.iterations}};
}

Json to_json(const Strategy& s) {
    Json j{{"description", s.describe()}};
    j["exit_threshold"] = s.exit_threshold ? number(*s.exit_threshold) : Json(nullptr);
    if (s.hazard.active()) {
        j["hazard"] = {{"rate", s.hazard.description()},
                       {"support", {number(s.hazard.support_lo()), number(s.hazard.support_hi())}}};
    } else {
        j["hazard"] = nullptr;
    }
    Json atoms = Json::array();
    for (const auto& a : s.atoms) atoms.push_back({{"level", number(a.level)}, {"probability", number(a.probability)}});
    j["atoms"] = atoms;
    return j;
}

Json to_json(const StrategyProfile& p) {
    return {{"label", p.label}, {"firm1", to_json(p.of(1))}, {"firm2", to_json(p.of(2))}};
}

Json to_json(const PureEquilibrium& eq) {
    Json j{{"profile", to_json(eq.profile)},
           {"exiting_firm", eq.exiting_firm},
           {"theta", number(eq.theta)},
           {"method", eq.method},
           {"analytic_margin", number(eq.analytic_margin)},
           {"margin_at", number(eq.margin_at)},
           {"checked_states", eq.checked_states}};
    j["oracle"] = eq.oracle ? certification_json(*eq.oracle) : Json(nullptr);
    return j;
}

Json to_json(const KappaResult& k) {
    return {{"kappa", number(k.kappa)}, {"root", number(k.root)},     {"w_floor", number(k.w_floor)},
            {"w_floor_at", number(k.w_floor_at)}, {"grid", k.grid}, {"target_beta", number(k.target)}};
}

Json to_json(const MixedEquilibrium& m) {
    Json j{{"profile", to_json(m.profile)}, {"theta", number(m.theta)}};
    if (!m.note.empty()) j["note"] = m.note;
    return j;
}

Json to_json(const NonexistenceCertificate& c) {
    Json j{{"low_firm", c.low},
           {"high_firm", c.high},
           {"theta_low", number(c.theta_low)},
           {"theta_high", number(c.theta_high)},
           {"gap", number(c.gap)},
           {"break_even_low", number(c.break_even_low)},
           {"witness", window_json(c.witness)},
           {"min_surplus", number(c.min_surplus)},
           {"max_required_probability", number(c.max_required_probability)},
           {"pasting_defect", number(c.pasting_defect)},
           {"reason", c.reason}};
    if (c.negative_rate_interval) {
        j["negative_rate_interval"] = window_json(*c.negative_rate_interval);
        j["most_negative_rate"] = number(c.most_negative_rate);
    } else {
        j["negative_rate_interval"] = nullptr;
    }
    return j;
}

Json to_json(const DeterministicReport& d) {
    const auto& c = d.check;
    Json j{{"low_firm", d.low},
           {"high_firm", d.high},
           {"theta_low", number(d.theta_low)},
           {"theta_high", number(d.theta_high)},
           {"profile", to_json(d.profile)},
           {"check",
            {{"q1", number(c.q1)},
             {"feasible", c.feasible},
             {"no_atom", c.no_atom},
             {"waiting_margin", number(c.waiting_margin)},
             {"waiting_margin_at", number(c.waiting_margin_at)},
             {"low_waiting_margin", number(c.low_waiting_margin)},
             {"indifference_residual", number(c.indifference_residual)},
             {"min_rate", number(c.min_rate)}}},
           {"scanned", d.scanned},
           {"feasible_count", d.feasible_count},
           {"contiguous", d.contiguous},
           {"q_lower_bound", number(d.q_lower_bound)}};
    j["feasible_interval"] = d.feasible_interval
                                 ? Json::array({number((*d.feasible_interval)[0]), number((*d.feasible_interval)[1])})
                                 : Json(nullptr);
    return j;
}

Json to_json(const EquilibriumReport& r, const EquilibriumOptions& opt) {
    Json j;
    j["classification"] = r.classification();
    j["thresholds"] = {{"low_firm", r.thresholds.low},
                       {"high_firm", r.thresholds.high},
                       {"gap", number(r.thresholds.gap())},
                       {"firm1", to_json(r.thresholds.of(1))},
                       {"firm2", to_json(r.thresholds.of(2))}};
    j["pure_weak"] = r.pure_weak ? to_json(*r.pure_weak) : Json(nullptr);
    j["pure_strong"] = r.pure_strong ? to_json(*r.pure_strong) : Json(nullptr);
    j["kappa"] = r.kappa ? to_json(*r.kappa) : Json(nullptr);
    j["mixed"] = r.mixed ? to_json(*r.mixed) : Json(nullptr);
    j["nonexistence"] = r.nonexistence ? to_json(*r.nonexistence) : Json(nullptr);
    j["deterministic"] = r.deterministic ? to_json(*r.deterministic) : Json(nullptr);
    j["x0"] = r.x0 ? number(*r.x0) : Json(nullptr);
    j["notes"] = r.notes;
    j["options"] = {{"oracle_states", opt.oracle_states},       {"certify", opt.certify},
                    {"homogeneity_tol", number(opt.homogeneity_tol)}, {"certificate_grid", opt.certificate_grid},
                    {"kappa_grid", opt.kappa_grid},             {"deviation_tol", number(opt.deviation_tol)},
                    {"q_step", number(opt.q_step)}};
    return j;
}

Json to_json(const SimConfig& c) {
    return {{"n_paths", c.n_paths},
            {"dt", number(c.dt)},
            {"horizon", c.horizon ? number(*c.horizon) : Json(nullptr)},
            {"seed", c.seed},
            {"x0", number(c.x0)},
            {"antithetic", c.antithetic},
            {"brownian_bridge", c.brownian_bridge},
            {"censor", c.censor == CensorPolicy::Bound ? "bound" : "exclude"}};
}

Json to_json(const OutcomeSummary& s) {
    Json values = Json::array();
    for (const auto& v : s.value) values.push_back({{"mean", number(v.mean)}, {"se", number(v.se)}, {"n", v.n}});
    return {{"values", values},
            {"outcomes", s.outcomes},
            {"wins", {{"firm1", s.wins1}, {"firm2", s.wins2}, {"tie", s.ties}, {"censored", s.censored}}},
            {"tie_coin_firm1", s.tie_coin1},
            {"left_window", s.left_window},
            {"mean_exit_time", number(s.mean_exit_time)},
            {"warnings", s.warnings}};
}

void write_json(const std::string& path, const Json& doc) {
    auto out = open_out(path);
    out << doc.dump(2) << '\n';
}

void write_curves_csv(const std::string& path, const GameModel& m, const ThresholdPair& tp, int n) {
    auto out = open_out(path);
    const auto& s = m.diffusion();
    const double y0 = s.to_grid(s.window().lo), y1 = s.to_grid(s.window().hi);
    if (m.deterministic()) {
        out << "x,V1,V2\n";
        for (int k = 0; k <= n; ++k) {
            const double x = s.from_grid(y0 + (y1 - y0) * k / n);
            out << x << ',' << tp.of(1).value(x) << ',' << tp.of(2).value(x) << '\n';
        }
        return;
    }
    const StoppingProblem p1(m, 1), p2(m, 2);
    out << "x,R1,R2,beta1,beta2,beta_prime1,beta_prime2,V1,V2\n";
    for (int k = 0; k <= n; ++k) {
        const double x = s.from_grid(y0 + (y1 - y0) * k / n);
        out << x << ',' << p1.expected_profit(x) << ',' << p2.expected_profit(x) << ',' << p1.beta(x) << ','
            << p2.beta(x) << ',' << p1.beta_prime(x) << ',' << p2.beta_prime(x) << ',' << tp.of(1).value(x) << ','
            << tp.of(2).value(x) << '\n';
    }
}

void write_hazards_csv(const std::string& path, const DiffusionSpec& s, const StrategyProfile& prof, double hi,
                       int n) {
    auto out = open_out(path);
    out << "x,lambda1,lambda2\n";
    const double y0 = s.to_grid(s.window().lo), y1 = s.to_grid(hi);
    for (int k = 0; k <= n; ++k) {
        const double x = s.from_grid(y0 + (y1 - y0) * k / n);
        out << x << ',' << prof.of(1).hazard(x) << ',' << prof.of(2).hazard(x) << '\n';
    }
}

void write_outcomes_csv(const std::string& path, const std::vector<GameOutcome>& outcomes) {
    auto out = open_out(path);
    out << "path,winner,exit_time,exit_state,payoff1,payoff2\n";
    for (std::size_t p = 0; p < outcomes.size(); ++p) {
        const auto& o = outcomes[p];
        out << p << ',' << to_string(o.winner) << ',' << o.exit_time << ',' << o.exit_state << ',' << o.payoff[0]
            << ',' << o.payoff[1] << '\n';
    }
}

}  // namespace attrition::io
