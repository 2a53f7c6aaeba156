#include "commands.hpp"

#include "attrition/attrition.hpp"
#include "attrition_io/config.hpp"
#include "attrition_io/report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace attrition::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

struct Settings {
    std::string model_path;
    std::string out_dir = "runs";
    std::uint64_t seed = 1;
    int paths = 10000;
    int grid = 4001;
    double dt = 1e-2;
    double tol = 1e-3;
    bool deterministic = false;
    bool hetero = false;

    bool certify = false;
    std::optional<double> x0;
    std::optional<double> q1;
    int curve_points = 400;

    std::string profile = "weak";
    bool bridge = false;
    bool antithetic = false;
    bool paths_csv = false;

    std::string param = "l2";
    double from = 0, to = 0;
    int steps = 11;
};

int code_for(ErrorKind k) {
    switch (k) {
    case ErrorKind::Config:
    case ErrorKind::Domain:
    case ErrorKind::Mode: return usage;
    case ErrorKind::Assumption: return validation;
    case ErrorKind::Inconsistency: return certification;
    case ErrorKind::Truncation:
    case ErrorKind::Solver:
    case ErrorKind::Oracle:
    case ErrorKind::Estimation: return solver;
    }
    return solver;
}

// <out>/<command>-<UTC timestamp>, with a numeric suffix when taken
fs::path make_run_dir(const Settings& s, const std::string& command) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream stamp;
    stamp << command << '-' << std::put_time(&tm, "%Y%m%d-%H%M%S");
    fs::path dir = fs::path(s.out_dir) / stamp.str();
    for (int k = 2; fs::exists(dir); ++k) dir = fs::path(s.out_dir) / (stamp.str() + "-" + std::to_string(k));
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Config, "cannot create run directory '" + dir.string() + "': " + ec.message());
    return dir;
}

GameModel load(const Settings& s) {
    return io::load_model(s.model_path, {s.deterministic, s.hetero});
}

Json header(const Settings& s, const std::string& command, const GameModel& m) {
    Json j;
    j["schema"] = io::report_schema;
    j["command"] = command;
    j["model_path"] = s.model_path;
    j["model"] = io::model_to_json(m);
    return j;
}

EquilibriumOptions equilibrium_options(const Settings& s) {
    EquilibriumOptions o;
    o.oracle_states = s.grid;
    o.deviation_tol = s.tol;
    o.certify = s.certify;
    o.q1 = s.q1;
    return o;
}

int cmd_validate(const Settings& s, std::ostream& out) {
    const auto m = load(s);
    const auto rep = validate(m);
    const auto dir = make_run_dir(s, "validate");
    auto doc = header(s, "validate", m);
    doc["validation"] = io::to_json(rep);
    io::write_json((dir / "report.json").string(), doc);
    for (const auto& c : rep.checks)
        out << std::left << std::setw(28) << c.name << ' ' << to_string(c.status) << "  (margin " << c.worst_value
            << " at x = " << c.worst_x << ")\n";
    out << (rep.passed() ? "valid" : "INVALID") << "; report in " << dir.string() << '\n';
    return rep.passed() ? ok : validation;
}

int cmd_solve(const Settings& s, std::ostream& out) {
    const auto vm = ValidatedModel::check(load(s));
    const auto& m = vm.model();
    const auto tp = solve_thresholds(m);
    const auto dir = make_run_dir(s, "solve");
    auto doc = header(s, "solve", m);
    doc["thresholds"] = {{"firm1", io::to_json(tp.of(1))}, {"firm2", io::to_json(tp.of(2))}};
    doc["curves"] = {{"file", "curves.csv"}, {"points", s.curve_points + 1}};
    io::write_json((dir / "report.json").string(), doc);
    io::write_curves_csv((dir / "curves.csv").string(), m, tp, s.curve_points);
    out << std::setprecision(10) << "theta1* = " << tp.of(1).theta << "\ntheta2* = " << tp.of(2).theta
        << "\nreport in " << dir.string() << '\n';
    return ok;
}

int cmd_equilibria(const Settings& s, std::ostream& out) {
    const auto vm = ValidatedModel::check(load(s));
    const auto& m = vm.model();
    const auto opt = equilibrium_options(s);
    const auto rep = analyze_equilibria(vm, opt, s.x0);
    const auto dir = make_run_dir(s, "equilibria");
    auto doc = header(s, "equilibria", m);
    doc["equilibria"] = io::to_json(rep, opt);
    if (rep.mixed) {
        io::write_hazards_csv((dir / "hazards.csv").string(), m.diffusion(), rep.mixed->profile, rep.mixed->theta, 400);
        doc["hazards_file"] = "hazards.csv";
    } else if (rep.deterministic) {
        io::write_hazards_csv((dir / "hazards.csv").string(), m.diffusion(), rep.deterministic->profile,
                              rep.deterministic->theta_low, 400);
        doc["hazards_file"] = "hazards.csv";
    }
    io::write_json((dir / "report.json").string(), doc);

    out << std::setprecision(8) << "class: " << rep.classification() << "\ntheta_low = " << rep.thresholds.theta_low()
        << " (firm " << rep.thresholds.low << "), theta_high = " << rep.thresholds.theta_high() << " (firm "
        << rep.thresholds.high << ")\n";
    if (rep.kappa) out << "kappa = " << rep.kappa->kappa << '\n';
    if (rep.pure_strong) out << "strong-exits profile: " << rep.pure_strong->method << '\n';
    else if (rep.pure_weak) out << "strong-exits profile: absent\n";
    if (rep.nonexistence) out << "no mixed MPE: " << rep.nonexistence->reason << '\n';
    if (rep.deterministic) {
        const auto& d = *rep.deterministic;
        out << "q1 = " << d.check.q1 << (d.check.feasible ? " feasible" : " infeasible");
        if (d.feasible_interval) out << "; feasible q1 in [" << (*d.feasible_interval)[0] << ", " << (*d.feasible_interval)[1] << "]";
        out << '\n';
    }
    for (const auto& n : rep.notes) out << "note: " << n << '\n';
    out << "report in " << dir.string() << '\n';

    bool certified = true;
    if (rep.pure_strong && rep.pure_strong->oracle && !rep.pure_strong->oracle->passed) certified = false;
    if (!certified) out << "strong-exits oracle certificate FAILED\n";
    return certified ? ok : certification;
}

StrategyProfile simulation_profile(const Settings& s, const ValidatedModel& vm, Json& info) {
    const auto& m = vm.model();
    const EquilibriumOptions opt = equilibrium_options(s);
    if (s.profile == "weak") return pure_mpe_weak_exits(vm, opt).profile;
    if (s.profile == "strong") {
        auto eq = pure_mpe_strong_exits(vm, opt);
        if (!eq) fail(ErrorKind::Mode, "no strong-exits profile for this model");
        return eq->profile;
    }
    if (s.profile == "mixed") {
        auto a = mixed_mpe_analysis(vm, opt);
        if (auto* mx = std::get_if<MixedEquilibrium>(&a)) return mx->profile;
        fail(ErrorKind::Mode, "no mixed profile: the exit payoffs differ (try --profile forced-mixed)");
    }
    if (s.profile == "forced-mixed") {
        // indifference hazards up to the low threshold, whatever the exit payoffs
        const auto tp = solve_thresholds(m);
        StrategyProfile p;
        for (FirmId i : {1, 2}) p.of(i) = Strategy::mixed(indifference_hazard(m, rival(i), tp.theta_low()));
        p.label = "forced-mixed";
        info["support_hi"] = tp.theta_low();
        return p;
    }
    if (s.profile == "deterministic") {
        const auto rep = analyze_equilibria(vm, opt);
        if (!rep.deterministic) fail(ErrorKind::Mode, "the deterministic profile needs --deterministic");
        info["q1"] = rep.deterministic->check.q1;
        return rep.deterministic->profile;
    }
    fail(ErrorKind::Config, "unknown profile '" + s.profile + "' (weak, strong, mixed, forced-mixed, deterministic)");
}

int cmd_simulate(const Settings& s, std::ostream& out) {
    const auto vm = ValidatedModel::check(load(s));
    const auto& m = vm.model();
    if (!s.x0) fail(ErrorKind::Config, "simulate needs --x0");
    Json info;
    const auto profile = simulation_profile(s, vm, info);
    SimConfig cfg;
    cfg.n_paths = s.paths;
    cfg.dt = s.dt;
    cfg.seed = s.seed;
    cfg.x0 = *s.x0;
    cfg.antithetic = s.antithetic;
    cfg.brownian_bridge = s.bridge;
    const auto outcomes = play_game(m, profile, cfg);
    const auto summary = estimate_values(outcomes, cfg);

    const auto dir = make_run_dir(s, "simulate");
    auto doc = header(s, "simulate", m);
    doc["simulation"] = io::to_json(cfg);
    doc["simulation"]["horizon_used"] = cfg.horizon_for(m);
    doc["profile"] = io::to_json(profile);
    if (!info.empty()) doc["profile_info"] = info;
    doc["summary"] = io::to_json(summary);

    // analytic comparison where a closed form exists
    Json cmp = Json::array();
    auto compare = [&](FirmId i, double value, const std::string& what) {
        const auto& v = summary.value[static_cast<std::size_t>(i - 1)];
        const double z = v.se > 0 ? (v.mean - value) / v.se : 0.0;
        cmp.push_back({{"firm", i}, {"reference", what}, {"value", io::number(value)}, {"z", io::number(z)}});
        out << "firm " << i << ": " << v.mean << " +- " << v.se << " vs " << what << ' ' << value << " (z = " << z
            << ")\n";
    };
    if ((s.profile == "weak" || s.profile == "strong") && !m.deterministic()) {
        const FirmId exiting = profile.of(1).exit_threshold ? 1 : 2;
        const double theta = *profile.of(exiting).exit_threshold;
        if (cfg.x0 > theta) {
            const StoppingProblem stayer(m, rival(exiting));
            compare(rival(exiting), waiting_value(stayer, cfg.x0, theta, m.winner(rival(exiting), theta)),
                    "waiting value");
            compare(exiting, StoppingProblem(m, exiting).threshold_value(cfg.x0, theta), "solo value");
        }
    } else if ((s.profile == "mixed" || s.profile == "forced-mixed" || s.profile == "deterministic") &&
               cfg.x0 <= profile.of(1).hazard.support_hi()) {
        // on the hazard support both firms are indifferent, so each value is its exit
        // payoff, except that an atom at or above x0 fires at time zero
        for (FirmId i : {1, 2}) {
            double stay = 1;
            for (const auto& a : profile.of(rival(i)).atoms)
                if (cfg.x0 <= a.level) stay *= 1 - a.probability;
            if (stay == 1) compare(i, m.exit_payoff(i, cfg.x0), "exit payoff");
            else compare(i, (1 - stay) * m.winner(i, cfg.x0) + stay * m.exit_payoff(i, cfg.x0), "atom-weighted payoff");
        }
    }
    if (cmp.empty()) {
        for (FirmId i : {1, 2}) {
            const auto& v = summary.value[static_cast<std::size_t>(i - 1)];
            out << "firm " << i << ": " << v.mean << " +- " << v.se << '\n';
        }
    }
    doc["comparison"] = cmp;
    if (s.paths_csv) {
        io::write_outcomes_csv((dir / "outcomes.csv").string(), outcomes);
        doc["outcomes_file"] = "outcomes.csv";
    }
    io::write_json((dir / "report.json").string(), doc);
    for (const auto& w : summary.warnings) out << "warning: " << w << '\n';
    out << "report in " << dir.string() << '\n';
    return ok;
}

int cmd_sweep(const Settings& s, std::ostream& out) {
    const auto base = load(s);
    if (base.heterogeneous()) fail(ErrorKind::Mode, "sweep varies l1 or l2 of a standard model");
    if (s.param != "l1" && s.param != "l2") fail(ErrorKind::Config, "--param must be l1 or l2");
    if (s.steps < 1) fail(ErrorKind::Config, "--steps must be at least 1");
    const auto opt = equilibrium_options(s);
    const auto dir = make_run_dir(s, "sweep");
    std::ofstream csv(dir / "sweep.csv");
    if (!csv) fail(ErrorKind::Config, "cannot write sweep.csv");
    csv << std::setprecision(17);
    csv << "param,value,l1,l2,theta1,theta2,gap,kappa,strong,class\n";
    int invalid = 0;
    for (int k = 0; k < s.steps; ++k) {
        const double v = s.steps == 1 ? s.from : s.from + (s.to - s.from) * k / (s.steps - 1);
        const double l1 = s.param == "l1" ? v : base.l(1);
        const double l2 = s.param == "l2" ? v : base.l(2);
        csv << s.param << ',' << v << ',' << l1 << ',' << l2 << ',';
        try {
            // the base window is kept so rows differ only in the swept payoff
            const auto vm = ValidatedModel::check(base.with_exit_payoffs(l1, l2));
            const auto rep = analyze_equilibria(vm, opt);
            csv << rep.thresholds.of(1).theta << ',' << rep.thresholds.of(2).theta << ',' << rep.thresholds.gap()
                << ',';
            if (rep.kappa) csv << (std::isinf(rep.kappa->kappa) ? std::string("inf") : [&] {
                std::ostringstream os;
                os << std::setprecision(17) << rep.kappa->kappa;
                return os.str();
            }());
            csv << ',' << (rep.pure_strong ? rep.pure_strong->method : std::string(rep.kappa ? "absent" : "")) << ','
                << rep.classification() << '\n';
        } catch (const Error& e) {
            ++invalid;
            csv << ",,,,,invalid\n";
            out << "row " << k << " (" << s.param << " = " << v << "): " << e.what() << '\n';
        }
    }
    csv.close();
    auto doc = header(s, "sweep", base);
    doc["sweep"] = {{"param", s.param}, {"from", s.from}, {"to", s.to}, {"steps", s.steps}, {"invalid_rows", invalid},
                    {"file", "sweep.csv"}};
    io::write_json((dir / "report.json").string(), doc);
    out << s.steps << " rows written to " << (dir / "sweep.csv").string() << '\n';
    return ok;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Settings s;
    CLI::App app{"Two-player wars of attrition over one-dimensional diffusions"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--model", s.model_path, "model document (JSON)")->required()->check(CLI::ExistingFile);
    app.add_option("--out", s.out_dir, "directory for run folders")->capture_default_str();
    app.add_option("--seed", s.seed, "random seed")->capture_default_str();
    app.add_option("--paths", s.paths, "Monte Carlo paths")->check(CLI::Range(2, 100000000))->capture_default_str();
    app.add_option("--grid", s.grid, "oracle grid states")->check(CLI::Range(200, 200001))->capture_default_str();
    app.add_option("--dt", s.dt, "simulation time step")->check(CLI::Range(1e-6, 1.0))->capture_default_str();
    app.add_option("--tol", s.tol, "oracle deviation tolerance, times max(1, |l|)")
        ->check(CLI::Range(1e-12, 1.0))
        ->capture_default_str();
    app.add_flag("--deterministic", s.deterministic, "treat sigma as identically zero");
    app.add_flag("--hetero", s.hetero, "per-firm primitives (heterogeneous mode)");

    auto* validate_cmd = app.add_subcommand("validate", "check the model assumptions");
    auto* solve_cmd = app.add_subcommand("solve", "single-firm exit thresholds and value curves");
    solve_cmd->add_option("--curve-points", s.curve_points, "curve resolution")->check(CLI::Range(2, 1000000));
    auto* eq_cmd = app.add_subcommand("equilibria", "pure and mixed Markov perfect equilibria");
    eq_cmd->add_flag("--certify", s.certify, "certify pure profiles with the DP oracle");
    eq_cmd->add_option("--x0", s.x0, "initial state, for scope notes");
    eq_cmd->add_option("--q1", s.q1, "deterministic mode: atom probability to verify")->check(CLI::Range(0.0, 0.999999));
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo play of a profile");
    sim_cmd->add_option("--x0", s.x0, "initial state")->required();
    sim_cmd->add_option("--profile", s.profile, "weak, strong, mixed, forced-mixed or deterministic")
        ->capture_default_str();
    sim_cmd->add_flag("--bridge", s.bridge, "Brownian-bridge crossing checks between steps");
    sim_cmd->add_flag("--antithetic", s.antithetic, "antithetic path pairs");
    sim_cmd->add_flag("--paths-csv", s.paths_csv, "write one CSV row per path");
    auto* sweep_cmd = app.add_subcommand("sweep", "equilibrium class over an exit-payoff ladder");
    sweep_cmd->add_option("--param", s.param, "l1 or l2")->capture_default_str();
    sweep_cmd->add_option("--from", s.from, "first value")->required();
    sweep_cmd->add_option("--to", s.to, "last value")->required();
    sweep_cmd->add_option("--steps", s.steps, "number of rows")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, e2;
        const int rc = app.exit(e, o, e2);
        out << o.str();
        err << e2.str();
        return rc == 0 ? ok : usage;
    }

    try {
        if (*validate_cmd) return cmd_validate(s, out);
        if (*solve_cmd) return cmd_solve(s, out);
        if (*eq_cmd) return cmd_equilibria(s, out);
        if (*sim_cmd) return cmd_simulate(s, out);
        if (*sweep_cmd) return cmd_sweep(s, out);
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return solver;
    }
    return usage;
}

}  // namespace attrition::cli
