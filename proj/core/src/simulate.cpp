#include "attrition/simulate.hpp"

#include "attrition/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace attrition {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// independent stream per (seed, index, purpose)
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index, std::uint64_t purpose) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(2 * index + purpose)));
}

// Euler-Maruyama (Heun when sigma = 0) with reflection at the window edges
class Stepper {
public:
    Stepper(const DiffusionSpec& s, double dt) : s_(s), dt_(dt), sqdt_(std::sqrt(dt)), w_(s.window()) {}

    double step(double x, double z, bool& clamped) const {
        if (s_.deterministic()) {
            const double k1 = s_.mu(x);
            const double k2 = s_.mu(x + dt_ * k1);
            return keep_in_state_space(x + 0.5 * dt_ * (k1 + k2), clamped);
        }
        double nx = x + s_.mu(x) * dt_ + s_.sigma(x) * sqdt_ * z;
        if (nx < w_.lo) {
            nx = std::min(2 * w_.lo - nx, w_.hi);
            clamped = true;
        } else if (nx > w_.hi) {
            nx = std::max(2 * w_.hi - nx, w_.lo);
            clamped = true;
        }
        return nx;
    }

    double sigma(double x) const { return s_.sigma(x); }
    bool noisy() const { return !s_.deterministic(); }

private:
    double keep_in_state_space(double x, bool& clamped) const {
        const double lo = s_.state_lo(), hi = s_.state_hi();
        if (x <= lo || x >= hi) {
            clamped = true;
            return std::clamp(x, std::nextafter(lo, hi), std::nextafter(hi, lo));
        }
        return x;
    }

    const DiffusionSpec& s_;
    double dt_, sqdt_;
    Window w_;
};

// Normals for one path; antithetic partners share a stream with opposite sign.
class NormalSource {
public:
    NormalSource(const SimConfig& cfg, std::uint64_t path)
        : rng_(stream(cfg.seed, cfg.antithetic ? path / 2 : path, 0)),
          sign_(cfg.antithetic && (path % 2 == 1) ? -1.0 : 1.0) {}
    double next() { return sign_ * normal_(rng_); }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_;
    double sign_;
};

int step_count(double horizon, double dt) { return static_cast<int>(std::ceil(horizon / dt - 1e-9)); }

template <class Fn>
void parallel_for(int n, int threads, Fn fn) {
    int t = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    t = std::max(1, std::min(t, n));
    if (t == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int k = 0; k < t; ++k)
        pool.emplace_back([&, k] {
            for (int i = k; i < n; i += t) fn(i);
        });
    for (auto& th : pool) th.join();
}

// Plays one game. `next_state(x, clamped)` supplies X_{k+1}. Within a step,
// exits are timed by linear interpolation: of the state for a threshold or
// atom level crossed at the step end, of the integrated hazard for hazard
// exits, and at mid-step for crossings found by the bridge test.
template <class Next>
GameOutcome play_one(const GameModel& m, const StrategyProfile& prof, const SimConfig& cfg, double horizon,
                     std::uint64_t path, Next&& next_state) {
    auto rng = stream(cfg.seed, path, 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);

    const std::array<const Strategy*, 2> st{&prof.of(1), &prof.of(2)};
    const std::array<bool, 2> has_hazard{st[0]->hazard.active(), st[1]->hazard.active()};
    std::array<double, 2> target{expo(rng), expo(rng)};
    std::array<double, 2> cum_hazard{0, 0};
    std::array<double, 2> flow{0, 0};
    const std::array<double, 2> r{m.r(1), m.r(2)};
    std::array<std::vector<char>, 2> fired{std::vector<char>(st[0]->atoms.size(), 0),
                                           std::vector<char>(st[1]->atoms.size(), 0)};
    const double dt = cfg.dt;
    const int steps = step_count(horizon, dt);
    const std::array<double, 2> step_disc{std::exp(-r[0] * dt), std::exp(-r[1] * dt)};

    GameOutcome out;
    auto settle = [&](std::array<bool, 2> exits, double t, double x) {
        out.exit_time = t;
        out.exit_state = x;
        for (std::size_t k = 0; k < 2; ++k) {
            const FirmId i = static_cast<FirmId>(k) + 1;
            double lump;
            if (exits[0] && exits[1]) lump = m.tie_payoff(i, x);
            else if (exits[k]) lump = m.exit_payoff(i, x);
            else lump = m.winner(i, x);
            out.payoff[k] = flow[k] + std::exp(-r[k] * t) * lump;
        }
        if (exits[0] && exits[1]) {
            out.winner = Winner::Tie;
            out.tie_coin = unif(rng) < 0.5 ? 1 : 2;
        } else {
            out.winner = exits[0] ? Winner::Firm2 : Winner::Firm1;
        }
    };

    double x = cfg.x0;
    // t = 0: exit regions and atoms at the starting state
    {
        std::array<bool, 2> exits{false, false};
        for (std::size_t k = 0; k < 2; ++k) {
            const auto& s = *st[k];
            if (s.in_exit_region(x)) exits[k] = true;
            for (std::size_t a = 0; a < s.atoms.size(); ++a) {
                if (x <= s.atoms[a].level) {
                    fired[k][a] = 1;
                    if (unif(rng) < s.atoms[a].probability) exits[k] = true;
                }
            }
        }
        if (exits[0] || exits[1]) {
            settle(exits, 0.0, x);
            return out;
        }
    }

    std::array<double, 2> disc0{1, 1};
    std::array<double, 2> pi0{m.flow(1, x), m.flow(2, x)};
    std::array<double, 2> h0{has_hazard[0] ? st[0]->hazard(x) : 0.0, has_hazard[1] ? st[1]->hazard(x) : 0.0};
    std::vector<std::pair<double, bool>> seen;

    for (int step = 0; step < steps; ++step) {
        const double t0 = step * dt;
        bool clamped = false;
        const double nx = next_state(x, clamped);
        out.left_window = out.left_window || clamped;

        // one bridge draw per distinct level, so equal thresholds cross together
        seen.clear();
        const double sg = cfg.brownian_bridge ? std::max(1e-300, std::abs(m.diffusion().sigma(x))) : 0;
        auto crossing = [&](double level) -> double {  // fraction of the step, or -1
            if (nx <= level) return x <= level ? 0.0 : (x - level) / (x - nx);
            if (!cfg.brownian_bridge || x <= level) return -1;
            for (const auto& [lv, hit] : seen)
                if (lv == level) return hit ? 0.5 : -1;
            const double arg = 2 * (x - level) * (nx - level) / (sg * sg * dt);
            const bool hit = arg <= 40 && unif(rng) < std::exp(-arg);
            seen.emplace_back(level, hit);
            return hit ? 0.5 : -1;
        };

        // earliest exit per firm: (fraction of the step, state)
        std::array<double, 2> when{2, 2};
        std::array<double, 2> where{nx, nx};
        std::array<double, 2> h1{0, 0};
        for (std::size_t k = 0; k < 2; ++k) {
            const auto& s = *st[k];
            auto consider = [&](double f, double state) {
                if (f >= 0 && f < when[k]) {
                    when[k] = f;
                    where[k] = state;
                }
            };
            if (s.exit_threshold) consider(crossing(*s.exit_threshold), *s.exit_threshold);
            for (std::size_t a = 0; a < s.atoms.size(); ++a) {
                if (fired[k][a]) continue;
                const double f = crossing(s.atoms[a].level);
                if (f < 0) continue;
                fired[k][a] = 1;
                if (unif(rng) < s.atoms[a].probability) consider(f, s.atoms[a].level);
            }
            if (has_hazard[k]) {
                h1[k] = s.hazard(nx);
                const double inc = 0.5 * dt * (h0[k] + h1[k]);
                if (cum_hazard[k] + inc >= target[k] && inc > 0) {
                    const double f = (target[k] - cum_hazard[k]) / inc;
                    consider(f, x + f * (nx - x));
                }
                cum_hazard[k] += inc;
            }
        }

        const double first = std::min(when[0], when[1]);
        const bool ends = first <= 1;
        const double frac = ends ? first : 1.0;
        const double x_end = ends ? (when[0] <= when[1] ? where[0] : where[1]) : nx;
        const double t_end = t0 + frac * dt;
        for (std::size_t k = 0; k < 2; ++k) {
            const FirmId i = static_cast<FirmId>(k) + 1;
            const double pi_end = ends ? m.flow(i, x_end) : m.flow(i, nx);
            const double disc_end = ends ? std::exp(-r[k] * t_end) : disc0[k] * step_disc[k];
            flow[k] += 0.5 * frac * dt * (disc0[k] * pi0[k] + disc_end * pi_end);
            pi0[k] = pi_end;
            disc0[k] = disc_end;
        }
        if (ends) {
            settle({when[0] == first, when[1] == first}, t_end, x_end);
            return out;
        }
        h0 = h1;
        x = nx;
    }
    // horizon reached
    out.winner = Winner::Censored;
    const double tT = steps * dt;
    out.exit_time = tT;
    out.exit_state = x;
    for (std::size_t k = 0; k < 2; ++k)
        out.payoff[k] = flow[k] + std::exp(-r[k] * tT) * m.exit_payoff(static_cast<FirmId>(k) + 1, x);
    return out;
}

}  // namespace

void SimConfig::check() const {
    if (!(dt > 0)) fail(ErrorKind::Domain, "dt must be positive");
    if (n_paths < 1) fail(ErrorKind::Domain, "n_paths must be at least 1");
    if (horizon && !(*horizon > dt)) fail(ErrorKind::Domain, "horizon must exceed dt");
    if (!std::isfinite(x0)) fail(ErrorKind::Domain, "x0 must be finite");
}

double SimConfig::horizon_for(const GameModel& m) const {
    return horizon.value_or(50 / std::min(m.r(1), m.r(2)));
}

const char* to_string(Winner w) noexcept {
    switch (w) {
    case Winner::Firm1: return "firm1";
    case Winner::Firm2: return "firm2";
    case Winner::Tie: return "tie";
    case Winner::Censored: return "censored";
    }
    return "?";
}

PathSet simulate_paths(const DiffusionSpec& spec, const SimConfig& cfg, double horizon) {
    cfg.check();
    PathSet ps;
    ps.dt = cfg.dt;
    const int steps = step_count(horizon, cfg.dt);
    ps.paths.assign(static_cast<std::size_t>(cfg.n_paths), {});
    ps.left_window.assign(static_cast<std::size_t>(cfg.n_paths), 0);
    Stepper stepper(spec, cfg.dt);
    parallel_for(cfg.n_paths, cfg.threads, [&](int p) {
        NormalSource normals(cfg, static_cast<std::uint64_t>(p));
        auto& row = ps.paths[static_cast<std::size_t>(p)];
        row.resize(static_cast<std::size_t>(steps) + 1);
        row[0] = cfg.x0;
        bool clamped = false;
        for (int k = 0; k < steps; ++k) {
            const double z = stepper.noisy() ? normals.next() : 0.0;
            row[static_cast<std::size_t>(k) + 1] = stepper.step(row[static_cast<std::size_t>(k)], z, clamped);
        }
        ps.left_window[static_cast<std::size_t>(p)] = clamped;
    });
    return ps;
}

std::vector<GameOutcome> play_game(const GameModel& m, const StrategyProfile& prof, const SimConfig& cfg) {
    cfg.check();
    prof.of(1).check();
    prof.of(2).check();
    const double horizon = cfg.horizon_for(m);
    std::vector<GameOutcome> out(static_cast<std::size_t>(cfg.n_paths));
    Stepper stepper(m.diffusion(), cfg.dt);
    parallel_for(cfg.n_paths, cfg.threads, [&](int p) {
        NormalSource normals(cfg, static_cast<std::uint64_t>(p));
        auto next = [&](double x, bool& clamped) {
            const double z = stepper.noisy() ? normals.next() : 0.0;
            return stepper.step(x, z, clamped);
        };
        out[static_cast<std::size_t>(p)] = play_one(m, prof, cfg, horizon, static_cast<std::uint64_t>(p), next);
    });
    return out;
}

std::vector<GameOutcome> play_game(const PathSet& ps, const GameModel& m, const StrategyProfile& prof,
                                   const SimConfig& cfg) {
    cfg.check();
    if (ps.dt != cfg.dt) fail(ErrorKind::Domain, "path set and config disagree on dt");
    prof.of(1).check();
    prof.of(2).check();
    const int n = static_cast<int>(ps.paths.size());
    std::vector<GameOutcome> out(static_cast<std::size_t>(n));
    parallel_for(n, cfg.threads, [&](int p) {
        const auto& row = ps.paths[static_cast<std::size_t>(p)];
        if (row.empty()) fail(ErrorKind::Domain, "empty path");
        SimConfig local = cfg;
        local.x0 = row.front();
        std::size_t k = 0;
        auto next = [&](double, bool& clamped) {
            ++k;
            clamped = clamped || ps.left_window[static_cast<std::size_t>(p)];
            return row[k];
        };
        const double horizon = static_cast<double>(row.size() - 1) * cfg.dt;
        out[static_cast<std::size_t>(p)] = play_one(m, prof, local, horizon, static_cast<std::uint64_t>(p), next);
    });
    return out;
}

OutcomeSummary estimate_values(const std::vector<GameOutcome>& outcomes, const SimConfig& cfg) {
    OutcomeSummary s;
    s.outcomes = static_cast<int>(outcomes.size());
    double time_sum = 0;
    int time_n = 0;
    for (const auto& o : outcomes) {
        switch (o.winner) {
        case Winner::Firm1: ++s.wins1; break;
        case Winner::Firm2: ++s.wins2; break;
        case Winner::Tie:
            ++s.ties;
            if (o.tie_coin == 1) ++s.tie_coin1;
            break;
        case Winner::Censored: ++s.censored; break;
        }
        if (o.left_window) ++s.left_window;
        if (o.winner != Winner::Censored) {
            time_sum += o.exit_time;
            ++time_n;
        }
    }
    s.mean_exit_time = time_n > 0 ? time_sum / time_n : 0;
    const bool use_censored = cfg.censor == CensorPolicy::Bound;
    auto usable = [&](const GameOutcome& o) { return use_censored || o.winner != Winner::Censored; };

    // sampling units: single outcomes, or antithetic pair averages
    const std::size_t group = cfg.antithetic ? 2 : 1;
    for (int k = 0; k < 2; ++k) {
        std::vector<double> units;
        for (std::size_t g = 0; g < outcomes.size(); g += group) {
            double sum = 0;
            int n = 0;
            for (std::size_t j = g; j < std::min(outcomes.size(), g + group); ++j) {
                if (!usable(outcomes[j])) continue;
                sum += outcomes[j].payoff[static_cast<std::size_t>(k)];
                ++n;
            }
            if (n > 0) units.push_back(sum / n);
        }
        if (units.size() < 2) {
            std::ostringstream os;
            os << (s.censored == s.outcomes ? "all outcomes censored" : "fewer than two usable outcomes");
            fail(ErrorKind::Estimation, os.str());
        }
        double mean = 0;
        for (double u : units) mean += u;
        mean /= static_cast<double>(units.size());
        double ss = 0;
        for (double u : units) ss += (u - mean) * (u - mean);
        const double var = ss / static_cast<double>(units.size() - 1);
        s.value[static_cast<std::size_t>(k)] = {mean, std::sqrt(var / static_cast<double>(units.size())),
                                                static_cast<int>(units.size())};
    }
    if (s.censored > 0) {
        std::ostringstream os;
        os << s.censored << " of " << s.outcomes << " games reached the horizon"
           << (use_censored ? " (valued at the exit payoff there)" : " and were excluded");
        s.warnings.push_back(os.str());
    }
    if (s.left_window > 0) {
        std::ostringstream os;
        os << s.left_window << " paths were reflected at the truncation window";
        s.warnings.push_back(os.str());
    }
    return s;
}

IndifferenceDiagnostic indifference_diagnostic(const GameModel& m, const StrategyProfile& prof,
                                               const SimConfig& cfg) {
    IndifferenceDiagnostic d;
    d.x0 = cfg.x0;
    d.summary = estimate_values(play_game(m, prof, cfg), cfg);
    for (int k = 0; k < 2; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        d.exit_payoff[ku] = m.exit_payoff(k + 1, cfg.x0);
        const auto& v = d.summary.value[ku];
        const double diff = v.mean - d.exit_payoff[ku];
        d.z[ku] = v.se > 0 ? diff / v.se : (diff == 0 ? 0.0 : std::copysign(inf, diff));
    }
    return d;
}

}  // namespace attrition
