#include "attrition/oracle.hpp"

#include "attrition/error.hpp"
#include "attrition/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace attrition {

std::size_t GridModel::index_at_or_below(double level) const {
    auto it = std::upper_bound(x.begin(), x.end(), level);
    if (it == x.begin()) return npos;
    return static_cast<std::size_t>(it - x.begin()) - 1;
}

double GridModel::interpolate(const std::vector<double>& values, double at) const {
    const double y = coordinate == Coordinate::Log ? std::log(at) : at;
    double s = (y - y0) / spacing;
    s = std::clamp(s, 0.0, static_cast<double>(x.size() - 1));
    auto j = static_cast<std::size_t>(std::floor(s));
    if (j >= x.size() - 1) return values.back();
    const double t = s - static_cast<double>(j);
    return (1 - t) * values[j] + t * values[j + 1];
}

GridModel build_grid(const GameModel& model, int n_states) {
    if (n_states < 200) fail(ErrorKind::Domain, "the oracle needs at least 200 grid states");
    const auto& s = model.diffusion();
    const auto& w = s.window();
    GridModel g;
    g.coordinate = s.coordinate();
    g.y0 = s.to_grid(w.lo);
    const auto n = static_cast<std::size_t>(n_states);
    g.spacing = (s.to_grid(w.hi) - g.y0) / static_cast<double>(n - 1);
    g.x.resize(n);
    std::vector<double> mu_y(n), var_y(n);
    double rate_bound = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double x = s.from_grid(g.grid_coordinate(j));
        g.x[j] = x;
        const double mu = s.mu(x), sg = s.sigma(x);
        if (g.coordinate == Coordinate::Log) {
            // Ito: d log X = (mu/x - sigma^2 / (2 x^2)) dt + (sigma / x) dB
            mu_y[j] = mu / x - 0.5 * sg * sg / (x * x);
            var_y[j] = sg * sg / (x * x);
        } else {
            mu_y[j] = mu;
            var_y[j] = sg * sg;
        }
        if (!std::isfinite(mu_y[j]) || !std::isfinite(var_y[j])) {
            std::ostringstream os;
            os << "non-finite chain coefficients at x = " << x;
            fail(ErrorKind::Oracle, os.str());
        }
        rate_bound = std::max(rate_bound, var_y[j] + std::abs(mu_y[j]) * g.spacing);
    }
    if (!(rate_bound > 0)) fail(ErrorKind::Oracle, "chain has neither drift nor volatility");
    const double h = g.spacing;
    g.dt = h * h / rate_bound;
    g.up.resize(n);
    g.down.resize(n);
    g.stay.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double m = mu_y[j], v = var_y[j];
        g.up[j] = (0.5 * v + h * std::max(m, 0.0)) * g.dt / (h * h);
        g.down[j] = (0.5 * v + h * std::max(-m, 0.0)) * g.dt / (h * h);
        g.stay[j] = 1 - g.up[j] - g.down[j];
        if (g.up[j] < 0 || g.down[j] < 0 || g.stay[j] < -1e-15) {
            std::ostringstream os;
            os << "negative transition probability at x = " << g.x[j] << "; refine the grid";
            fail(ErrorKind::Oracle, os.str());
        }
        g.stay[j] = std::max(0.0, g.stay[j]);
        const double mean = (g.up[j] - g.down[j]) * h;
        const double var = (g.up[j] + g.down[j]) * h * h - mean * mean;
        g.max_mean_error = std::max(g.max_mean_error, std::abs(mean - m * g.dt));
        g.max_variance_excess = std::max(g.max_variance_excess, std::abs(var - v * g.dt) / (g.dt * h));
    }
    return g;
}

namespace {

// One-step data for a firm facing a rival that leaves with probability q:
// exit now pays S, continuing pays a + b * E[V(next)].
struct StepData {
    std::vector<double> S, a, b;
};

double step_probability(const Strategy& s, double x, double dt) {
    if (s.in_exit_region(x)) return 1.0;
    const double h = s.hazard(x);
    return h > 0 ? -std::expm1(-h * dt) : 0.0;
}

StepData step_data(const GridModel& g, const GameModel& m, FirmId i, const Strategy& opponent) {
    const std::size_t n = g.size();
    StepData d;
    d.S.resize(n);
    d.a.resize(n);
    d.b.resize(n);
    const double r = m.r(i);
    const double disc = std::exp(-r * g.dt);
    const double flow_weight = -std::expm1(-r * g.dt) / r;
    for (std::size_t j = 0; j < n; ++j) {
        const double x = g.x[j];
        const double q = step_probability(opponent, x, g.dt);
        const double l = m.exit_payoff(i, x), w = m.winner(i, x);
        d.S[j] = q * m.tie_payoff(i, x) + (1 - q) * l;
        d.a[j] = q * w + (1 - q) * m.flow(i, x) * flow_weight;
        d.b[j] = (1 - q) * disc;
    }
    return d;
}

double expected_next(const GridModel& g, const std::vector<double>& v, std::size_t j, std::size_t first,
                     double left) {
    const std::size_t n = g.size();
    // above the top state the value is continued linearly
    const double up = j + 1 < n ? v[j + 1] : 2 * v[j] - v[j - 1];
    double down;
    if (j == first) down = first == 0 ? v[j] : left;
    else down = v[j - 1];
    return g.up[j] * up + g.down[j] * down + g.stay[j] * v[j];
}

// V_j = p_j S_j + (1 - p_j)(a_j + b_j E[V]) for j >= first; below `first`
// the value is the fixed `left` (ignored when first == 0, where the chain reflects).
// The top state sees a ghost value 2 V_{n-1} - V_{n-2}.
std::vector<double> evaluate(const GridModel& g, const StepData& d, const std::vector<double>& p,
                             std::size_t first, double left) {
    const std::size_t n = g.size();
    const std::size_t k = n - first;
    std::vector<double> lo(k), di(k), hi(k), rhs(k);
    for (std::size_t t = 0; t < k; ++t) {
        const std::size_t j = first + t;
        const double c = (1 - p[j]) * d.b[j];
        double up = g.up[j], down = g.down[j], stay = g.stay[j];
        if (j == n - 1) {
            stay += 2 * up;
            down -= up;
            up = 0;
        }
        rhs[t] = p[j] * d.S[j] + (1 - p[j]) * d.a[j];
        if (t == 0) {
            if (first == 0) stay += down;
            else rhs[t] += c * down * left;
            down = 0;
        }
        lo[t] = -c * down;
        di[t] = 1 - c * stay;
        hi[t] = -c * up;
    }
    numerics::solve_tridiagonal(lo, di, hi, rhs);
    std::vector<double> v(n, left);
    std::copy(rhs.begin(), rhs.end(), v.begin() + static_cast<std::ptrdiff_t>(first));
    return v;
}

struct Solved {
    std::vector<double> value;
    std::vector<char> exit;
    int iterations = 0;
    double residual = 0;
};

double bellman_residual(const GridModel& g, const StepData& d, const std::vector<double>& v,
                        std::size_t first, double left) {
    double res = 0;
    for (std::size_t j = first; j < g.size(); ++j) {
        const double c = d.a[j] + d.b[j] * expected_next(g, v, j, first, left);
        res = std::max(res, std::abs(std::max(d.S[j], c) - v[j]));
    }
    return res;
}

// exit only when strictly better; ties go to continuing
bool prefers_exit(double stop, double cont) {
    return stop > cont + 1e-12 * std::max(1.0, std::abs(stop));
}

Solved solve_optimal(const GridModel& g, const StepData& d, std::size_t first, double left,
                     const OracleOptions& opt, double scale) {
    const std::size_t n = g.size();
    Solved out;
    out.exit.assign(n, 0);
    const double tol = opt.tolerance * std::max(1.0, scale);
    if (opt.method == OracleMethod::PolicyIteration) {
        std::vector<double> p(n, 0.0);
        for (int it = 1;; ++it) {
            out.value = evaluate(g, d, p, first, left);
            bool changed = false;
            for (std::size_t j = first; j < n; ++j) {
                const double c = d.a[j] + d.b[j] * expected_next(g, out.value, j, first, left);
                const double np = prefers_exit(d.S[j], c) ? 1.0 : 0.0;
                if (np != p[j]) {
                    p[j] = np;
                    changed = true;
                }
            }
            out.iterations = it;
            if (!changed) break;
            if (it >= opt.max_iterations) fail(ErrorKind::Oracle, "policy iteration did not converge");
        }
    } else {
        out.value.assign(n, left);
        for (std::size_t j = first; j < n; ++j) out.value[j] = d.S[j];
        double bmax = 0;
        for (std::size_t j = first; j < n; ++j) bmax = std::max(bmax, d.b[j]);
        std::vector<double> next = out.value;
        for (int it = 1;; ++it) {
            double change = 0;
            for (std::size_t j = first; j < n; ++j) {
                const double c = d.a[j] + d.b[j] * expected_next(g, out.value, j, first, left);
                next[j] = std::max(d.S[j], c);
                change = std::max(change, std::abs(next[j] - out.value[j]));
            }
            out.value.swap(next);
            out.iterations = it;
            if (change * bmax <= tol * (1 - bmax)) break;
            if (it >= opt.max_iterations) {
                std::ostringstream os;
                os << "value iteration did not converge in " << it << " sweeps (last change " << change << ")";
                fail(ErrorKind::Oracle, os.str());
            }
        }
    }
    for (std::size_t j = first; j < n; ++j) {
        const double c = d.a[j] + d.b[j] * expected_next(g, out.value, j, first, left);
        out.exit[j] = prefers_exit(d.S[j], c) ? 1 : 0;
    }
    out.residual = bellman_residual(g, d, out.value, first, left);
    // round-off in the solve grows with the largest value on the grid
    double vmax = 0;
    for (double v : out.value) vmax = std::max(vmax, std::abs(v));
    const double residual_tol = opt.tolerance * std::max({1.0, scale, vmax});
    if (out.residual > residual_tol) {
        std::ostringstream os;
        os << "Bellman residual " << out.residual << " above tolerance " << residual_tol;
        fail(ErrorKind::Oracle, os.str());
    }
    return out;
}

std::vector<double> threshold_policy(std::size_t n, std::size_t last_exit) {
    std::vector<double> p(n, 0.0);
    for (std::size_t j = 0; j <= last_exit && j < n; ++j) p[j] = 1.0;
    return p;
}

double scale_of(const GameModel& m, FirmId i) {
    const auto& w = m.diffusion().window();
    return std::max(std::abs(m.exit_payoff(i, w.lo)), std::abs(m.exit_payoff(i, w.hi)));
}

}  // namespace

SinglePlayerOracle dp_single_player(const GridModel& g, const GameModel& m, FirmId i,
                                    const OracleOptions& opt) {
    const auto data = step_data(g, m, i, Strategy::never_exit());
    auto solved = solve_optimal(g, data, 0, 0.0, opt, scale_of(m, i));
    SinglePlayerOracle out;
    out.value = std::move(solved.value);
    out.exit = std::move(solved.exit);
    out.iterations = solved.iterations;
    out.bellman_residual = solved.residual;

    const std::size_t n = g.size();
    std::size_t last = GridModel::npos;
    bool lower_set = true;
    for (std::size_t j = 0; j < n; ++j) {
        if (out.exit[j]) {
            if (last != GridModel::npos && last + 1 != j) lower_set = false;
            if (last == GridModel::npos && j != 0) lower_set = false;
            last = j;
        }
    }
    if (last == GridModel::npos) return out;
    out.threshold = g.x[last];
    if (!lower_set || last < 1 || last + 4 >= n) return out;

    const std::size_t ref = last + 3;
    const double va = evaluate(g, data, threshold_policy(n, last - 1), 0, 0.0)[ref];
    const double vb = evaluate(g, data, threshold_policy(n, last), 0, 0.0)[ref];
    const double vc = evaluate(g, data, threshold_policy(n, last + 1), 0, 0.0)[ref];
    const double curvature = va - 2 * vb + vc;
    if (curvature < 0) {
        const double offset = 0.5 * (va - vc) / curvature;
        if (std::abs(offset) <= 1.5) {
            const double y = g.grid_coordinate(last) + offset * g.spacing;
            out.refined_threshold = g.coordinate == Coordinate::Log ? std::exp(y) : y;
        }
    }
    return out;
}

BestResponse dp_best_response(const GridModel& g, const GameModel& m, FirmId i, const Strategy& opponent,
                              const Strategy& candidate, const OracleOptions& opt) {
    opponent.check();
    candidate.check();
    if (opponent.atoms.size() + candidate.atoms.size() > 1)
        fail(ErrorKind::Oracle, "the oracle handles at most one atom across both strategies");
    const std::size_t n = g.size();
    const double scale = scale_of(m, i);

    Strategy opp_after = opponent;
    opp_after.atoms.clear();
    const auto data = step_data(g, m, i, opp_after);
    auto br1 = solve_optimal(g, data, 0, 0.0, opt, scale);

    std::vector<double> p1(n);
    for (std::size_t j = 0; j < n; ++j) p1[j] = step_probability(candidate, g.x[j], g.dt);
    auto cand1 = evaluate(g, data, p1, 0, 0.0);

    BestResponse out;
    out.iterations = br1.iterations;
    out.bellman_residual = br1.residual;

    const Atom* atom = nullptr;
    bool own_atom = false;
    if (!opponent.atoms.empty()) atom = &opponent.atoms.front();
    if (!candidate.atoms.empty()) {
        atom = &candidate.atoms.front();
        own_atom = true;
    }
    const std::size_t jc = atom ? g.index_at_or_below(atom->level) : GridModel::npos;

    if (!atom || jc == GridModel::npos) {
        out.value = std::move(br1.value);
        out.exit = std::move(br1.exit);
        out.candidate_value = std::move(cand1);
        out.deviation_gain = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            const double gain = out.value[j] - out.candidate_value[j];
            if (gain > out.deviation_gain) {
                out.deviation_gain = gain;
                out.argmax_x = g.x[j];
            }
        }
        return out;
    }

    // Atom nodes: at or below the trigger level before the atom has fired.
    const double pa = atom->probability;
    std::vector<double> best0(n), cand0(n);
    for (std::size_t j = 0; j <= jc; ++j) {
        const double x = g.x[j];
        if (own_atom) {
            // the best response ignores the candidate's atom
            best0[j] = br1.value[j];
            cand0[j] = pa * data.S[j] + (1 - pa) * cand1[j];
        } else {
            const double leave = pa * m.tie_payoff(i, x) + (1 - pa) * m.exit_payoff(i, x);
            const double stay = pa * m.winner(i, x) + (1 - pa) * br1.value[j];
            best0[j] = std::max(leave, stay);
            const double stay_c = pa * m.winner(i, x) + (1 - pa) * cand1[j];
            cand0[j] = candidate.in_exit_region(x) ? leave : stay_c;
        }
    }
    if (jc + 1 < n) {
        const auto upper = solve_optimal(g, data, jc + 1, best0[jc], opt, scale);
        const auto cand_upper = evaluate(g, data, p1, jc + 1, cand0[jc]);
        for (std::size_t j = jc + 1; j < n; ++j) {
            best0[j] = upper.value[j];
            cand0[j] = cand_upper[j];
        }
        out.iterations += upper.iterations;
        out.bellman_residual = std::max(out.bellman_residual, upper.residual);
        out.exit = upper.exit;
        for (std::size_t j = 0; j <= jc; ++j) out.exit[j] = br1.exit[j];
    } else {
        out.exit = br1.exit;
    }
    out.deviation_gain = -std::numeric_limits<double>::infinity();
    for (const auto* pair : {&best0, &br1.value}) {
        const auto& cand = pair == &best0 ? cand0 : cand1;
        for (std::size_t j = 0; j < n; ++j) {
            const double gain = (*pair)[j] - cand[j];
            if (gain > out.deviation_gain) {
                out.deviation_gain = gain;
                out.argmax_x = g.x[j];
            }
        }
    }
    out.value = std::move(best0);
    out.value_after_atom = std::move(br1.value);
    out.candidate_value = std::move(cand0);
    return out;
}

}  // namespace attrition
