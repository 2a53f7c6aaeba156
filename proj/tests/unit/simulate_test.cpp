#include "attrition/equilibrium.hpp"
#include "attrition/error.hpp"
#include "attrition/simulate.hpp"
#include "support/reference.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace attrition;
namespace ref = attrition::testing;

namespace {

struct Moments {
    double mean = 0, var = 0;
    int n = 0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    m.n = static_cast<int>(v.size());
    for (double x : v) m.mean += x / m.n;
    for (double x : v) m.var += (x - m.mean) * (x - m.mean) / (m.n - 1);
    return m;
}

std::vector<double> terminal_increments(const PathSet& ps, double x0) {
    std::vector<double> out;
    for (const auto& p : ps.paths) out.push_back(p.back() - x0);
    return out;
}

StrategyProfile profile_of(Strategy a, Strategy b) {
    StrategyProfile p;
    p.firms = {std::move(a), std::move(b)};
    return p;
}

SimConfig config(int n, double dt, double x0, std::uint64_t seed = 7) {
    SimConfig c;
    c.n_paths = n;
    c.dt = dt;
    c.x0 = x0;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(SimulatePaths, DeterministicFlow) {
    const auto m = ref::deterministic_bench(1, 1.05);
    const auto ps = simulate_paths(m.diffusion(), config(3, 0.01, 2.0), 5.0);
    ASSERT_EQ(ps.paths.size(), 3u);
    for (const auto& p : ps.paths)
        for (std::size_t k = 0; k < p.size(); ++k) ASSERT_NEAR(p[k], 2.0 - 0.1 * 0.01 * k, 1e-12);
}

TEST(SimulatePaths, WienerMeanIsZero) {
    const auto spec = DiffusionSpec::arithmetic(0, 1).with_window({-50, 50});
    const auto ps = simulate_paths(spec, config(4000, 0.01, 0.0), 1.0);
    const auto mo = moments(terminal_increments(ps, 0.0));
    EXPECT_LE(std::abs(mo.mean), 3 * std::sqrt(mo.var / mo.n));
}

TEST(SimulatePaths, ArithmeticVariance) {
    const double s = 0.7, T = 2.0;
    const auto spec = DiffusionSpec::arithmetic(-0.1, s).with_window({-50, 50});
    const auto ps = simulate_paths(spec, config(4000, 0.01, 1.0), T);
    const auto mo = moments(terminal_increments(ps, 1.0));
    const double se = s * s * T * std::sqrt(2.0 / (mo.n - 1));
    EXPECT_NEAR(mo.var, s * s * T, 3 * se);
    EXPECT_NEAR(mo.mean, -0.1 * T, 3 * std::sqrt(mo.var / mo.n));
}

TEST(SimulatePaths, SeedReproducesPathsAcrossThreadCounts) {
    const auto spec = ref::AbmBench{}.model().diffusion();
    auto c1 = config(64, 0.01, 0.0, 99);
    c1.threads = 1;
    auto c4 = c1;
    c4.threads = 4;
    const auto a = simulate_paths(spec, c1, 3.0), b = simulate_paths(spec, c4, 3.0);
    EXPECT_EQ(a.paths, b.paths);
    auto c5 = c1;
    c5.seed = 100;
    EXPECT_NE(simulate_paths(spec, c5, 3.0).paths, a.paths);
}

TEST(PlayGame, WeakProfileFirmOneAlwaysWins) {
    ref::AbmBench b;
    const auto m = b.model();
    const double th2 = b.threshold(2);
    const auto prof = profile_of(Strategy::never_exit(), Strategy::threshold(th2));
    const auto out = play_game(m, prof, config(500, 0.01, 0.5));
    for (const auto& o : out) {
        if (o.winner == Winner::Censored) continue;
        ASSERT_EQ(o.winner, Winner::Firm1);
        EXPECT_LE(o.exit_state, th2 + 1e-12);
        EXPECT_TRUE(std::isfinite(o.payoff[0]) && std::isfinite(o.payoff[1]));
    }
}

TEST(PlayGame, WeakProfileValuesMatchTheClosedForms) {
    ref::AbmBench b;
    const auto m = b.model();
    const double th2 = b.threshold(2), x0 = 0.5;
    auto cfg = config(20000, 0.01, x0, 3);
    cfg.brownian_bridge = true;
    const auto out = play_game(m, profile_of(Strategy::never_exit(), Strategy::threshold(th2)), cfg);
    const auto est = estimate_values(out, cfg);
    const double v1 = b.stop_value(x0, th2, b.winner(th2));
    const double v2 = b.stop_value(x0, th2, b.l2);
    EXPECT_NEAR(est.value[0].mean, v1, 3 * est.value[0].se);
    EXPECT_NEAR(est.value[1].mean, v2, 3 * est.value[1].se);
}

TEST(PlayGame, ConstantHazardExitTimesAreExponential) {
    const double c = 0.8;
    const auto m = ref::AbmBench{}.model();
    const auto prof = profile_of(Strategy::mixed(Hazard::constant(c, -1e9, 1e9)), Strategy::never_exit());
    const int n = 100000;
    const auto out = play_game(m, prof, config(n, 0.01, 0.0, 11));
    std::vector<double> t;
    for (const auto& o : out) {
        ASSERT_EQ(o.winner, Winner::Firm2);
        t.push_back(o.exit_time);
    }
    std::sort(t.begin(), t.end());
    double d = 0;
    for (int k = 0; k < n; ++k) {
        const double f = -std::expm1(-c * t[k]);
        d = std::max({d, std::abs(f - static_cast<double>(k) / n), std::abs(f - static_cast<double>(k + 1) / n)});
    }
    // 1% critical value of the one-sample Kolmogorov-Smirnov statistic
    EXPECT_LE(d, 1.628 / std::sqrt(n));
}

TEST(PlayGame, AtomFiresWithItsProbability) {
    // firm 2 leaves at the level too, so every path ends at the first hit:
    // a tie when the atom fires
    ref::AbmBench b;
    const auto m = b.model();
    const double level = -0.5, q = 0.3;
    Strategy s1 = Strategy::never_exit();
    s1.atoms.push_back({level, q});
    const auto out = play_game(m, profile_of(s1, Strategy::threshold(level)), config(20000, 0.01, 0.5, 5));
    int ties = 0, ended = 0;
    for (const auto& o : out) {
        if (o.winner == Winner::Censored) continue;
        ++ended;
        if (o.winner == Winner::Tie) ++ties;
        else ASSERT_EQ(o.winner, Winner::Firm1);
    }
    const double p = static_cast<double>(ties) / ended;
    EXPECT_NEAR(p, q, 3 * std::sqrt(q * (1 - q) / ended));
}

TEST(PlayGame, TiesSplitEvenlyAndPayTheTiePayoff) {
    const auto m = ref::AbmBench{}.model();
    const auto prof = profile_of(Strategy::threshold(-1.0), Strategy::threshold(-1.0));
    // starting inside the exit region: both leave at t = 0
    const auto now = play_game(m, prof, config(10, 0.01, -1.5));
    for (const auto& o : now) {
        ASSERT_EQ(o.winner, Winner::Tie);
        EXPECT_EQ(o.exit_time, 0.0);
        EXPECT_DOUBLE_EQ(o.payoff[0], m.tie_payoff(1, -1.5));
        EXPECT_DOUBLE_EQ(o.payoff[1], m.tie_payoff(2, -1.5));
    }
    const int n = 4000;
    const auto out = play_game(m, prof, config(n, 0.01, 0.0, 21));
    int ties = 0, coin1 = 0;
    for (const auto& o : out) {
        if (o.winner != Winner::Tie) continue;
        ++ties;
        if (o.tie_coin == 1) ++coin1;
    }
    ASSERT_GT(ties, n / 2);
    EXPECT_NEAR(static_cast<double>(coin1) / ties, 0.5, 3 * std::sqrt(0.25 / ties));
}

TEST(EstimateValues, IdenticalOutcomesHaveZeroError) {
    GameOutcome o;
    o.winner = Winner::Firm1;
    o.payoff = {3.0, 1.5};
    const std::vector<GameOutcome> v(50, o);
    const auto s = estimate_values(v, SimConfig{});
    EXPECT_EQ(s.value[0].mean, 3.0);
    EXPECT_EQ(s.value[0].se, 0.0);
    EXPECT_EQ(s.value[1].se, 0.0);
    EXPECT_EQ(s.wins1, 50);
}

TEST(EstimateValues, AllCensoredIsAnError) {
    GameOutcome o;
    const std::vector<GameOutcome> v(10, o);
    SimConfig c;
    c.censor = CensorPolicy::Exclude;
    try {
        estimate_values(v, c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Estimation);
    }
}

TEST(Indifference, HomogeneousMixedProfile) {
    const auto vm = ValidatedModel::check(ref::AbmBench{}.model().with_exit_payoffs(1, 1));
    const auto mix = std::get<MixedEquilibrium>(mixed_mpe_analysis(vm));
    auto cfg = config(20000, 0.01, mix.theta - 1.0, 13);
    const auto d = indifference_diagnostic(vm.model(), mix.profile, cfg);
    EXPECT_LE(std::abs(d.z[0]), 3);
    EXPECT_LE(std::abs(d.z[1]), 3);
}

TEST(Indifference, DoubledHazardMakesTheRivalPreferStaying) {
    const auto vm = ValidatedModel::check(ref::AbmBench{}.model().with_exit_payoffs(1, 1));
    auto prof = std::get<MixedEquilibrium>(mixed_mpe_analysis(vm)).profile;
    const double theta = std::get<MixedEquilibrium>(mixed_mpe_analysis(vm)).theta;
    prof.of(2).hazard = prof.of(2).hazard.scaled(2.0);
    const auto d = indifference_diagnostic(vm.model(), prof, config(20000, 0.01, theta - 1.0, 17));
    // z is (estimate - l) / SE, so staying beating l shows as a large positive z
    EXPECT_GT(d.z[0], 3);
}

TEST(Indifference, HeterogeneousForcedMixedProfileBreaksIndifference) {
    // exit payoffs 1 and 3 put a unit gap between the thresholds; with the
    // benchmark's 0.2 gap the surplus at the midpoint is about one SE at 1e5 paths
    ref::AbmBench b;
    b.l2 = 3;
    const auto m = b.model();
    const double lo = b.threshold(1), hi = b.threshold(2);
    StrategyProfile prof;
    prof.firms = {Strategy::mixed(indifference_hazard(m, 2, lo)), Strategy::mixed(indifference_hazard(m, 1, lo))};
    auto cfg = config(50000, 0.01, 0.5 * (lo + hi), 19);
    cfg.antithetic = true;
    const auto d = indifference_diagnostic(m, prof, cfg);
    EXPECT_GT(d.z[0], 3);
}

TEST(PlayGame, HalvingTheStepMovesValuesLessThanTheirError) {
    ref::AbmBench b;
    const auto m = b.model();
    const auto prof = profile_of(Strategy::never_exit(), Strategy::threshold(b.threshold(2)));
    auto c1 = config(20000, 0.02, 0.5, 23);
    c1.brownian_bridge = true;
    auto c2 = c1;
    c2.dt = 0.01;
    const auto e1 = estimate_values(play_game(m, prof, c1), c1);
    const auto e2 = estimate_values(play_game(m, prof, c2), c2);
    for (int i = 0; i < 2; ++i) {
        const double se = std::hypot(e1.value[i].se, e2.value[i].se);
        EXPECT_LE(std::abs(e1.value[i].mean - e2.value[i].mean), se) << i;
    }
}

TEST(SimConfig, RejectsBadSettings) {
    SimConfig c;
    c.dt = 0;
    EXPECT_THROW(c.check(), Error);
    c.dt = 0.01;
    c.n_paths = 0;
    EXPECT_THROW(c.check(), Error);
}
