#include "attrition/error.hpp"
#include "attrition/numerics.hpp"
#include "attrition/oracle.hpp"
#include "attrition/stopping.hpp"
#include "support/reference.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace attrition;
namespace ref = attrition::testing;

namespace {

GameModel wiener(double r = 0.2) {
    return GameModel::standard(DiffusionSpec::arithmetic(0, 1).with_window({-10, 10}), r, ScalarFunction::affine(0, 1),
                               ScalarFunction::softplus(30, 10, 1), 1, 2);
}

GameModel constant_flow(double pi, double l) {
    return GameModel::standard(DiffusionSpec::arithmetic(-0.1, 1).with_window({-10, 10}), 0.2,
                               ScalarFunction::constant(pi), ScalarFunction::constant(100), l, l);
}

}  // namespace

TEST(BuildGrid, SymmetricWalk) {
    const auto g = build_grid(wiener(), 2001);
    const double h = g.spacing;
    EXPECT_NEAR(g.dt, h * h, 1e-15);
    for (std::size_t j = 0; j < g.size(); j += 97) {
        EXPECT_NEAR(g.up[j], 0.5, 1e-12);
        EXPECT_NEAR(g.down[j], 0.5, 1e-12);
        EXPECT_NEAR(g.stay[j], 0.0, 1e-12);
    }
}

TEST(BuildGrid, ProbabilitiesAndMoments) {
    std::mt19937_64 rng(6);
    for (int k = 0; k < 6; ++k) {
        const auto m = ref::random_model(static_cast<ref::Family>(k % 3), rng);
        const auto g = build_grid(m, 1001);
        const auto& s = m.diffusion();
        std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
        for (int t = 0; t < 100; ++t) {
            const std::size_t j = pick(rng);
            ASSERT_GE(g.up[j], 0);
            ASSERT_GE(g.down[j], 0);
            ASSERT_GE(g.stay[j], 0);
            EXPECT_NEAR(g.up[j] + g.down[j] + g.stay[j], 1.0, 1e-14);
            // drift of the grid coordinate
            const double x = g.x[j];
            double mu = s.mu(x);
            if (g.coordinate == Coordinate::Log) mu = mu / x - 0.5 * s.sigma(x) * s.sigma(x) / (x * x);
            const double mean = (g.up[j] - g.down[j]) * g.spacing;
            EXPECT_LE(std::abs(mean - mu * g.dt), 1e-12 + 1e-3 * std::abs(mu) * g.dt);
        }
        EXPECT_LE(g.max_variance_excess, 1e3);
    }
}

TEST(BuildGrid, TooFewStates) {
    try {
        build_grid(wiener(), 150);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Domain);
    }
}

TEST(BuildGrid, FirstPassageLaplaceTransform) {
    ref::AbmBench b;
    const auto m = b.model().with_window({-15, 15});
    const auto g = build_grid(m, 3001);
    const double level = -2.0;
    const std::size_t jl = g.index_at_or_below(level + 1e-9);
    const double lev = g.x[jl];
    // u = e^{-r dt} E[u(next)] above the level, 1 at and below it
    const std::size_t n = g.size() - jl - 1;
    std::vector<double> lo(n), di(n), hi(n), rhs(n, 0.0);
    const double d = std::exp(-b.r * g.dt);
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t j = jl + 1 + t;
        double up = g.up[j], stay = g.stay[j];
        if (j == g.size() - 1) {
            stay += up;
            up = 0;
        }
        di[t] = 1 - d * stay;
        hi[t] = -d * up;
        lo[t] = t == 0 ? 0 : -d * g.down[j];
        if (t == 0) rhs[t] = d * g.down[j];
    }
    numerics::solve_tridiagonal(lo, di, hi, rhs);
    const double gm = ref::abm_exponents(b.m, b.s, b.r).first;
    for (double x : {-1.5, -1.0, 0.0, 2.0, 5.0}) {
        const std::size_t j = g.index_at_or_below(x + 1e-9);
        const double expect = ref::abm_laplace_down(g.x[j], lev, b.m, b.s, b.r);
        EXPECT_NEAR(rhs[j - jl - 1], expect, 2 * g.spacing * std::abs(gm) * expect) << x;
    }
}

TEST(SinglePlayer, RichFlowNeverExits) {
    const auto m = constant_flow(0.2 * 1 + 1, 1);
    const auto g = build_grid(m, 1001);
    const auto dp = dp_single_player(g, m, 1);
    for (std::size_t j = 1; j + 1 < g.size(); ++j) EXPECT_EQ(dp.exit[j], 0);
    EXPECT_FALSE(dp.threshold);
}

TEST(SinglePlayer, PoorFlowAlwaysExits) {
    const auto m = constant_flow(0.2 * 1 - 1, 1);
    const auto g = build_grid(m, 1001);
    const auto dp = dp_single_player(g, m, 1);
    for (std::size_t j = 1; j + 1 < g.size(); ++j) {
        EXPECT_EQ(dp.exit[j], 1);
        EXPECT_DOUBLE_EQ(dp.value[j], 1.0);
    }
}

TEST(SinglePlayer, ValueIsMonotone) {
    const auto m = ref::AbmBench{}.model();
    const auto g = build_grid(m, 2001);
    const auto dp = dp_single_player(g, m, 2);
    for (std::size_t j = 1; j < g.size(); ++j) ASSERT_GE(dp.value[j], dp.value[j - 1]) << g.x[j];
}

TEST(SinglePlayer, ValueIterationMatchesPolicyIteration) {
    const auto m = ref::AbmBench{}.model().with_window({-10, 10});
    const auto g = build_grid(m, 401);
    OracleOptions vi;
    vi.method = OracleMethod::ValueIteration;
    vi.max_iterations = 2000000;
    const auto a = dp_single_player(g, m, 1);
    const auto b = dp_single_player(g, m, 1, vi);
    EXPECT_EQ(a.threshold, b.threshold);
    for (std::size_t j = 0; j < g.size(); ++j)
        EXPECT_NEAR(a.value[j], b.value[j], 1e-6 * std::max(1.0, std::abs(a.value[j])));
}

TEST(SinglePlayer, RefinementHalvesTheGap) {
    ref::AbmBench b;
    const auto m = b.model().with_window({-20, 20});
    const double theta = b.threshold(1);
    double prev = INFINITY;
    for (int n : {2001, 4001, 8001}) {
        const auto g = build_grid(m, n);
        const auto dp = dp_single_player(g, m, 1);
        ASSERT_TRUE(dp.refined_threshold);
        const double gap = std::abs(*dp.refined_threshold - theta);
        EXPECT_LE(gap, g.spacing);
        if (std::isfinite(prev)) EXPECT_GE(prev / gap, 1.8) << n;
        prev = gap;
    }
}

TEST(BestResponse, NeverExitingRivalIsTheSinglePlayerProblem) {
    const auto m = ref::AbmBench{}.model();
    const auto g = build_grid(m, 2001);
    const auto sp = dp_single_player(g, m, 1);
    const auto br =
        dp_best_response(g, m, 1, Strategy::never_exit(), Strategy::threshold(ref::AbmBench{}.threshold(1)));
    for (std::size_t j = 0; j < g.size(); ++j) {
        EXPECT_DOUBLE_EQ(br.value[j], sp.value[j]);
        EXPECT_EQ(br.exit[j], sp.exit[j]);
    }
    // the analytic threshold rule is within a cell of the chain's optimum
    EXPECT_GE(br.deviation_gain, 0);
    EXPECT_LE(br.deviation_gain, 1e-3);
}

TEST(BestResponse, WeakProfileHasNoProfitableDeviation) {
    ref::AbmBench b;
    const auto m = b.model();
    const auto g = build_grid(m, 4001);
    const auto br = dp_best_response(g, m, 1, Strategy::threshold(b.threshold(2)), Strategy::never_exit());
    EXPECT_LE(br.deviation_gain, 1e-3 * b.l1);
}

TEST(BestResponse, MoreRivalHazardNeverHurts) {
    const auto m = ref::AbmBench{}.model();
    const auto g = build_grid(m, 2001);
    const auto base = indifference_hazard(m, 1, -1.0);
    const auto lo = dp_best_response(g, m, 1, Strategy::mixed(base));
    const auto hi = dp_best_response(g, m, 1, Strategy::mixed(base.scaled(2.0)));
    for (std::size_t j = 0; j < g.size(); ++j) ASSERT_GE(hi.value[j], lo.value[j] - 1e-10) << g.x[j];
}

TEST(BestResponse, HomogeneousMixedValueIsTheExitPayoff) {
    ref::AbmBench b;
    b.l1 = b.l2 = 1;
    const auto m = b.model().with_window({-20, 20});
    const auto g = build_grid(m, 4001);
    const double theta = b.threshold(1);
    const auto rival = Strategy::mixed(indifference_hazard(m, 2, theta));
    const auto own = Strategy::mixed(indifference_hazard(m, 1, theta));
    const auto br = dp_best_response(g, m, 1, rival, own);
    const double tol = std::max(1e-3 * b.l1, 5 * g.spacing);
    for (double x : {theta - 6, theta - 3, theta - 1, theta - 0.25}) {
        const std::size_t j = g.index_at_or_below(x);
        EXPECT_NEAR(br.value[j], b.l1, tol) << x;
        EXPECT_NEAR(br.candidate_value[j], b.l1, tol) << x;
    }
}

TEST(BestResponse, AtomRaisesTheWaitingValue) {
    ref::AbmBench b;
    const auto m = b.model();
    const auto g = build_grid(m, 2001);
    Strategy rival = Strategy::never_exit();
    rival.atoms.push_back({b.threshold(1), 0.5});
    const auto with_atom = dp_best_response(g, m, 2, rival);
    const auto without = dp_best_response(g, m, 2, Strategy::never_exit());
    ASSERT_FALSE(with_atom.value_after_atom.empty());
    for (std::size_t j = 0; j < g.size(); ++j) ASSERT_GE(with_atom.value[j], without.value[j] - 1e-10);
    const std::size_t j = g.index_at_or_below(b.threshold(1) + 0.5);
    EXPECT_GT(with_atom.value[j], without.value[j]);
}
