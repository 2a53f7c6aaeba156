#include "attrition/equilibrium.hpp"
#include "attrition/error.hpp"
#include "attrition/oracle.hpp"
#include "support/reference.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace attrition;
namespace ref = attrition::testing;

namespace {

ValidatedModel bench(double l1 = 1, double l2 = 2) {
    ref::AbmBench b;
    b.l1 = l1;
    b.l2 = l2;
    return ValidatedModel::check(b.model());
}

// Discrete-time indifference gap of the rival hazard over one step of length dt.
double indifference_residual(const GameModel& m, double x, double dt) {
    const double lam = candidate_exit_rate(m, 1, x);
    const double l = m.l(1), r = m.r(1);
    return lam * dt * m.winner(1, x) + (1 - lam * dt) * (m.flow(1, x) * dt + (1 - r * dt) * l) - l;
}

}  // namespace

TEST(CandidateExitRate, ZeroAtBreakEvenAndSignedAround) {
    const auto m = bench().model();
    for (FirmId i : {1, 2}) {
        const double xc = break_even_state(m, i);
        EXPECT_NEAR(candidate_exit_rate(m, i, xc), 0.0, 1e-10);
        for (double d : {0.01, 0.5, 3.0}) {
            EXPECT_GT(candidate_exit_rate(m, i, xc - d), 0);
            EXPECT_LT(candidate_exit_rate(m, i, xc + d), 0);
        }
    }
}

TEST(CandidateExitRate, SymmetricWhenExitPayoffsAgree) {
    const auto m = bench(1.5, 1.5).model();
    for (double x = -10; x <= 5; x += 0.5) EXPECT_EQ(candidate_exit_rate(m, 1, x), candidate_exit_rate(m, 2, x));
}

TEST(CandidateExitRate, DiscreteIndifferenceResidualIsQuadratic) {
    const auto m = bench(1, 1).model();
    for (double x : {-3.0, -1.5, -1.2}) {
        const double r2 = indifference_residual(m, x, 1e-2);
        const double r3 = indifference_residual(m, x, 1e-3);
        const double r4 = indifference_residual(m, x, 1e-4);
        EXPECT_NEAR(r2 / r3, 100, 1);
        EXPECT_NEAR(r3 / r4, 100, 1);
    }
}

TEST(IndifferenceHazard, ClampedAndCutOff) {
    const auto m = bench().model();
    const auto h = indifference_hazard(m, 1, -1.0);
    EXPECT_EQ(h(-0.5), 0.0);
    EXPECT_DOUBLE_EQ(h(-2.0), candidate_exit_rate(m, 1, -2.0));
    EXPECT_DOUBLE_EQ(indifference_hazard(m, 1, -1.0, 2.0)(-2.0), 2 * candidate_exit_rate(m, 1, -2.0));
    // above x_c the raw rate is negative; the hazard never is
    EXPECT_EQ(indifference_hazard(m, 1, 5.0)(1.0), 0.0);
}

TEST(WeakExits, BenchmarkWithOracle) {
    const auto vm = bench();
    EquilibriumOptions opt;
    opt.certify = true;
    const auto eq = pure_mpe_weak_exits(vm, opt);
    const auto t2 = optimal_threshold(vm.model(), 2);
    EXPECT_EQ(eq.exiting_firm, 2);
    EXPECT_DOUBLE_EQ(eq.theta, t2.theta);
    ASSERT_TRUE(eq.profile.of(2).exit_threshold);
    EXPECT_DOUBLE_EQ(*eq.profile.of(2).exit_threshold, t2.theta);
    EXPECT_FALSE(eq.profile.of(1).exit_threshold);
    EXPECT_GT(eq.analytic_margin, 0);
    ASSERT_TRUE(eq.oracle);
    EXPECT_TRUE(eq.oracle->passed);
    for (double g : eq.oracle->deviation_gain) EXPECT_LE(g, 1e-3 * 1.0);
}

TEST(WeakExits, HoldsOnRandomModels) {
    std::mt19937_64 rng(31);
    for (int k = 0; k < 30; ++k) {
        const auto vm = ValidatedModel::check(ref::random_model(static_cast<ref::Family>(k % 3), rng));
        const auto eq = pure_mpe_weak_exits(vm);
        EXPECT_GT(eq.analytic_margin, 0);
        // just above the threshold the waiting value tends to w(theta_2) > l1
        const double w2 = vm.model().winner(1, eq.theta);
        EXPECT_GT(w2, vm.model().l(1));
    }
}

TEST(Kappa, PositiveOnTheBenchmark) {
    const auto k = kappa_theta(bench());
    EXPECT_GT(k.kappa, 0);
    ASSERT_TRUE(std::isfinite(k.kappa));
    EXPECT_NEAR(k.kappa, 1.99867, 1e-4);
    EXPECT_NEAR(k.root, optimal_threshold(bench().model(), 2).theta - k.kappa, 1e-12);
}

TEST(Kappa, DoesNotDependOnTheLowExitPayoff) {
    const double k0 = kappa_theta(bench(1, 2)).kappa;
    for (double l1 : {0.1, 0.5, 0.9, 1.3, 1.7, 1.99}) {
        const double k = kappa_theta(bench(l1, 2)).kappa;
        EXPECT_LE(std::abs(k - k0), 1e-10 * k0) << l1;
    }
}

TEST(Kappa, ShrinksAsTheWinnerFloorApproachesExit) {
    ref::AbmBench b;
    double prev = INFINITY;
    for (double eps : {1.0, 1e-1, 1e-2, 1e-3}) {
        b.w0 = b.l2 + eps;
        const auto k = kappa_theta(ValidatedModel::check(b.model()));
        EXPECT_GT(k.kappa, 0);
        EXPECT_LT(k.kappa, prev);
        prev = k.kappa;
    }
    EXPECT_LT(prev, 0.05);
}

TEST(StrongExits, ZeroGapAlwaysQualifies) {
    const auto eq = pure_mpe_strong_exits(bench(1.5, 1.5));
    ASSERT_TRUE(eq);
    EXPECT_EQ(eq->exiting_firm, 1);
}

TEST(StrongExits, BenchmarkPassesTheKappaTest) {
    const auto vm = bench();
    EquilibriumOptions opt;
    opt.certify = true;
    const auto eq = pure_mpe_strong_exits(vm, opt);
    ASSERT_TRUE(eq);
    EXPECT_EQ(eq->method, "kappa");
    EXPECT_DOUBLE_EQ(eq->theta, optimal_threshold(vm.model(), 1).theta);
    EXPECT_GT(eq->analytic_margin, 0);
    ASSERT_TRUE(eq->oracle);
    EXPECT_TRUE(eq->oracle->passed);
}

TEST(StrongExits, AbsentForALargeExitGapAndTheOracleAgrees) {
    const auto vm = bench(1, 9.8);
    EXPECT_FALSE(pure_mpe_strong_exits(vm));
    // firm 2 gains by leaving rather than waiting for firm 1
    const auto& m = vm.model();
    const auto grid = build_grid(m, 4001);
    const auto t1 = optimal_threshold(m, 1);
    const auto br = dp_best_response(grid, m, 2, Strategy::threshold(t1.theta), Strategy::never_exit());
    EXPECT_GT(br.deviation_gain, 1e-3 * m.l(2));
}

TEST(StrongExits, DirectConditionPastTheKappaBound) {
    // kappa is only sufficient; here the direct check still holds
    const auto eq = pure_mpe_strong_exits(bench(1, 7.6));
    ASSERT_TRUE(eq);
    EXPECT_EQ(eq->method, "condition-direct");
    EXPECT_GT(eq->analytic_margin, 0);
}

TEST(Mixed, HomogeneousHazardsFollowTheIndifferenceRate) {
    const auto vm = bench(1.2, 1.2);
    const auto res = mixed_mpe_analysis(vm);
    ASSERT_TRUE(std::holds_alternative<MixedEquilibrium>(res));
    const auto& mix = std::get<MixedEquilibrium>(res);
    const auto& m = vm.model();
    EXPECT_NEAR(mix.theta, optimal_threshold(m, 1).theta, 1e-12);
    for (FirmId i : {1, 2}) {
        const auto& s = mix.profile.of(i);
        EXPECT_FALSE(s.exit_threshold);
        EXPECT_TRUE(s.atoms.empty());
        const FirmId other = i == 1 ? 2 : 1;
        for (double x : {mix.theta - 5, mix.theta - 1, mix.theta - 1e-6})
            EXPECT_NEAR(s.hazard(x), candidate_exit_rate(m, other, x), 1e-12);
        EXPECT_EQ(s.hazard(mix.theta + 1e-6), 0.0);
        EXPECT_GT(s.hazard(mix.theta - 1e-3), 0.0);
    }
}

TEST(Mixed, HeterogeneousGivesACertificate) {
    const auto vm = bench();
    const auto res = mixed_mpe_analysis(vm);
    ASSERT_TRUE(std::holds_alternative<NonexistenceCertificate>(res));
    const auto& c = std::get<NonexistenceCertificate>(res);
    EXPECT_LT(c.theta_low, c.theta_high);
    EXPECT_NEAR(c.gap, c.theta_high - c.theta_low, 1e-14);
    EXPECT_NEAR(c.theta_low, ref::AbmBench{}.threshold(1), 1e-9);
    EXPECT_NEAR(c.theta_high, ref::AbmBench{}.threshold(2), 1e-9);
    EXPECT_LT(c.max_required_probability, 0);
    EXPECT_GT(c.min_surplus, 0);
    EXPECT_GE(c.witness.lo, c.theta_low);
    EXPECT_LE(c.witness.hi, c.theta_high);
    EXPECT_LT(c.witness.lo, c.witness.hi);
    EXPECT_FALSE(c.reason.empty());
}

TEST(Mixed, ExactlyOneOutcomePerModel) {
    std::mt19937_64 rng(77);
    for (int k = 0; k < 12; ++k) {
        auto m = ref::random_model(static_cast<ref::Family>(k % 3), rng);
        if (k % 2 == 0) m = m.with_exit_payoffs(m.l(1), m.l(1));
        const auto rep = analyze_equilibria(ValidatedModel::check(m));
        EXPECT_NE(rep.mixed.has_value(), rep.nonexistence.has_value());
        EXPECT_EQ(rep.mixed.has_value(), k % 2 == 0);
        EXPECT_TRUE(rep.pure_weak);
    }
}

TEST(Mixed, HomogeneityTolerance) {
    EXPECT_TRUE(std::holds_alternative<MixedEquilibrium>(mixed_mpe_analysis(bench(2, 2 + 1e-10))));
    EXPECT_TRUE(std::holds_alternative<NonexistenceCertificate>(mixed_mpe_analysis(bench(2, 2 + 1e-7))));
}

TEST(Deterministic, SmallGapHasAFeasibleInterval) {
    const auto vm = ValidatedModel::check(ref::deterministic_bench(1, 1.05));
    const auto rep = deterministic_mixed_mpe(vm, 0.5);
    ASSERT_TRUE(rep.feasible_interval);
    EXPECT_TRUE(rep.check.feasible);
    EXPECT_TRUE(rep.contiguous);
    EXPECT_LT((*rep.feasible_interval)[0], (*rep.feasible_interval)[1]);
    EXPECT_LE(rep.check.indifference_residual, 1e-8);
}

TEST(Deterministic, LowerEndMatchesClosedFormDiscounting) {
    // x_t = x - 0.1 t and pi = x, so the flow integral is elementary
    const double r = 0.2, m = 0.1, l1 = 1, l2 = 1.05;
    const double th1 = r * l1, th2 = r * l2;
    ref::AbmBench b;
    const double w = b.winner(th1);
    double q_lb = 0;
    for (int k = 1; k <= 2000; ++k) {
        const double x = th1 + (th2 - th1) * k / 2000;
        const double T = (x - th1) / m;
        const double d = std::exp(-r * T);
        // int_0^T e^{-rt} (x - m t) dt
        const double flow = x * (1 - d) / r - m * ((1 - d) / (r * r) - T * d / r);
        q_lb = std::max(q_lb, (l2 - flow - d * l2) / (d * (w - l2)));
    }
    const auto rep = deterministic_mixed_mpe(ValidatedModel::check(ref::deterministic_bench(l1, l2)), 0.5);
    EXPECT_NEAR(rep.q_lower_bound, q_lb, 1e-6);
    ASSERT_TRUE(rep.feasible_interval);
    EXPECT_GE((*rep.feasible_interval)[0], q_lb);
    EXPECT_LE((*rep.feasible_interval)[0], q_lb + 1e-3 + 1e-12);
}

TEST(Deterministic, LargeGapHasNone) {
    const auto rep = deterministic_mixed_mpe(ValidatedModel::check(ref::deterministic_bench(1, 9)), 0.5);
    EXPECT_FALSE(rep.feasible_interval);
    EXPECT_FALSE(rep.check.feasible);
    EXPECT_EQ(rep.feasible_count, 0);
    EXPECT_GT(rep.q_lower_bound, 1);
}

TEST(Deterministic, ZeroAtomIsMarked) {
    const auto rep = deterministic_mixed_mpe(ValidatedModel::check(ref::deterministic_bench(1, 1.05)), 0.0);
    EXPECT_TRUE(rep.check.no_atom);
    EXPECT_FALSE(rep.check.feasible);
}

TEST(Deterministic, EqualExitPayoffsAdmitAnyAtom) {
    const auto rep = deterministic_mixed_mpe(ValidatedModel::check(ref::deterministic_bench(1, 1)), 0.3);
    EXPECT_TRUE(rep.check.feasible);
    ASSERT_TRUE(rep.feasible_interval);
    EXPECT_NEAR((*rep.feasible_interval)[0], 1e-3, 1e-12);
    EXPECT_NEAR((*rep.feasible_interval)[1], 0.999, 1e-12);
}

TEST(Deterministic, NoisyModelIsAModeError) {
    try {
        deterministic_mixed_mpe(bench(), 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Mode);
    }
}

TEST(Report, ClassificationAndBelowThresholdNote) {
    const auto het = analyze_equilibria(bench(), {}, -3.0);
    EXPECT_EQ(het.classification(), "pure-only");
    EXPECT_FALSE(het.notes.empty());
    EXPECT_EQ(analyze_equilibria(bench(1, 1)).classification(), "mixed+pure");
    EXPECT_EQ(analyze_equilibria(ValidatedModel::check(ref::deterministic_bench(1, 1.05))).classification(),
              "deterministic-mixed");
    EXPECT_EQ(analyze_equilibria(ValidatedModel::check(ref::deterministic_bench(1, 9))).classification(),
              "deterministic-none");
}

TEST(Strategy, ExitRegionAndSupportMustBeDisjoint) {
    Strategy s = Strategy::threshold(0.0);
    s.hazard = Hazard::constant(1.0, -5, 1);
    EXPECT_THROW(s.check(), Error);
    Strategy t = Strategy::threshold(-5.0);
    t.hazard = Hazard::constant(1.0, -5, 1);
    EXPECT_NO_THROW(t.check());
    Strategy a = Strategy::never_exit();
    a.atoms.push_back({0.0, 1.5});
    EXPECT_THROW(a.check(), Error);
}
