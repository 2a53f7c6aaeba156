#include "attrition/error.hpp"
#include "attrition/payoffs.hpp"
#include "support/reference.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace attrition;
namespace ref = attrition::testing;

namespace {

CheckStatus status_of(const ValidationReport& rep, const std::string& name) {
    const auto* c = rep.find(name);
    EXPECT_NE(c, nullptr) << name;
    return c ? c->status : CheckStatus::Fail;
}

GameModel linear_winner_model(const Window* window) {
    auto spec = DiffusionSpec::arithmetic(-0.1, 1.0);
    if (window) spec = spec.with_window(*window);
    // w(x) = x / r + 5
    return GameModel::standard(spec, 0.2, ScalarFunction::affine(0, 1), ScalarFunction::affine(5, 5), 1, 2);
}

}  // namespace

// The worked validation example: linear winner payoff on the default window.
TEST(Validate, LinearWinnerExampleAllPass) {
    const auto m = linear_winner_model(nullptr);
    const auto rep = validate(m, 1000);
    for (const auto& c : rep.checks)
        EXPECT_NE(c.status, CheckStatus::Fail) << c.name << " fails at x = " << c.worst_x << " (margin " << c.worst_value
                                               << ")";
    EXPECT_TRUE(rep.passed());
    ASSERT_TRUE(rep.break_even[0] && rep.break_even[1]);
    EXPECT_NEAR(*rep.break_even[0], 0.2, 1e-12);
    EXPECT_NEAR(*rep.break_even[1], 0.4, 1e-12);
}

// Same primitives on a window where w stays above l2.
TEST(Validate, LinearWinnerOnANarrowWindow) {
    const Window w{-0.5, 30};
    const auto rep = validate(linear_winner_model(&w), 1000);
    for (const auto& c : rep.checks) EXPECT_NE(c.status, CheckStatus::Fail) << c.name;
    EXPECT_NEAR(*rep.break_even[0], 0.2, 1e-12);
    EXPECT_NEAR(*rep.break_even[1], 0.4, 1e-12);
}

TEST(Validate, BenchmarkAllPass) {
    const auto rep = validate(ref::AbmBench{}.model());
    EXPECT_TRUE(rep.passed());
    for (const auto& c : rep.checks) EXPECT_EQ(c.status, CheckStatus::Pass) << c.name;
    EXPECT_EQ(rep.grid_size, 1000);
}

TEST(Validate, DecreasingFlowFails) {
    const auto m = GameModel::standard(DiffusionSpec::arithmetic(-0.1, 1).with_window({-10, 10}), 0.2,
                                       ScalarFunction::affine(0, -1), ScalarFunction::constant(20), 1, 2);
    const auto rep = validate(m);
    EXPECT_EQ(status_of(rep, "flow-increasing"), CheckStatus::Fail);
    EXPECT_FALSE(rep.passed());
    EXPECT_THROW(ValidatedModel::check(m), Error);
}

TEST(Validate, WinnerEqualToExitFails) {
    ref::AbmBench b;
    const auto base = b.model();
    const auto m = GameModel::standard(base.diffusion(), b.r, ScalarFunction::affine(0, 1),
                                       ScalarFunction::constant(b.l2), b.l1, b.l2);
    const auto rep = validate(m);
    EXPECT_EQ(status_of(rep, "winner-above-exit"), CheckStatus::Fail);
    try {
        ValidatedModel::check(m);
        FAIL() << "expected an assumption error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Assumption);
        EXPECT_NE(std::string(e.what()).find("winner-above-exit"), std::string::npos);
    }
}

TEST(Validate, ExitPayoffOrder) {
    ref::AbmBench b;
    b.l1 = 2;
    b.l2 = 1;
    EXPECT_EQ(status_of(validate(b.model()), "exit-payoff-order"), CheckStatus::Fail);
}

TEST(Validate, ImpatienceViolation) {
    // a flat prize is worth less than staying once pi exceeds r w
    ref::AbmBench b;
    const auto m = GameModel::standard(b.model().diffusion(), b.r, ScalarFunction::affine(0, 1),
                                       ScalarFunction::constant(10), b.l1, b.l2);
    EXPECT_EQ(status_of(validate(m), "winner-impatience"), CheckStatus::Fail);
}

TEST(Validate, IsDeterministic) {
    const auto m = ref::AbmBench{}.model();
    const auto a = validate(m, 500), b = validate(m, 500);
    ASSERT_EQ(a.checks.size(), b.checks.size());
    for (std::size_t k = 0; k < a.checks.size(); ++k) {
        EXPECT_EQ(a.checks[k].name, b.checks[k].name);
        EXPECT_EQ(a.checks[k].status, b.checks[k].status);
        EXPECT_EQ(a.checks[k].worst_x, b.checks[k].worst_x);
        EXPECT_EQ(a.checks[k].worst_value, b.checks[k].worst_value);
        EXPECT_EQ(a.checks[k].detail, b.checks[k].detail);
    }
}

TEST(Validate, GridTooSmall) { EXPECT_THROW(validate(ref::AbmBench{}.model(), 50), Error); }

TEST(Validate, DeterministicModeChecksDrift) {
    const auto rep = validate(ref::deterministic_bench(1, 1.05));
    EXPECT_TRUE(rep.passed());
    EXPECT_EQ(status_of(rep, "drift-negative"), CheckStatus::Pass);
    EXPECT_EQ(rep.find("volatility-positive"), nullptr);
}

TEST(Validate, HeterogeneousConditions) {
    const auto spec = DiffusionSpec::arithmetic(-0.1, 1);
    const auto w = ScalarFunction::softplus(10, 10, 1);
    // l2 grows slowly with the state; pi + A l stays increasing
    FirmPrimitives f1{0.2, ScalarFunction::affine(0, 1), w, ScalarFunction::constant(1)};
    FirmPrimitives f2{0.25, ScalarFunction::affine(0.1, 1.2), w, ScalarFunction::affine(2, 0.05)};
    const auto m = GameModel::heterogeneous(spec, f1, f2);
    const auto rep = validate(m);
    for (const auto& c : rep.checks) EXPECT_NE(c.status, CheckStatus::Fail) << c.name;
    EXPECT_NE(rep.find("net-flow-increasing-2"), nullptr);
    EXPECT_NE(rep.find("winner-impatience-2"), nullptr);
    // net flow of firm 2: pi - r l + mu l'
    EXPECT_NEAR(m.net_flow(2, 1.0), 0.1 + 1.2 - 0.25 * 2.05 + (-0.1) * 0.05, 1e-14);
}

TEST(BreakEven, LinearFlow) {
    const auto m = GameModel::standard(DiffusionSpec::arithmetic(-0.1, 1).with_window({-10, 10}), 0.2,
                                       ScalarFunction::affine(0, 1), ScalarFunction::constant(20), 1, 1);
    EXPECT_NEAR(break_even_state(m, 1), 0.2, 1e-12);
}

TEST(BreakEven, ExponentialFlow) {
    const auto m = GameModel::standard(DiffusionSpec::arithmetic(-0.1, 1).with_window({-10, 10}), 1.0,
                                       ScalarFunction::exponential(0, 1, 1), ScalarFunction::constant(1e6), 1, 1);
    EXPECT_NEAR(break_even_state(m, 1), 0.0, 1e-10);
}

TEST(BreakEven, CubicFlow) {
    const auto m = GameModel::standard(DiffusionSpec::arithmetic(-0.1, 1).with_window({-5, 5}), 0.5,
                                       ScalarFunction::polynomial({0, 0, 0, 1}), ScalarFunction::constant(1e4), 2, 2);
    const double xc = break_even_state(m, 1);
    EXPECT_NEAR(xc, 1.0, 1e-10);
    EXPECT_LE(std::abs(m.flow(1, xc) - 1.0), 1e-10);
}

TEST(BreakEven, NoSignChangeIsAnAssumptionError) {
    const auto m = GameModel::standard(DiffusionSpec::arithmetic(-0.1, 1).with_window({-5, 5}), 0.2,
                                       ScalarFunction::exponential(0, 1, 1), ScalarFunction::constant(50), -1, -1);
    try {
        break_even_state(m, 1);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Assumption);
    }
    // without a window there is nothing to centre one on
    EXPECT_THROW(GameModel::standard(DiffusionSpec::arithmetic(-0.1, 1), 0.2, ScalarFunction::exponential(0, 1, 1),
                                     ScalarFunction::constant(50), -1, -1),
                 Error);
}

TEST(BreakEven, IncreasingInExitPayoff) {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 50; ++k) {
        const auto m = ref::random_model(static_cast<ref::Family>(k % 3), rng);
        const double dl = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
        const auto up = m.with_exit_payoffs(m.l(1) + dl, m.l(2));
        EXPECT_GT(break_even_state(up, 1), break_even_state(m, 1));
    }
}

TEST(GameModel, TiePayoffBelowWinning) {
    const auto m = ref::AbmBench{}.model();
    for (double x = -5; x <= 5; x += 0.25) {
        for (FirmId i : {1, 2}) {
            EXPECT_DOUBLE_EQ(m.tie_payoff(i, x), 0.5 * (m.l(i) + m.winner(i, x)));
            EXPECT_LT(m.tie_payoff(i, x), m.winner(i, x));
        }
    }
}

TEST(GameModel, WithExitPayoffsKeepsTheWindow) {
    const auto m = ref::AbmBench{}.model();
    const auto n = m.with_exit_payoffs(1, 5);
    EXPECT_EQ(n.diffusion().window().lo, m.diffusion().window().lo);
    EXPECT_EQ(n.diffusion().window().hi, m.diffusion().window().hi);
    EXPECT_EQ(n.l(2), 5);
}

TEST(GameModel, ConstantExitPayoffOnlyInStandardMode) {
    const auto spec = DiffusionSpec::arithmetic(-0.1, 1);
    const auto w = ScalarFunction::softplus(10, 10, 1);
    const auto m = GameModel::heterogeneous(spec, {0.2, ScalarFunction::affine(0, 1), w, ScalarFunction::constant(1)},
                                            {0.2, ScalarFunction::affine(0, 1), w, ScalarFunction::affine(2, 0.01)});
    EXPECT_THROW(m.l(2), Error);
    EXPECT_NEAR(m.exit_payoff(2, 10), 2.1, 1e-14);
}
