#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace attrition::numerics {

struct Integral {
    double value = 0;
    double error = 0;   // estimated absolute error
    double l1 = 0;      // integral of |f|, the scale the error is measured against
};

// Adaptive Gauss-Kronrod (15 point) on a finite interval.
Integral integrate(const std::function<double(double)>& f, double a, double b,
                   double rel_tol = 1e-12);

struct Root {
    double x = 0;
    double lo = 0, hi = 0;  // final bracket
    int iterations = 0;
};

// Bracketing root finder (TOMS 748). Requires f(lo) and f(hi) of opposite sign.
Root find_root(const std::function<double(double)>& f, double lo, double hi,
               double f_lo, double f_hi, int max_iterations = 200);

// Solve a tridiagonal system in place (Thomas algorithm).
// lower[i] multiplies x[i-1], upper[i] multiplies x[i]+1. rhs is overwritten by x.
void solve_tridiagonal(const std::vector<double>& lower, const std::vector<double>& diag,
                       const std::vector<double>& upper, std::vector<double>& rhs);

// Piecewise quintic Hermite interpolation on a uniform grid, from values and
// first and second derivatives at the nodes.
class QuinticTable {
public:
    QuinticTable() = default;
    QuinticTable(double t0, double step, std::vector<double> f, std::vector<double> df,
                 std::vector<double> d2f);

    double value(double t) const;
    double derivative(double t) const;
    double second_derivative(double t) const;

    double t_lo() const { return t0_; }
    double t_hi() const { return t0_ + step_ * static_cast<double>(f_.size() - 1); }
    bool empty() const { return f_.empty(); }

private:
    // returns cell index and local coordinate in [0, 1]
    std::pair<std::size_t, double> locate(double t) const;
    void eval(double t, double* out, int order) const;

    double t0_ = 0, step_ = 1;
    std::vector<double> f_, df_, d2f_;
};

std::vector<double> linspace(double a, double b, std::size_t n);

}  // namespace attrition::numerics
