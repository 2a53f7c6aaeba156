#include "attrition/numerics.hpp"

#include "attrition/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace attrition::numerics {

Integral integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    Integral out;
    if (a == b) return out;
    // an interval a few ulps wide: rounding would keep the error estimate
    // above tolerance at every depth
    if (std::abs(b - a) <= 64 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(a), std::abs(b)})) {
        out.value = 0.5 * (f(a) + f(b)) * (b - a);
        out.l1 = std::abs(out.value);
        return out;
    }
    try {
        out.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            f, a, b, 12, rel_tol, &out.error, &out.l1);
    } catch (const std::exception& e) {
        fail(ErrorKind::Solver, std::string("quadrature failed: ") + e.what());
    }
    if (!std::isfinite(out.value)) {
        std::ostringstream os;
        os << "non-finite integral on [" << a << ", " << b << "]";
        fail(ErrorKind::Domain, os.str());
    }
    return out;
}

Root find_root(const std::function<double(double)>& f, double lo, double hi, double f_lo,
               double f_hi, int max_iterations) {
    if (f_lo == 0) return {lo, lo, lo, 0};
    if (f_hi == 0) return {hi, hi, hi, 0};
    if ((f_lo > 0) == (f_hi > 0)) {
        std::ostringstream os;
        os << "root not bracketed on [" << lo << ", " << hi << "]";
        fail(ErrorKind::Solver, os.str());
    }
    boost::uintmax_t iters = static_cast<boost::uintmax_t>(max_iterations);
    boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 2);
    std::pair<double, double> br;
    try {
        br = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, iters);
    } catch (const std::exception& e) {
        fail(ErrorKind::Solver, std::string("root finder failed: ") + e.what());
    }
    Root r;
    r.lo = br.first;
    r.hi = br.second;
    r.iterations = static_cast<int>(iters);
    // pick the end with the smaller residual
    const double a = std::abs(f(br.first)), b = std::abs(f(br.second));
    r.x = a <= b ? br.first : br.second;
    return r;
}

void solve_tridiagonal(const std::vector<double>& lower, const std::vector<double>& diag,
                       const std::vector<double>& upper, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    std::vector<double> c(n);
    double m = diag[0];
    if (m == 0) fail(ErrorKind::Solver, "singular tridiagonal system");
    c[0] = upper[0] / m;
    rhs[0] /= m;
    for (std::size_t i = 1; i < n; ++i) {
        m = diag[i] - lower[i] * c[i - 1];
        if (m == 0) fail(ErrorKind::Solver, "singular tridiagonal system");
        c[i] = upper[i] / m;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / m;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

QuinticTable::QuinticTable(double t0, double step, std::vector<double> f, std::vector<double> df,
                           std::vector<double> d2f)
    : t0_(t0), step_(step), f_(std::move(f)), df_(std::move(df)), d2f_(std::move(d2f)) {
    if (f_.size() < 2 || df_.size() != f_.size() || d2f_.size() != f_.size())
        fail(ErrorKind::Domain, "quintic table needs at least two matching nodes");
}

std::pair<std::size_t, double> QuinticTable::locate(double t) const {
    const double s = (t - t0_) / step_;
    const auto last = f_.size() - 2;
    double cell = std::floor(s);
    if (cell < 0) cell = 0;
    if (cell > static_cast<double>(last)) cell = static_cast<double>(last);
    return {static_cast<std::size_t>(cell), s - cell};
}

void QuinticTable::eval(double t, double* out, int order) const {
    const auto [i, u] = locate(t);
    const double h = step_;
    const double p0 = f_[i], p1 = f_[i + 1];
    const double m0 = df_[i] * h, m1 = df_[i + 1] * h;
    const double a0 = d2f_[i] * h * h, a1 = d2f_[i + 1] * h * h;
    // quintic Hermite basis in local coordinate u
    const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
    if (order == 0) {
        const double h0 = 1 - 10 * u3 + 15 * u4 - 6 * u5;
        const double h1 = u - 6 * u3 + 8 * u4 - 3 * u5;
        const double h2 = 0.5 * (u2 - 3 * u3 + 3 * u4 - u5);
        const double h3 = 0.5 * (u3 - 2 * u4 + u5);
        const double h4 = -4 * u3 + 7 * u4 - 3 * u5;
        const double h5 = 10 * u3 - 15 * u4 + 6 * u5;
        *out = h0 * p0 + h1 * m0 + h2 * a0 + h3 * a1 + h4 * m1 + h5 * p1;
    } else if (order == 1) {
        const double h0 = -30 * u2 + 60 * u3 - 30 * u4;
        const double h1 = 1 - 18 * u2 + 32 * u3 - 15 * u4;
        const double h2 = 0.5 * (2 * u - 9 * u2 + 12 * u3 - 5 * u4);
        const double h3 = 0.5 * (3 * u2 - 8 * u3 + 5 * u4);
        const double h4 = -12 * u2 + 28 * u3 - 15 * u4;
        const double h5 = 30 * u2 - 60 * u3 + 30 * u4;
        *out = (h0 * p0 + h1 * m0 + h2 * a0 + h3 * a1 + h4 * m1 + h5 * p1) / h;
    } else {
        const double h0 = -60 * u + 180 * u2 - 120 * u3;
        const double h1 = -36 * u + 96 * u2 - 60 * u3;
        const double h2 = 0.5 * (2 - 18 * u + 36 * u2 - 20 * u3);
        const double h3 = 0.5 * (6 * u - 24 * u2 + 20 * u3);
        const double h4 = -24 * u + 84 * u2 - 60 * u3;
        const double h5 = 60 * u - 180 * u2 + 120 * u3;
        *out = (h0 * p0 + h1 * m0 + h2 * a0 + h3 * a1 + h4 * m1 + h5 * p1) / (h * h);
    }
}

double QuinticTable::value(double t) const {
    double v;
    eval(t, &v, 0);
    return v;
}
double QuinticTable::derivative(double t) const {
    double v;
    eval(t, &v, 1);
    return v;
}
double QuinticTable::second_derivative(double t) const {
    double v;
    eval(t, &v, 2);
    return v;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = a;
        return out;
    }
    const double h = (b - a) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = a + h * static_cast<double>(i);
    out[n - 1] = b;
    return out;
}

}  // namespace attrition::numerics
