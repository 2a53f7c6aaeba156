#include "attrition/function.hpp"

#include "attrition/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace attrition {

namespace {

double softplus_value(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double logistic(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::size_t expected_size(Family f) {
    switch (f) {
        case Family::Constant: return 1;
        case Family::Affine: return 2;
        case Family::Polynomial: return 0;  // any length >= 1
        case Family::Power:
        case Family::Exponential:
        case Family::Softplus: return 3;
    }
    return 0;
}

double power_of(double x, double p) {
    if (x > 0) return std::pow(x, p);
    if (p == std::floor(p)) return std::pow(x, p);
    return std::numeric_limits<double>::quiet_NaN();
}

// value, first and second derivative of one term
void eval_term(const Term& t, double x, double& v, double& d1, double& d2) {
    const auto& c = t.coef;
    switch (t.family) {
        case Family::Constant:
            v = c[0]; d1 = 0; d2 = 0;
            return;
        case Family::Affine:
            v = c[0] + c[1] * x; d1 = c[1]; d2 = 0;
            return;
        case Family::Polynomial: {
            // Horner for value and both derivatives
            v = 0; d1 = 0; d2 = 0;
            for (auto it = c.rbegin(); it != c.rend(); ++it) {
                d2 = d2 * x + 2 * d1;
                d1 = d1 * x + v;
                v = v * x + *it;
            }
            return;
        }
        case Family::Power: {
            const double p = c[2];
            v = c[0] + c[1] * power_of(x, p);
            d1 = c[1] * p * power_of(x, p - 1);
            d2 = c[1] * p * (p - 1) * power_of(x, p - 2);
            return;
        }
        case Family::Exponential: {
            const double e = std::exp(c[2] * x);
            v = c[0] + c[1] * e;
            d1 = c[1] * c[2] * e;
            d2 = c[1] * c[2] * c[2] * e;
            return;
        }
        case Family::Softplus: {
            const double z = c[2] * x;
            const double s = logistic(z);
            v = c[0] + c[1] * softplus_value(z);
            d1 = c[1] * c[2] * s;
            d2 = c[1] * c[2] * c[2] * s * (1 - s);
            return;
        }
    }
}

}  // namespace

const char* to_string(Family family) noexcept {
    switch (family) {
        case Family::Constant: return "constant";
        case Family::Affine: return "affine";
        case Family::Polynomial: return "polynomial";
        case Family::Power: return "power";
        case Family::Exponential: return "exponential";
        case Family::Softplus: return "softplus";
    }
    return "unknown";
}

Family family_from_string(const std::string& name) {
    for (Family f : {Family::Constant, Family::Affine, Family::Polynomial, Family::Power,
                     Family::Exponential, Family::Softplus}) {
        if (name == to_string(f)) return f;
    }
    fail(ErrorKind::Config, "unknown function family '" + name + "'");
}

ScalarFunction::ScalarFunction(std::vector<Term> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_) {
        const auto n = expected_size(t.family);
        if ((n == 0 && t.coef.empty()) || (n != 0 && t.coef.size() != n)) {
            std::ostringstream os;
            os << "family '" << to_string(t.family) << "' takes "
               << (n == 0 ? std::string("at least 1") : std::to_string(n))
               << " coefficients, got " << t.coef.size();
            fail(ErrorKind::Config, os.str());
        }
        for (double v : t.coef) {
            if (!std::isfinite(v)) fail(ErrorKind::Config, "non-finite function coefficient");
        }
    }
}

ScalarFunction ScalarFunction::constant(double c) {
    return ScalarFunction({Term{Family::Constant, {c}}});
}
ScalarFunction ScalarFunction::affine(double intercept, double slope) {
    return ScalarFunction({Term{Family::Affine, {intercept, slope}}});
}
ScalarFunction ScalarFunction::polynomial(std::vector<double> coefficients) {
    return ScalarFunction({Term{Family::Polynomial, std::move(coefficients)}});
}
ScalarFunction ScalarFunction::power(double shift, double scale, double exponent) {
    return ScalarFunction({Term{Family::Power, {shift, scale, exponent}}});
}
ScalarFunction ScalarFunction::exponential(double shift, double scale, double rate) {
    return ScalarFunction({Term{Family::Exponential, {shift, scale, rate}}});
}
ScalarFunction ScalarFunction::softplus(double shift, double scale, double rate) {
    return ScalarFunction({Term{Family::Softplus, {shift, scale, rate}}});
}

double ScalarFunction::operator()(double x) const {
    double sum = 0, v = 0, a = 0, b = 0;
    for (const auto& t : terms_) {
        eval_term(t, x, v, a, b);
        sum += v;
    }
    return sum;
}

double ScalarFunction::d1(double x) const {
    double sum = 0, v = 0, a = 0, b = 0;
    for (const auto& t : terms_) {
        eval_term(t, x, v, a, b);
        sum += a;
    }
    return sum;
}

double ScalarFunction::d2(double x) const {
    double sum = 0, v = 0, a = 0, b = 0;
    for (const auto& t : terms_) {
        eval_term(t, x, v, a, b);
        sum += b;
    }
    return sum;
}

ScalarFunction ScalarFunction::operator+(const ScalarFunction& other) const {
    auto terms = terms_;
    terms.insert(terms.end(), other.terms_.begin(), other.terms_.end());
    return ScalarFunction(std::move(terms));
}

ScalarFunction ScalarFunction::operator*(double k) const {
    auto terms = terms_;
    for (auto& t : terms) {
        switch (t.family) {
            case Family::Constant:
            case Family::Affine:
            case Family::Polynomial:
                for (auto& c : t.coef) c *= k;
                break;
            default:
                t.coef[0] *= k;
                t.coef[1] *= k;
        }
    }
    return ScalarFunction(std::move(terms));
}

bool ScalarFunction::is_constant() const {
    for (const auto& t : terms_) {
        switch (t.family) {
            case Family::Constant: break;
            case Family::Affine:
                if (t.coef[1] != 0) return false;
                break;
            case Family::Polynomial:
                for (std::size_t k = 1; k < t.coef.size(); ++k)
                    if (t.coef[k] != 0) return false;
                break;
            case Family::Power:
                if (t.coef[1] != 0 && t.coef[2] != 0) return false;
                break;
            default:
                if (t.coef[1] != 0 && t.coef[2] != 0) return false;
        }
    }
    return true;
}

double ScalarFunction::constant_value() const { return (*this)(1.0); }

std::string ScalarFunction::describe() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (i) os << " + ";
        os << to_string(terms_[i].family) << '(';
        for (std::size_t k = 0; k < terms_[i].coef.size(); ++k) {
            if (k) os << ", ";
            os << terms_[i].coef[k];
        }
        os << ')';
    }
    return os.str();
}

}  // namespace attrition
