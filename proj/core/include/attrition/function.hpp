#pragma once

#include <string>
#include <vector>

namespace attrition {

// Closed-form building blocks for drift, volatility and payoff functions.
//   Constant     c0
//   Affine       c0 + c1 x
//   Polynomial   sum_k c_k x^k
//   Power        c0 + c1 x^c2            (x > 0)
//   Exponential  c0 + c1 exp(c2 x)
//   Softplus     c0 + c1 log(1 + exp(c2 x))
enum class Family { Constant, Affine, Polynomial, Power, Exponential, Softplus };

const char* to_string(Family family) noexcept;
Family family_from_string(const std::string& name);

struct Term {
    Family family = Family::Constant;
    std::vector<double> coef;
};

// A sum of terms with analytic first and second derivatives.
// Default-constructed functions are identically zero.
class ScalarFunction {
public:
    ScalarFunction() = default;
    explicit ScalarFunction(std::vector<Term> terms);

    static ScalarFunction constant(double c);
    static ScalarFunction affine(double intercept, double slope);
    static ScalarFunction polynomial(std::vector<double> coefficients);
    static ScalarFunction power(double shift, double scale, double exponent);
    static ScalarFunction exponential(double shift, double scale, double rate);
    static ScalarFunction softplus(double shift, double scale, double rate);

    double operator()(double x) const;
    double d1(double x) const;
    double d2(double x) const;

    ScalarFunction operator+(const ScalarFunction& other) const;
    ScalarFunction operator*(double k) const;

    bool is_constant() const;
    // Only meaningful when is_constant().
    double constant_value() const;

    const std::vector<Term>& terms() const { return terms_; }
    std::string describe() const;

private:
    std::vector<Term> terms_;
};

}  // namespace attrition
