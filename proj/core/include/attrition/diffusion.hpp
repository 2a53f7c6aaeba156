#pragma once

#include "attrition/function.hpp"

#include <memory>
#include <optional>

namespace attrition {

enum class DiffusionKind { Arithmetic, Geometric, OrnsteinUhlenbeck, Custom };

const char* to_string(DiffusionKind kind) noexcept;

// Coordinate in which grids are laid out uniformly. Positive state spaces use
// log so that a window spanning decades is resolved evenly.
enum class Coordinate { Linear, Log };

struct Window {
    double lo = 0;
    double hi = 0;
};

// dX = mu(X) dt + sigma(X) dB on (state_lo, state_hi), plus the finite window
// used by quadrature, grids and root brackets.
class DiffusionSpec {
public:
    static DiffusionSpec arithmetic(double drift, double volatility);
    static DiffusionSpec geometric(double drift, double volatility);
    static DiffusionSpec ornstein_uhlenbeck(double speed, double mean, double volatility);
    static DiffusionSpec custom(ScalarFunction drift, ScalarFunction volatility, double state_lo,
                                double state_hi, std::optional<Coordinate> coordinate = {});

    DiffusionSpec with_window(Window w) const;
    // sigma is treated as identically zero
    DiffusionSpec without_noise() const;

    DiffusionKind kind() const { return kind_; }
    bool deterministic() const { return deterministic_; }
    Coordinate coordinate() const { return coordinate_; }

    double mu(double x) const { return drift_(x); }
    double sigma(double x) const { return deterministic_ ? 0.0 : volatility_(x); }
    const ScalarFunction& drift() const { return drift_; }
    const ScalarFunction& volatility() const { return volatility_; }

    // Closed-form parameters: arithmetic/geometric use (drift, volatility);
    // Ornstein-Uhlenbeck uses (speed, mean, volatility).
    double drift_parameter() const { return p_[0]; }
    double volatility_parameter() const { return p_[1]; }
    double speed_parameter() const { return p_[0]; }
    double mean_parameter() const { return p_[2]; }

    double state_lo() const { return state_lo_; }
    double state_hi() const { return state_hi_; }

    bool has_window() const { return window_.has_value(); }
    const Window& window() const;
    // midpoint of the window in grid coordinates; normalisation point for
    // scale density and fundamental solutions
    double x_ref() const;

    double to_grid(double x) const;
    double from_grid(double y) const;
    bool in_state_space(double x) const { return x > state_lo_ && x < state_hi_; }

private:
    DiffusionSpec() = default;
    void check_window(const Window& w) const;

    DiffusionKind kind_ = DiffusionKind::Custom;
    ScalarFunction drift_, volatility_;
    double p_[3] = {0, 0, 0};
    double state_lo_ = 0, state_hi_ = 0;
    Coordinate coordinate_ = Coordinate::Linear;
    bool deterministic_ = false;
    std::optional<Window> window_;
};

// S'(x) = exp(-int_{x_ref}^x 2 mu / sigma^2), closed form where one exists,
// adaptive quadrature otherwise.
double scale_density(const DiffusionSpec& spec, double x);
// m'(x) = 2 / (sigma^2 S'(x))
double speed_density(const DiffusionSpec& spec, double x);

// Window whose ends carry reachability weight below `weight` seen from
// `center`: phi(center)/phi(lo) and psi(center)/psi(hi).
Window default_window(const DiffusionSpec& spec, double r, double center, double weight = 1e-10);

// Decreasing (phi) and increasing (psi) solutions of
// 1/2 sigma^2 f'' + mu f' - r f = 0, both normalised to 1 at x_ref.
class FundamentalPair {
public:
    double phi(double x) const;
    double dphi(double x) const;
    double d2phi(double x) const;
    double psi(double x) const;
    double dpsi(double x) const;
    double d2psi(double x) const;
    double log_phi(double x) const;
    double log_psi(double x) const;
    // logarithmic derivatives phi'/phi and psi'/psi
    double phi_slope(double x) const;
    double psi_slope(double x) const;

    double log_scale_density(double x) const;
    double log_speed_density(double x) const;

    // B = (psi' phi - psi phi') / S', constant in x
    double wronskian() const { return wronskian_; }
    double rate() const { return r_; }
    bool closed_form() const;
    const DiffusionSpec& spec() const { return spec_; }

private:
    friend FundamentalPair fundamental_solutions(const DiffusionSpec&, double);
    struct Tables;

    FundamentalPair(DiffusionSpec spec, double r);

    DiffusionSpec spec_;
    double r_ = 0;
    double wronskian_ = 0;
    // closed forms: exponents of phi and psi
    double g_minus_ = 0, g_plus_ = 0;
    std::shared_ptr<const Tables> tables_;
};

FundamentalPair fundamental_solutions(const DiffusionSpec& spec, double r);

// Largest finite-difference slope of f over n points of the window.
double sampled_lipschitz(const ScalarFunction& f, const DiffusionSpec& spec, int n = 2000);

}  // namespace attrition
