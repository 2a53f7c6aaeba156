#pragma once

#include "attrition/payoffs.hpp"
#include "attrition/strategy.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace attrition {

// Locally consistent birth-death chain on a grid uniform in the diffusion's
// grid coordinate (log for positive state spaces). Upwind drift keeps every
// transition probability nonnegative; the mean increment is exact and the
// variance is sigma^2 dt + O(dt * spacing). The bottom end reflects; value
// solves extend the top end linearly, which is exact for affine values.
struct GridModel {
    std::vector<double> x;        // states
    double y0 = 0;                // grid coordinate of x[0]
    double spacing = 0;           // in the grid coordinate
    double dt = 0;
    std::vector<double> up, down, stay;
    double max_mean_error = 0;    // |E[dY] - mu_Y dt|, worst over states
    double max_variance_excess = 0;  // |Var[dY] - sigma_Y^2 dt| / (dt * spacing)
    Coordinate coordinate = Coordinate::Linear;

    std::size_t size() const { return x.size(); }
    // largest index with x <= level, or npos
    std::size_t index_at_or_below(double level) const;
    double grid_coordinate(std::size_t j) const { return y0 + spacing * static_cast<double>(j); }
    // linear interpolation of grid values in the grid coordinate
    double interpolate(const std::vector<double>& values, double at) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

GridModel build_grid(const GameModel& model, int n_states);

enum class OracleMethod { PolicyIteration, ValueIteration };

struct OracleOptions {
    OracleMethod method = OracleMethod::PolicyIteration;
    int max_iterations = 1000;            // policies, or sweeps for value iteration
    double tolerance = 1e-10;             // times max(1, |l|, max |V|), on the Bellman residual
};

struct SinglePlayerOracle {
    std::vector<double> value;
    std::vector<char> exit;               // 1 where exiting is strictly better
    std::optional<double> threshold;      // largest state in the exit set
    // Vertex of a parabola through the values of the three threshold rules
    // around the grid optimum, read at a state just above; a sub-grid
    // estimate of the continuous threshold.
    std::optional<double> refined_threshold;
    int iterations = 0;
    double bellman_residual = 0;
};

SinglePlayerOracle dp_single_player(const GridModel& grid, const GameModel& model, FirmId firm,
                                    const OracleOptions& options = {});

struct BestResponse {
    std::vector<double> value;            // best-response value before any atom fires
    std::vector<double> value_after_atom; // empty when neither strategy has an atom
    std::vector<char> exit;
    std::vector<double> candidate_value;  // value of the candidate strategy
    double deviation_gain = 0;            // sup over grid (and phases) of value - candidate
    double argmax_x = 0;
    int iterations = 0;
    double bellman_residual = 0;
};

// Best response of `firm` to `opponent`, and the gain over playing `candidate`.
// At most one atom across both strategies.
BestResponse dp_best_response(const GridModel& grid, const GameModel& model, FirmId firm,
                              const Strategy& opponent, const Strategy& candidate = Strategy::never_exit(),
                              const OracleOptions& options = {});

}  // namespace attrition
