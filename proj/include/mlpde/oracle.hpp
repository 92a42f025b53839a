#pragma once

#include "mlpde/problem.hpp"
#include "mlpde/random_kernels.hpp"

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mlpde {

/// Discretization of the deterministic reference solver: quadrature orders,
/// Picard iteration count, and the interpolation grid for the iterates.
struct QuadratureGrid {
    int hermite_order = 40;   // Gauss-Hermite order per space dimension
    int time_order = 64;      // Gauss-Legendre order for the time integral
    int picard_levels = 20;   // fixed-point iterations
    int space_points = 48;    // Chebyshev points per space dimension
    int time_slices = 24;     // Chebyshev slices in time
    double box_sigmas = 6.0;  // spatial box half-width in units of sqrt(T - t)
    double tol = 1e-8;        // final-update tolerance; <= 0 disables the check
};

/// Reference values at the requested points plus the sup-norm update of each
/// Picard iteration (a direct read on how converged the fixed point is).
struct OracleResult {
    std::vector<EstimateVector> values;
    std::vector<double> update_norms;
};

class OracleConvergenceError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

using EvalPoint = std::pair<double, std::vector<double>>;

/**
 * Deterministic fixed-point reference for d <= 2.
 *
 * Iterates the integral form of the problem: u^(k+1)(t, x) equals the
 * terminal expectation E[g(X_T) Z_T] plus the time integral of
 * E[f(r, X_r, u^(k)(r, X_r)) Z_r].  Iterates live on a Chebyshev tensor grid
 * (slices in time, points per space dimension, clamped outside the box);
 * Gaussian expectations use Gauss-Hermite blur, the time integral uses
 * Gauss-Legendre after the arcsine substitution r = t + (T - t) sin^2(pi v/2),
 * which removes the square-root endpoint behavior.  The terminal expectation
 * evaluates g directly at the Gauss-Hermite points, so problems with
 * polynomial g of low degree come out exact to rounding.
 *
 * Throws OracleConvergenceError when the final update exceeds grid.tol.
 */
[[nodiscard]] OracleResult picard_solve(const PdeProblem& problem,
                                        const QuadratureGrid& grid,
                                        const std::vector<EvalPoint>& eval_points);

/**
 * Plain nested Monte-Carlo evaluation of the depth-truncated iterates: no
 * telescoping, `samples` draws per level, cost samples^depth.  Intended for
 * spot checks beyond the deterministic solver's dimension limit; depth is
 * capped at 3.
 */
[[nodiscard]] EstimateVector nested_mc_reference(RandomStream stream,
                                                 const PdeProblem& problem,
                                                 double t,
                                                 std::span<const double> x,
                                                 int depth,
                                                 int samples);

}  // namespace mlpde
