#pragma once

#include <span>
#include <vector>

namespace mlpde {

/// Nodes and weights of a one-dimensional quadrature rule.
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Hermite rule of order n for the weight exp(-x^2) on the real line;
/// weights sum to sqrt(pi).
[[nodiscard]] Quadrature gauss_hermite(int n);

/// Gauss-Legendre rule of order n mapped to [0, 1]; weights sum to 1.
[[nodiscard]] Quadrature gauss_legendre_01(int n);

/// Chebyshev points of the second kind (endpoints included) on [a, b],
/// ascending.
[[nodiscard]] std::vector<double> chebyshev_lobatto_points(int n, double a, double b);

/// Barycentric weights matching chebyshev_lobatto_points.
[[nodiscard]] std::vector<double> chebyshev_lobatto_weights(int n);

/// Chebyshev roots (no endpoints) on [a, b], ascending.
[[nodiscard]] std::vector<double> chebyshev_gauss_points(int n, double a, double b);

/// Barycentric weights matching chebyshev_gauss_points.
[[nodiscard]] std::vector<double> chebyshev_gauss_weights(int n);

/// Writes the barycentric combination coefficients for interpolation at y
/// into `out` (same size as nodes): the interpolant is sum_j out[j] f(x_j).
/// Exact node hits yield a one-hot vector.
void barycentric_coeffs(std::span<const double> nodes,
                        std::span<const double> weights,
                        double y,
                        std::span<double> out);

/// Interpolates the values at y using precomputed barycentric weights.
[[nodiscard]] double barycentric_eval(std::span<const double> nodes,
                                      std::span<const double> weights,
                                      std::span<const double> values,
                                      double y);

}  // namespace mlpde
