#include "mlpde/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mlpde {

namespace {

constexpr double kPi = std::numbers::pi;

void check_order(int n) {
    if (n < 1) throw std::invalid_argument("quadrature: order must be >= 1");
}

}  // namespace

Quadrature gauss_hermite(int n) {
    check_order(n);
    Quadrature q;
    q.nodes.resize(static_cast<std::size_t>(n));
    q.weights.resize(static_cast<std::size_t>(n));

    const double pim4 = 1.0 / std::pow(kPi, 0.25);
    const int half = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < half; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(n, 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * q.nodes[static_cast<std::size_t>(n - 1)];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * q.nodes[static_cast<std::size_t>(n - 2)];
        } else {
            z = 2.0 * z - q.nodes[static_cast<std::size_t>(n - i + 1)];
        }
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
                     std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        q.nodes[static_cast<std::size_t>(n - 1 - i)] = z;
        q.nodes[static_cast<std::size_t>(i)] = -z;
        const double w = 2.0 / (pp * pp);
        q.weights[static_cast<std::size_t>(n - 1 - i)] = w;
        q.weights[static_cast<std::size_t>(i)] = w;
    }
    if (n % 2 == 1) q.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return q;
}

Quadrature gauss_legendre_01(int n) {
    check_order(n);
    Quadrature q;
    q.nodes.resize(static_cast<std::size_t>(n));
    q.weights.resize(static_cast<std::size_t>(n));

    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - z * z) * pp * pp);
        q.nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
        q.nodes[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (1.0 + z);
        q.weights[static_cast<std::size_t>(i)] = 0.5 * w;
        q.weights[static_cast<std::size_t>(n - 1 - i)] = 0.5 * w;
    }
    return q;
}

std::vector<double> chebyshev_lobatto_points(int n, double a, double b) {
    if (n < 2) throw std::invalid_argument("chebyshev_lobatto_points: need at least 2 points");
    std::vector<double> x(static_cast<std::size_t>(n));
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int j = 0; j < n; ++j)
        x[static_cast<std::size_t>(j)] = mid - half * std::cos(kPi * j / (n - 1));
    x.front() = a;
    x.back() = b;
    return x;
}

std::vector<double> chebyshev_lobatto_weights(int n) {
    if (n < 2) throw std::invalid_argument("chebyshev_lobatto_weights: need at least 2 points");
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        double wj = (j % 2 == 0) ? 1.0 : -1.0;
        if (j == 0 || j == n - 1) wj *= 0.5;
        w[static_cast<std::size_t>(j)] = wj;
    }
    return w;
}

std::vector<double> chebyshev_gauss_points(int n, double a, double b) {
    check_order(n);
    std::vector<double> x(static_cast<std::size_t>(n));
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int j = 0; j < n; ++j)
        x[static_cast<std::size_t>(j)] = mid - half * std::cos(kPi * (2.0 * j + 1.0) / (2.0 * n));
    return x;
}

std::vector<double> chebyshev_gauss_weights(int n) {
    check_order(n);
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double theta = kPi * (2.0 * j + 1.0) / (2.0 * n);
        w[static_cast<std::size_t>(j)] = ((j % 2 == 0) ? 1.0 : -1.0) * std::sin(theta);
    }
    return w;
}

void barycentric_coeffs(std::span<const double> nodes,
                        std::span<const double> weights,
                        double y,
                        std::span<double> out) {
    if (nodes.size() != weights.size() || nodes.size() != out.size())
        throw std::invalid_argument("barycentric_coeffs: size mismatch");
    double denom = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double dy = y - nodes[j];
        if (dy == 0.0) {
            for (std::size_t k = 0; k < out.size(); ++k) out[k] = 0.0;
            out[j] = 1.0;
            return;
        }
        out[j] = weights[j] / dy;
        denom += out[j];
    }
    for (std::size_t j = 0; j < out.size(); ++j) out[j] /= denom;
}

double barycentric_eval(std::span<const double> nodes,
                        std::span<const double> weights,
                        std::span<const double> values,
                        double y) {
    double num = 0.0;
    double denom = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double dy = y - nodes[j];
        if (dy == 0.0) return values[j];
        const double c = weights[j] / dy;
        num += c * values[j];
        denom += c;
    }
    return num / denom;
}

}  // namespace mlpde
