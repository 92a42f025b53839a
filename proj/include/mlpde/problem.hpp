#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mlpde {

/// Value-and-gradient vector in R^{d+1}: slot 0 approximates the solution
/// value, slots 1..d its spatial gradient.
struct EstimateVector {
    std::vector<double> slots;

    EstimateVector() = default;
    explicit EstimateVector(int d) : slots(static_cast<std::size_t>(d) + 1, 0.0) {}

    [[nodiscard]] double value() const { return slots.at(0); }
    [[nodiscard]] std::span<const double> gradient() const {
        return std::span<const double>(slots).subspan(1);
    }
    [[nodiscard]] int dim() const { return static_cast<int>(slots.size()) - 1; }
};

/// Semilinear terminal-value problem on [0, T] x R^d:
///   nonlinearity f(t, x, w) acting on the value-and-gradient vector w,
///   terminal condition g(x).
/// `exact` is non-null only when the solution is known in closed form.
struct PdeProblem {
    int d = 1;
    double T = 1.0;
    std::string label;
    std::function<double(std::span<const double>)> g;
    std::function<double(double, std::span<const double>, std::span<const double>)> f;
    std::function<EstimateVector(double, std::span<const double>)> exact;
};

/// f(t, x, w) = sin((w_0 + ... + w_d) / d), g(x) = sin((x_1 + ... + x_d) / d).
[[nodiscard]] PdeProblem example_sin_mean(int d, double T);

/// f(t, x, w) = cos(w_1), a nonlinearity in the first gradient slot only;
/// g(x) = sin(|x|^2 / d).
[[nodiscard]] PdeProblem example_cos_grad(int d, double T);

/// f constant equal to c0, g(x) = a . x.  Solves in closed form to
/// value a . x + c0 (T - t) with constant gradient a; used as an exactly
/// checkable probe.
[[nodiscard]] PdeProblem linear_probe(int d, double T, std::vector<double> a, double c0);

/// Registered problem labels, in registry order.
[[nodiscard]] const std::vector<std::string>& problem_labels();

/// Builds a registered problem by label.  linear_probe defaults to a = ones,
/// c0 = 1.  Unknown labels and non-positive d or T are hard errors.
[[nodiscard]] PdeProblem make_problem(const std::string& label, int d, double T);

}  // namespace mlpde
