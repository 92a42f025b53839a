#include "mlpde/problem.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

namespace mlpde {

namespace {

void check_shape(int d, double T) {
    if (d < 1) throw std::invalid_argument("problem: dimension must be >= 1");
    if (!(T > 0.0)) throw std::invalid_argument("problem: horizon must be positive");
}

}  // namespace

PdeProblem example_sin_mean(int d, double T) {
    check_shape(d, T);
    PdeProblem p;
    p.d = d;
    p.T = T;
    p.label = "sin_mean";
    const double inv_d = 1.0 / static_cast<double>(d);
    p.g = [inv_d](std::span<const double> x) {
        double sum = 0.0;
        for (double xi : x) sum += xi;
        return std::sin(sum * inv_d);
    };
    p.f = [inv_d](double, std::span<const double>, std::span<const double> w) {
        double sum = 0.0;
        for (double wi : w) sum += wi;
        return std::sin(sum * inv_d);
    };
    return p;
}

PdeProblem example_cos_grad(int d, double T) {
    check_shape(d, T);
    PdeProblem p;
    p.d = d;
    p.T = T;
    p.label = "cos_grad";
    const double inv_d = 1.0 / static_cast<double>(d);
    p.g = [inv_d](std::span<const double> x) {
        double sq = 0.0;
        for (double xi : x) sq += xi * xi;
        return std::sin(sq * inv_d);
    };
    p.f = [](double, std::span<const double>, std::span<const double> w) {
        return std::cos(w[1]);
    };
    return p;
}

PdeProblem linear_probe(int d, double T, std::vector<double> a, double c0) {
    check_shape(d, T);
    if (static_cast<int>(a.size()) != d)
        throw std::invalid_argument("linear_probe: coefficient size must equal d");
    PdeProblem p;
    p.d = d;
    p.T = T;
    p.label = "linear_probe";
    auto coeff = std::make_shared<const std::vector<double>>(std::move(a));
    p.g = [coeff](std::span<const double> x) {
        double dot = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) dot += (*coeff)[j] * x[j];
        return dot;
    };
    p.f = [c0](double, std::span<const double>, std::span<const double>) { return c0; };
    p.exact = [coeff, c0, T, d](double t, std::span<const double> x) {
        EstimateVector u(d);
        double dot = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) dot += (*coeff)[j] * x[j];
        u.slots[0] = dot + c0 * (T - t);
        for (int j = 0; j < d; ++j) u.slots[static_cast<std::size_t>(j) + 1] = (*coeff)[j];
        return u;
    };
    return p;
}

const std::vector<std::string>& problem_labels() {
    static const std::vector<std::string> labels = {"sin_mean", "cos_grad", "linear_probe"};
    return labels;
}

PdeProblem make_problem(const std::string& label, int d, double T) {
    if (label == "sin_mean") return example_sin_mean(d, T);
    if (label == "cos_grad") return example_cos_grad(d, T);
    if (label == "linear_probe")
        return linear_probe(d, T, std::vector<double>(static_cast<std::size_t>(d), 1.0), 1.0);
    throw std::invalid_argument("make_problem: unknown label '" + label + "'");
}

}  // namespace mlpde
