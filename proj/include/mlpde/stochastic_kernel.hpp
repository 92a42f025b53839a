#pragma once

#include "mlpde/random_kernels.hpp"

#include <memory>
#include <span>
#include <vector>

namespace mlpde {

/// One draw of the kernel pair at intermediate time s: the state point X and
/// the weight vector Z.  Slot 0 of z_weight is identically 1; slots 1..d hold
/// the gradient weights increment / (s - t).
struct KernelSample {
    double s = 0.0;
    std::vector<double> x_point;   // size d
    std::vector<double> z_weight;  // size d + 1
};

/// Arcsine (Beta(1/2, 1/2)) density on (left, horizon), the importance
/// sampler for intermediate times.  Its inverse square-root weight at both
/// endpoints cancels the time singularity of the gradient weights.
struct TimeDensity {
    double horizon = 1.0;
    double left = 0.0;

    /// Density value at s; requires left < s < horizon.
    [[nodiscard]] double operator()(double s) const;
};

/// Density value rho(t, s) on (t, horizon).  Hard error unless
/// 0 <= t < s < horizon.
[[nodiscard]] double rho(double t, double s, double horizon);

/// Assembles the kernel pair from an explicit increment:
/// x_point = x + dw, z_weight = (1, dw / (s - t)).  Exposed so the arithmetic
/// can be pinned without sampling.
[[nodiscard]] KernelSample make_kernel_sample(double t,
                                              double s,
                                              std::span<const double> x,
                                              std::span<const double> dw);

/// Sampling interface the estimator core is written against: an intermediate
/// time density together with the matching state/weight pair.  The estimator
/// itself never assumes the Brownian specialization.
class StochasticKernel {
public:
    virtual ~StochasticKernel() = default;

    [[nodiscard]] virtual double horizon() const = 0;

    /// Density of the intermediate-time sampler at s in (t, horizon).
    [[nodiscard]] virtual double rho(double t, double s) const = 0;

    /// Draws an intermediate time in (t, horizon) from the time density.
    virtual double sample_time(RandomStream& stream, double t) const = 0;

    /// Draws the kernel pair at time s into caller-owned buffers:
    /// x_out (size d) and z_out (size d + 1, slot 0 set to 1).
    virtual void sample_into(RandomStream& stream,
                             double t,
                             std::span<const double> x,
                             double s,
                             std::span<double> x_out,
                             std::span<double> z_out) const = 0;

    /// Allocating convenience wrapper around sample_into.
    [[nodiscard]] KernelSample sample_kernel(RandomStream& stream,
                                             double t,
                                             std::span<const double> x,
                                             double s) const;
};

/// Brownian kernel: X = x + dW with dW ~ N(0, (s - t) I), Z = (1, dW/(s - t)),
/// times drawn from the arcsine density on (t, horizon).
class BrownianKernel final : public StochasticKernel {
public:
    explicit BrownianKernel(double horizon);

    [[nodiscard]] double horizon() const override { return horizon_; }
    [[nodiscard]] double rho(double t, double s) const override;
    double sample_time(RandomStream& stream, double t) const override;
    void sample_into(RandomStream& stream,
                     double t,
                     std::span<const double> x,
                     double s,
                     std::span<double> x_out,
                     std::span<double> z_out) const override;

private:
    double horizon_;
};

}  // namespace mlpde
