#include "mlpde/stochastic_kernel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mlpde {

double TimeDensity::operator()(double s) const {
    if (!(left < s && s < horizon))
        throw std::invalid_argument("TimeDensity: s outside (left, horizon)");
    return 1.0 / (std::numbers::pi * std::sqrt((horizon - s) * (s - left)));
}

double rho(double t, double s, double horizon) {
    if (!(t >= 0.0 && t < s && s < horizon))
        throw std::invalid_argument("rho: requires 0 <= t < s < horizon");
    return TimeDensity{horizon, t}(s);
}

KernelSample make_kernel_sample(double t,
                                double s,
                                std::span<const double> x,
                                std::span<const double> dw) {
    if (!(s > t)) throw std::invalid_argument("make_kernel_sample: requires s > t");
    if (x.size() != dw.size())
        throw std::invalid_argument("make_kernel_sample: dimension mismatch");
    KernelSample out;
    out.s = s;
    out.x_point.resize(x.size());
    out.z_weight.resize(x.size() + 1);
    out.z_weight[0] = 1.0;
    const double inv_dt = 1.0 / (s - t);
    for (std::size_t j = 0; j < x.size(); ++j) {
        out.x_point[j] = x[j] + dw[j];
        out.z_weight[j + 1] = dw[j] * inv_dt;
    }
    return out;
}

KernelSample StochasticKernel::sample_kernel(RandomStream& stream,
                                             double t,
                                             std::span<const double> x,
                                             double s) const {
    KernelSample out;
    out.s = s;
    out.x_point.resize(x.size());
    out.z_weight.resize(x.size() + 1);
    sample_into(stream, t, x, s, out.x_point, out.z_weight);
    return out;
}

BrownianKernel::BrownianKernel(double horizon) : horizon_(horizon) {
    if (!(horizon > 0.0)) throw std::invalid_argument("BrownianKernel: horizon must be positive");
}

double BrownianKernel::rho(double t, double s) const {
    return mlpde::rho(t, s, horizon_);
}

double BrownianKernel::sample_time(RandomStream& stream, double t) const {
    if (!(t >= 0.0 && t < horizon_))
        throw std::invalid_argument("sample_time: requires 0 <= t < horizon");
    if (!(std::nextafter(t, horizon_) < horizon_))
        throw std::invalid_argument("sample_time: interval has no interior at double precision");
    double s = t + (horizon_ - t) * sample_arcsine(stream);
    // The affine map can round onto an endpoint when the gap is many orders
    // of magnitude below t or the draw is within an ulp of the interval ends;
    // rho and the 1/(s - t) weight need s strictly interior.
    if (s <= t) s = std::nextafter(t, horizon_);
    if (s >= horizon_) s = std::nextafter(horizon_, t);
    return s;
}

void BrownianKernel::sample_into(RandomStream& stream,
                                 double t,
                                 std::span<const double> x,
                                 double s,
                                 std::span<double> x_out,
                                 std::span<double> z_out) const {
    if (!(t >= 0.0 && t < s && s <= horizon_))
        throw std::invalid_argument("sample_into: requires 0 <= t < s <= horizon");
    if (x_out.size() != x.size() || z_out.size() != x.size() + 1)
        throw std::invalid_argument("sample_into: buffer size mismatch");

    std::span<double> dw = z_out.subspan(1);
    gaussian_increment(stream, dw, s - t);
    z_out[0] = 1.0;
    const double inv_dt = 1.0 / (s - t);
    for (std::size_t j = 0; j < x.size(); ++j) {
        x_out[j] = x[j] + dw[j];
        dw[j] *= inv_dt;
    }
}

}  // namespace mlpde
