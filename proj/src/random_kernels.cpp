#include "mlpde/random_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mlpde {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline void absorb(std::uint64_t& hi, std::uint64_t& lo, std::uint64_t word) {
    lo = mix64(lo ^ word);
    hi = mix64(hi + lo + 0x2D358DCCAA6C78A5ull);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, RvCounter* counter)
    : key_hi_(mix64(seed + 0x6A09E667F3BCC909ull)),
      key_lo_(mix64(seed ^ kGolden)),
      counter_(counter) {}

RandomStream RandomStream::derive_child(std::int32_t level,
                                        std::int64_t branch,
                                        StreamRole role) const {
    std::uint64_t hi = key_hi_;
    std::uint64_t lo = key_lo_;
    absorb(hi, lo, 0xA0761D6478BD642Full ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(level)));
    absorb(hi, lo, 0xE7037ED1A0B428DBull ^ static_cast<std::uint64_t>(branch));
    absorb(hi, lo, 0x8EBC6AF09C88C6E3ull ^ static_cast<std::uint64_t>(role));
    return RandomStream(hi, lo, counter_);
}

std::uint64_t RandomStream::next_u64() {
    std::uint64_t z = key_lo_ + cursor_++ * kGolden;
    z = mix64(z ^ key_hi_);
    return mix64(z + key_hi_);
}

double RandomStream::next_unit_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t derive_seed(std::uint64_t root_seed, std::uint64_t index) {
    return mix64(mix64(root_seed + kGolden) ^ (index * 0xD6E8FEB86659FD93ull + 1));
}

double sample_arcsine(RandomStream& stream) {
    const double u = stream.next_unit_open();
    const double s = std::sin(0.5 * std::numbers::pi * u);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const double r = std::clamp(s * s, eps, 1.0 - eps);
    if (RvCounter* c = stream.counter()) c->add(1);
    return r;
}

void gaussian_increment(RandomStream& stream, std::span<double> out, double dt) {
    if (dt < 0.0) throw std::invalid_argument("gaussian_increment: negative time step");
    const double scale = std::sqrt(dt);
    for (double& z : out) z = scale * inverse_normal_cdf(stream.next_unit_open());
    if (RvCounter* c = stream.counter()) c->add(out.size());
}

std::vector<double> gaussian_increment(RandomStream& stream, int d, double dt) {
    if (d < 0) throw std::invalid_argument("gaussian_increment: negative dimension");
    std::vector<double> out(static_cast<std::size_t>(d));
    gaussian_increment(stream, out, dt);
    return out;
}

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inverse_normal_cdf: p outside (0, 1)");

    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                  6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den =
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                  3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }

    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double x;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
        x = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        x = num / den;
    }
    return (q < 0.0) ? -x : x;
}

}  // namespace mlpde
