#include "plepi/rng.hpp"

#include <cmath>
#include <numbers>

namespace plepi {

double standard_normal(Rng& rng) noexcept {
    // Box-Muller, one draw per call.
    double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double gamma_draw(Rng& rng, double shape) {
    // Marsaglia-Tsang; shape < 1 boosted via U^(1/shape).
    if (shape < 1.0) {
        const double u = std::max(uniform01(rng), 1e-300);
        return gamma_draw(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = standard_normal(rng);
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = uniform01(rng);
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(std::max(u, 1e-300)) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::uint64_t poisson_draw(Rng& rng, double mean) {
    if (mean <= 0.0) return 0;
    if (mean > 60.0) {
        const double x = std::round(mean + std::sqrt(mean) * standard_normal(rng));
        return x < 0.0 ? 0 : static_cast<std::uint64_t>(x);
    }
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double p = uniform01(rng);
    while (p > limit) {
        ++k;
        p *= uniform01(rng);
    }
    return k;
}

}  // namespace plepi
