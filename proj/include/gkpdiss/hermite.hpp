#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace gkpdiss {

/// Normalized Hermite functions h_0(x) .. h_{n-1}(x) written into `out`.
///
/// Uses the three-term recurrence
///   h_n = sqrt(2/n) x h_{n-1} - sqrt((n-1)/n) h_{n-2}
/// on a rescaled pair so that neither the Gaussian factor nor the polynomial
/// part over/underflows for large n or |x|.
inline void hermite_functions(double x, std::span<double> out) {
    const std::size_t n = out.size();
    if (n == 0) return;
    // h_n(x) = exp(log_scale) * u_n, with u_0 = 1.
    double log_scale = -0.5 * x * x - 0.25 * std::log(std::numbers::pi);
    double prev = 0.0;
    double cur = 1.0;
    out[0] = std::exp(log_scale);
    for (std::size_t k = 1; k < n; ++k) {
        const double kd = static_cast<double>(k);
        const double next = std::sqrt(2.0 / kd) * x * cur - std::sqrt((kd - 1.0) / kd) * prev;
        prev = cur;
        cur = next;
        const double mag = std::abs(cur);
        if (mag > 1e150) {
            const double shift = std::log(mag);
            cur /= mag;
            prev /= mag;
            log_scale += shift;
        }
        out[k] = cur * std::exp(log_scale);
    }
}

} // namespace gkpdiss
