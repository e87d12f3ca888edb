#pragma once

#include <cmath>
#include <numbers>

namespace hlob {

// Standard normal density.
[[nodiscard]] inline double norm_pdf(double x) noexcept {
    return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

// Standard normal CDF through erfc, which keeps full relative accuracy in the lower tail.
[[nodiscard]] inline double norm_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

} // namespace hlob
