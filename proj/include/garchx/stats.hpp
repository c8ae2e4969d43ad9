#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "garchx/errors.hpp"

#include <boost/math/distributions/normal.hpp>

namespace garchx::stats {

/// Inverse of the empirical CDF: the ceil(J p)-th smallest value (p in (0,1)).
inline double empirical_quantile(std::vector<double> values, double p) {
    if (values.empty()) throw DomainError("empirical_quantile: no values");
    if (!(p > 0.0) || !(p < 1.0)) throw DomainError("empirical_quantile: p must lie in (0,1)");
    const auto J = values.size();
    auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(J) - 1e-9));
    k = std::clamp<std::size_t>(k, 1, J) - 1;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
    return values[k];
}

/// Share of values strictly above the threshold.
inline double exceedance(const std::vector<double>& values, double threshold) {
    if (values.empty()) return 0.0;
    std::size_t c = 0;
    for (double v : values) c += v > threshold;
    return static_cast<double>(c) / static_cast<double>(values.size());
}

/// Upper 1 - alpha quantile of max(0, Z)^2 with Z standard normal.
inline double maxz_quantile(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 0.5)) throw DomainError("alpha must lie in (0, 0.5)");
    const double z = boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha);
    return z * z;
}

}  // namespace garchx::stats
