#include "trafcast/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trafcast {

SmoothingKernel::SmoothingKernel(int hw, int n_passes) : half_width(hw), passes(n_passes) {
    if (hw < 1) throw std::invalid_argument("kernel half_width must be >= 1");
    if (n_passes < 1) throw std::invalid_argument("kernel passes must be >= 1");
}

double SmoothingKernel::raw_weight(int k) const {
    const int a = std::abs(k);
    return a <= half_width ? static_cast<double>(half_width + 1 - a) : 0.0;
}

double SmoothingKernel::weight(int k) const {
    // Total raw mass: (hw+1) + 2 * sum_{j=1..hw} (hw+1-j) = (hw+1)^2
    const double total = static_cast<double>(half_width + 1) * (half_width + 1);
    return raw_weight(k) / total;
}

namespace {

std::vector<double> smooth_once(const std::vector<double>& series, const SmoothingKernel& kernel) {
    const int n = static_cast<int>(series.size());
    std::vector<double> out(series.size());
    for (int t = 0; t < n; ++t) {
        double acc = 0.0;
        double mass = 0.0;
        for (int k = -kernel.half_width; k <= kernel.half_width; ++k) {
            const int s = t + k;
            if (s < 0 || s >= n) continue;
            const double x = series[s];
            if (is_missing(x)) continue;
            const double w = kernel.raw_weight(k);
            acc += w * x;
            mass += w;
        }
        out[t] = mass > 0.0 ? acc / mass : missing_value();
    }
    return out;
}

}  // namespace

std::vector<double> smooth(const std::vector<double>& series, const SmoothingKernel& kernel) {
    std::vector<double> out = smooth_once(series, kernel);
    for (int p = 1; p < kernel.passes; ++p) out = smooth_once(out, kernel);
    return out;
}

double smooth_causal(const std::vector<double>& series, int t, const SmoothingKernel& kernel,
                     CausalBoundaryMode mode) {
    if (t < 0 || t >= static_cast<int>(series.size()))
        throw std::out_of_range("smooth_causal index out of range");

    // Past-and-present samples plus a substituted horizon; substitution
    // supplies the kernel mass, so no renormalization on the right.
    const int extent = kernel.half_width * kernel.passes;
    const double held = mode == CausalBoundaryMode::NeumannHold ? series[t] : 0.0;
    std::vector<double> extended(static_cast<size_t>(t + 1 + extent));
    for (int s = 0; s <= t; ++s) extended[s] = series[s];
    for (int s = t + 1; s <= t + extent; ++s) extended[s] = held;

    for (int p = 0; p < kernel.passes; ++p) extended = smooth_once(extended, kernel);
    return extended[t];
}

}  // namespace trafcast
