#pragma once

#include <vector>

#include "trafcast/types.hpp"

namespace trafcast {

// Symmetric triangular smoothing kernel: w_k proportional to
// (half_width + 1 - |k|) for |k| <= half_width, normalized to unit mass.
struct SmoothingKernel {
    int half_width = 10;
    int passes = 1;  // repeated-convolution knob, default single pass

    explicit SmoothingKernel(int hw = 10, int n_passes = 1);

    // Unnormalized weight for offset k; 0 outside the support.
    double raw_weight(int k) const;
    // Normalized weight (sum over the full support is 1).
    double weight(int k) const;
};

enum class CausalBoundaryMode { DirichletZero, NeumannHold };

// Acausal convolution. At the series ends the kernel is truncated and
// renormalized over in-range indices, so constants are preserved everywhere.
// Missing samples (NaN) are skipped and the kernel renormalized likewise.
std::vector<double> smooth(const std::vector<double>& series, const SmoothingKernel& kernel);

// Real-time variant: only data up to index t is available. Samples beyond t
// are substituted by 0 (DirichletZero) or the value at t (NeumannHold); the
// kernel mass is not renormalized.
double smooth_causal(const std::vector<double>& series, int t, const SmoothingKernel& kernel,
                     CausalBoundaryMode mode);

}  // namespace trafcast
