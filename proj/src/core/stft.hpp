#pragma once

#include <vector>

#include "tensor.hpp"

namespace peakgen {

// Short-time Fourier magnitude with a periodic Hann window.
// Output is [frames, window_len/2 + 1]; frames = (T - window_len)/hop + 1.
Tensor stft_mag(const std::vector<double>& x, int window_len, int hop);

// Squared Frobenius distance between the magnitudes of two equal-length
// signals. When d_xhat is non-null, accumulates dL/d(xhat) scaled by `scale`.
double stft_sq_distance(const std::vector<double>& x_ref,
                        const std::vector<double>& x_hat, int window_len,
                        int hop, std::vector<double>* d_xhat = nullptr,
                        double scale = 1.0);

}  // namespace peakgen
