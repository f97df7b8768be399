#pragma once

#include <vector>

#include "layers.hpp"
#include "tensor.hpp"

namespace peakgen {

// s_t = |x_t - x_{t-1}|, length T-1. Requires T >= 2.
std::vector<double> slopes(const std::vector<double>& x);

// Softmax over the slopes (max-subtracted for stability) with one zero
// appended at the end so the result is aligned back to length T.
std::vector<double> slope_softmax(const std::vector<double>& s);

// Learnable refinement: alpha_tilde = sigmoid(conv1d(alpha)). The conv must
// be length-preserving (odd kernel, padding = k/2, single channel).
class PeakRefiner {
 public:
  PeakRefiner() = default;
  PeakRefiner(int kernel_size, Rng& rng) { init(kernel_size, rng); }
  void init(int kernel_size, Rng& rng);

  // raw_alpha length T -> refined alpha length T, each entry in (0,1).
  std::vector<double> forward(const std::vector<double>& raw_alpha);
  // d(loss)/d(refined) -> gradient w.r.t. raw_alpha; accumulates parameter
  // gradients.
  std::vector<double> backward(const std::vector<double>& d_refined);

  void collect_params(std::vector<Tensor*>& out) { conv_.collect_params(out); }
  Conv1d& conv() { return conv_; }

 private:
  Conv1d conv_;
  Tensor in_, pre_;           // cached [1,1,T] input and conv output
  std::vector<double> out_;   // cached sigmoid output
};

// Row-wise scaling: out[t, :] = alpha[t] * features[t, :].
// features is [T, d]; alpha length T.
Tensor apply_attention(const Tensor& features, const std::vector<double>& alpha);
// d(loss)/d(out) -> gradients for features (returned) and alpha (accumulated
// into d_alpha).
Tensor apply_attention_backward(const Tensor& d_out, const Tensor& features,
                                const std::vector<double>& alpha,
                                std::vector<double>& d_alpha);

}  // namespace peakgen
