#include "peak_attention.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"

namespace peakgen {

std::vector<double> slopes(const std::vector<double>& x) {
  require(x.size() >= 2, "slopes needs at least two samples");
  std::vector<double> s(x.size() - 1);
  for (size_t t = 1; t < x.size(); ++t) s[t - 1] = std::fabs(x[t] - x[t - 1]);
  return s;
}

std::vector<double> slope_softmax(const std::vector<double>& s) {
  require(!s.empty(), "slope_softmax needs a non-empty input");
  const double m = *std::max_element(s.begin(), s.end());
  std::vector<double> alpha(s.size() + 1, 0.0);
  double z = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    alpha[i] = std::exp(s[i] - m);
    z += alpha[i];
  }
  const double inv = 1.0 / z;
  for (size_t i = 0; i < s.size(); ++i) alpha[i] *= inv;
  return alpha;  // trailing zero keeps length T
}

void PeakRefiner::init(int kernel_size, Rng& rng) {
  require_config(kernel_size % 2 == 1, "refine kernel size must be odd");
  conv_.init(1, 1, kernel_size, kernel_size / 2, /*stride=*/1, rng);
  conv_.kernels.init_uniform(rng, -0.1, 0.1);  // bias stays zero
}

std::vector<double> PeakRefiner::forward(const std::vector<double>& raw_alpha) {
  const int t = static_cast<int>(raw_alpha.size());
  in_.resize({1, t});
  std::copy(raw_alpha.begin(), raw_alpha.end(), in_.data.begin());
  pre_ = conv_.forward(in_);
  require(pre_.size() == static_cast<size_t>(t),
          "refine conv must preserve length");
  out_.resize(t);
  for (int i = 0; i < t; ++i) out_[i] = 1.0 / (1.0 + std::exp(-pre_.data[i]));
  return out_;
}

std::vector<double> PeakRefiner::backward(const std::vector<double>& d_refined) {
  require(d_refined.size() == out_.size(), "refine backward length mismatch");
  Tensor d_pre;
  d_pre.resize(pre_.shape);
  for (size_t i = 0; i < out_.size(); ++i) {
    d_pre.data[i] = d_refined[i] * out_[i] * (1.0 - out_[i]);
  }
  Tensor d_in = conv_.backward(d_pre);
  return std::vector<double>(d_in.data.begin(), d_in.data.end());
}

Tensor apply_attention(const Tensor& features, const std::vector<double>& alpha) {
  require(features.shape.size() == 2, "apply_attention expects [T,d] features");
  const int t = features.shape[0], d = features.shape[1];
  require(static_cast<size_t>(t) == alpha.size(),
          "attention length mismatch with features");
  Tensor out;
  out.resize({t, d});
  for (int i = 0; i < t; ++i) {
    const double a = alpha[i];
    for (int j = 0; j < d; ++j) out.at(i, j) = a * features.at(i, j);
  }
  return out;
}

Tensor apply_attention_backward(const Tensor& d_out, const Tensor& features,
                                const std::vector<double>& alpha,
                                std::vector<double>& d_alpha) {
  const int t = features.shape[0], d = features.shape[1];
  require(d_out.shape == features.shape, "attention backward shape mismatch");
  if (d_alpha.size() != alpha.size()) d_alpha.assign(alpha.size(), 0.0);
  Tensor d_feat;
  d_feat.resize({t, d});
  for (int i = 0; i < t; ++i) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
      d_feat.at(i, j) = alpha[i] * d_out.at(i, j);
      acc += d_out.at(i, j) * features.at(i, j);
    }
    d_alpha[i] += acc;
  }
  return d_feat;
}

}  // namespace peakgen
