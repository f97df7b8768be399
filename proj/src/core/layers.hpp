#pragma once

#include <vector>

#include "tensor.hpp"

namespace peakgen {

// Layer conventions:
//  - forward() caches whatever backward() needs, so a layer instance serves
//    one sample/sequence at a time (clone the model for batch parallelism).
//  - backward(dy) accumulates parameter gradients and returns dx.
//  - collect_params() appends parameters in a fixed order; checkpointing and
//    the optimizer rely on that order being stable.

struct Linear {
  Tensor W;  // [d_in, d_out]
  Tensor b;  // [d_out]
  Tensor x_cache;

  void init(int d_in, int d_out, Rng& rng) {
    W.resize({d_in, d_out});
    W.init_xavier(rng, d_in, d_out);
    b.resize({d_out});
  }

  // x: [N, d_in] -> [N, d_out]
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

  void collect_params(std::vector<Tensor*>& out) {
    out.push_back(&W);
    out.push_back(&b);
  }
};

struct Conv1d {
  Tensor kernels;  // [C_out, C_in, k]
  Tensor bias;     // [C_out]
  int stride = 1;
  int padding = 0;
  Tensor x_cache;

  void init(int c_in, int c_out, int k, int pad, int str, Rng& rng) {
    kernels.resize({c_out, c_in, k});
    kernels.init_xavier(rng, c_in * k, c_out * k);
    bias.resize({c_out});
    padding = pad;
    stride = str;
  }

  static int out_len(int t, int k, int padding, int stride) {
    return (t + 2 * padding - k) / stride + 1;
  }

  // x: [C_in, T] -> [C_out, T_out], zero-padded cross-correlation.
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

  void collect_params(std::vector<Tensor*>& out) {
    out.push_back(&kernels);
    out.push_back(&bias);
  }
};

// Row-wise softmax over the last dimension of a [N, d] tensor.
Tensor softmax_rows(const Tensor& x);
// Backward given the softmax output y and upstream dy.
Tensor softmax_rows_backward(const Tensor& y, const Tensor& dy);

struct Relu {
  Tensor x_cache;
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
};

struct Sigmoid {
  Tensor y_cache;
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
};

// Inverted dropout: zeroes with probability p and scales survivors by
// 1/(1-p) while training; identity at inference.
struct Dropout {
  double p = 0.0;
  std::vector<uint8_t> mask;
  double scale_cache = 1.0;  // survivor scaling used by the last forward

  Tensor forward(const Tensor& x, bool training, Rng& rng);
  Tensor backward(const Tensor& dy);
};

// Multi-head attention over [L, d] sequences: per head
// softmax(Q K^T / sqrt(d_k)) V, heads concatenated, then a linear output
// projection so heads recombine.
struct MultiHeadAttention {
  int heads = 1;
  int d_model = 0;
  Linear wq, wk, wv, wo;

  // caches
  Tensor q_in, k_in, v_in;    // projected Q, K, V [L, d]
  Tensor attn;                // [heads, Lq, Lk] softmax rows
  Tensor concat;              // [Lq, d]

  void init(int d, int n_heads, Rng& rng);

  Tensor forward(const Tensor& q, const Tensor& k, const Tensor& v);
  // Self-attention: q = k = v = x; backward sums the three input grads.
  Tensor forward_self(const Tensor& x) { return forward(x, x, x); }

  // Returns (dq, dk, dv) stacked caller-side; for self-attention use
  // backward_self which sums them.
  void backward(const Tensor& dy, Tensor& dq, Tensor& dk, Tensor& dv);
  Tensor backward_self(const Tensor& dy);

  void collect_params(std::vector<Tensor*>& out) {
    wq.collect_params(out);
    wk.collect_params(out);
    wv.collect_params(out);
    wo.collect_params(out);
  }
};

// Adam with bias correction. Moment arrays are lazily shaped to match the
// attached parameter list on the first step.
struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long step_count = 0;
  std::vector<std::vector<double>> m, v;

  explicit Adam(double learning_rate = 1e-3) : lr(learning_rate) {}

  void step(const std::vector<Tensor*>& params);
  void reset();
};

}  // namespace peakgen
