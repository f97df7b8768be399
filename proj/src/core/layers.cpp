#include "layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace peakgen {

// ---------------------------------------------------------------- Linear

Tensor Linear::forward(const Tensor& x) {
  require(x.shape.size() == 2 && x.dim(1) == W.dim(0),
          "linear: input shape " + shape_str(x.shape) + " does not match weights " +
              shape_str(W.shape));
  x_cache = x;
  const int n = x.dim(0), d_out = W.dim(1);
  Tensor y({n, d_out});
  matmul(x.data.data(), W.data.data(), y.data.data(), n, x.dim(1), d_out);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d_out; ++j) y.at(i, j) += b.at(j);
  return y;
}

Tensor Linear::backward(const Tensor& dy) {
  const int n = x_cache.dim(0), d_in = W.dim(0), d_out = W.dim(1);
  require(dy.shape.size() == 2 && dy.dim(0) == n && dy.dim(1) == d_out,
          "linear backward: bad upstream shape");
  // dW += x^T dy ; db += col-sum dy ; dx = dy W^T
  matmul_tn(x_cache.data.data(), dy.data.data(), W.grad.data(), n, d_in, d_out, true);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d_out; ++j) b.grad[static_cast<size_t>(j)] += dy.at(i, j);
  Tensor dx({n, d_in});
  matmul_nt(dy.data.data(), W.data.data(), dx.data.data(), n, d_out, d_in);
  return dx;
}

// ---------------------------------------------------------------- Conv1d

Tensor Conv1d::forward(const Tensor& x) {
  require(x.shape.size() == 2 && x.dim(0) == kernels.dim(1),
          "conv1d: input shape " + shape_str(x.shape) + " does not match kernels " +
              shape_str(kernels.shape));
  const int c_in = x.dim(0), t = x.dim(1);
  const int c_out = kernels.dim(0), k = kernels.dim(2);
  require(t + 2 * padding >= k, "conv1d: input shorter than kernel");
  x_cache = x;
  const int t_out = out_len(t, k, padding, stride);
  Tensor y({c_out, t_out});
  for (int co = 0; co < c_out; ++co) {
    for (int ot = 0; ot < t_out; ++ot) {
      double acc = bias.at(co);
      const int start = ot * stride - padding;
      for (int ci = 0; ci < c_in; ++ci) {
        const double* xr = &x.data[static_cast<size_t>(ci) * t];
        const double* kr = &kernels.data[(static_cast<size_t>(co) * c_in + ci) * k];
        const int j0 = std::max(0, -start);
        const int j1 = std::min(k, t - start);
        for (int j = j0; j < j1; ++j) acc += kr[j] * xr[start + j];
      }
      y.at(co, ot) = acc;
    }
  }
  return y;
}

Tensor Conv1d::backward(const Tensor& dy) {
  const int c_in = x_cache.dim(0), t = x_cache.dim(1);
  const int c_out = kernels.dim(0), k = kernels.dim(2);
  const int t_out = out_len(t, k, padding, stride);
  require(dy.shape.size() == 2 && dy.dim(0) == c_out && dy.dim(1) == t_out,
          "conv1d backward: bad upstream shape");
  Tensor dx({c_in, t});
  for (int co = 0; co < c_out; ++co) {
    for (int ot = 0; ot < t_out; ++ot) {
      const double g = dy.at(co, ot);
      if (g == 0.0) continue;
      bias.grad[static_cast<size_t>(co)] += g;
      const int start = ot * stride - padding;
      for (int ci = 0; ci < c_in; ++ci) {
        const double* xr = &x_cache.data[static_cast<size_t>(ci) * t];
        double* dxr = &dx.data[static_cast<size_t>(ci) * t];
        double* kg = &kernels.grad[(static_cast<size_t>(co) * c_in + ci) * k];
        const double* kr = &kernels.data[(static_cast<size_t>(co) * c_in + ci) * k];
        const int j0 = std::max(0, -start);
        const int j1 = std::min(k, t - start);
        for (int j = j0; j < j1; ++j) {
          kg[j] += g * xr[start + j];
          dxr[start + j] += g * kr[j];
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------- softmax

Tensor softmax_rows(const Tensor& x) {
  require(x.shape.size() == 2, "softmax: expected 2-D input");
  const int n = x.dim(0), d = x.dim(1);
  Tensor y({n, d});
  for (int i = 0; i < n; ++i) {
    double mx = x.at(i, 0);
    for (int j = 1; j < d; ++j) mx = std::max(mx, x.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < d; ++j) {
      const double e = std::exp(x.at(i, j) - mx);
      y.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < d; ++j) y.at(i, j) /= sum;
  }
  return y;
}

Tensor softmax_rows_backward(const Tensor& y, const Tensor& dy) {
  const int n = y.dim(0), d = y.dim(1);
  Tensor dx({n, d});
  for (int i = 0; i < n; ++i) {
    double dot = 0.0;
    for (int j = 0; j < d; ++j) dot += dy.at(i, j) * y.at(i, j);
    for (int j = 0; j < d; ++j) dx.at(i, j) = y.at(i, j) * (dy.at(i, j) - dot);
  }
  return dx;
}

// ---------------------------------------------------------------- activations

Tensor Relu::forward(const Tensor& x) {
  x_cache = x;
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor Relu::backward(const Tensor& dy) {
  Tensor dx = dy;
  for (size_t i = 0; i < dx.data.size(); ++i)
    if (x_cache.data[i] <= 0.0) dx.data[i] = 0.0;
  return dx;
}

Tensor Sigmoid::forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
  y_cache = y;
  return y;
}

Tensor Sigmoid::backward(const Tensor& dy) {
  Tensor dx = dy;
  for (size_t i = 0; i < dx.data.size(); ++i) {
    const double s = y_cache.data[i];
    dx.data[i] *= s * (1.0 - s);
  }
  return dx;
}

Tensor Dropout::forward(const Tensor& x, bool training, Rng& rng) {
  require(p >= 0.0 && p < 1.0, "dropout: p must be in [0,1)");
  if (!training || p == 0.0) {
    mask.assign(x.data.size(), 1);
    scale_cache = 1.0;
    return x;
  }
  mask.resize(x.data.size());
  Tensor y = x;
  scale_cache = 1.0 / (1.0 - p);
  for (size_t i = 0; i < y.data.size(); ++i) {
    const bool keep = rng.uniform() >= p;
    mask[i] = keep ? 1 : 0;
    y.data[i] = keep ? y.data[i] * scale_cache : 0.0;
  }
  return y;
}

Tensor Dropout::backward(const Tensor& dy) {
  Tensor dx = dy;
  for (size_t i = 0; i < dx.data.size(); ++i)
    dx.data[i] = mask[i] ? dx.data[i] * scale_cache : 0.0;
  return dx;
}

// ---------------------------------------------------------------- MHA

void MultiHeadAttention::init(int d, int n_heads, Rng& rng) {
  require_config(n_heads > 0 && d % n_heads == 0,
                 "attention: model dim must be divisible by head count");
  d_model = d;
  heads = n_heads;
  wq.init(d, d, rng);
  wk.init(d, d, rng);
  wv.init(d, d, rng);
  wo.init(d, d, rng);
}

Tensor MultiHeadAttention::forward(const Tensor& q, const Tensor& k, const Tensor& v) {
  require(q.shape.size() == 2 && q.dim(1) == d_model, "attention: bad Q shape");
  require(k.shape.size() == 2 && k.dim(1) == d_model, "attention: bad K shape");
  require(v.shape.size() == 2 && v.dim(1) == d_model && v.dim(0) == k.dim(0),
          "attention: bad V shape");
  const int lq = q.dim(0), lk = k.dim(0);
  const int dk = d_model / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));

  q_in = wq.forward(q);
  k_in = wk.forward(k);
  v_in = wv.forward(v);

  attn.resize({heads, lq, lk});
  concat.resize({lq, d_model});
  std::vector<double> scores(static_cast<size_t>(lq) * lk);
  for (int h = 0; h < heads; ++h) {
    const int off = h * dk;
    for (int i = 0; i < lq; ++i) {
      for (int j = 0; j < lk; ++j) {
        double acc = 0.0;
        for (int c = 0; c < dk; ++c) acc += q_in.at(i, off + c) * k_in.at(j, off + c);
        scores[static_cast<size_t>(i) * lk + j] = acc * inv_sqrt;
      }
    }
    // stabilized row softmax
    for (int i = 0; i < lq; ++i) {
      double* row = &scores[static_cast<size_t>(i) * lk];
      double mx = row[0];
      for (int j = 1; j < lk; ++j) mx = std::max(mx, row[j]);
      double sum = 0.0;
      for (int j = 0; j < lk; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
      }
      for (int j = 0; j < lk; ++j) attn.at(h, i, j) = row[j] / sum;
    }
    for (int i = 0; i < lq; ++i) {
      for (int c = 0; c < dk; ++c) {
        double acc = 0.0;
        for (int j = 0; j < lk; ++j) acc += attn.at(h, i, j) * v_in.at(j, off + c);
        concat.at(i, off + c) = acc;
      }
    }
  }
  return wo.forward(concat);
}

void MultiHeadAttention::backward(const Tensor& dy, Tensor& dq, Tensor& dk, Tensor& dv) {
  const int lq = q_in.dim(0), lk = k_in.dim(0);
  const int dkh = d_model / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dkh));

  Tensor dconcat = wo.backward(dy);
  Tensor dq_proj({lq, d_model}), dk_proj({lk, d_model}), dv_proj({lk, d_model});

  std::vector<double> dattn(static_cast<size_t>(lq) * lk);
  std::vector<double> dscore(static_cast<size_t>(lq) * lk);
  for (int h = 0; h < heads; ++h) {
    const int off = h * dkh;
    // dV_h = A^T dO_h ; dA = dO_h V_h^T
    for (int i = 0; i < lq; ++i)
      for (int j = 0; j < lk; ++j) {
        double acc = 0.0;
        for (int c = 0; c < dkh; ++c) acc += dconcat.at(i, off + c) * v_in.at(j, off + c);
        dattn[static_cast<size_t>(i) * lk + j] = acc;
      }
    for (int j = 0; j < lk; ++j)
      for (int c = 0; c < dkh; ++c) {
        double acc = 0.0;
        for (int i = 0; i < lq; ++i) acc += attn.at(h, i, j) * dconcat.at(i, off + c);
        dv_proj.at(j, off + c) += acc;
      }
    // softmax backward per row
    for (int i = 0; i < lq; ++i) {
      double dot = 0.0;
      for (int j = 0; j < lk; ++j)
        dot += dattn[static_cast<size_t>(i) * lk + j] * attn.at(h, i, j);
      for (int j = 0; j < lk; ++j)
        dscore[static_cast<size_t>(i) * lk + j] =
            attn.at(h, i, j) * (dattn[static_cast<size_t>(i) * lk + j] - dot) * inv_sqrt;
    }
    // dQ_h = dS K_h ; dK_h = dS^T Q_h
    for (int i = 0; i < lq; ++i)
      for (int c = 0; c < dkh; ++c) {
        double acc = 0.0;
        for (int j = 0; j < lk; ++j)
          acc += dscore[static_cast<size_t>(i) * lk + j] * k_in.at(j, off + c);
        dq_proj.at(i, off + c) += acc;
      }
    for (int j = 0; j < lk; ++j)
      for (int c = 0; c < dkh; ++c) {
        double acc = 0.0;
        for (int i = 0; i < lq; ++i)
          acc += dscore[static_cast<size_t>(i) * lk + j] * q_in.at(i, off + c);
        dk_proj.at(j, off + c) += acc;
      }
  }
  dq = wq.backward(dq_proj);
  dk = wk.backward(dk_proj);
  dv = wv.backward(dv_proj);
}

Tensor MultiHeadAttention::backward_self(const Tensor& dy) {
  Tensor dq, dk, dv;
  backward(dy, dq, dk, dv);
  Tensor dx = dq;
  for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dk.data[i] + dv.data[i];
  return dx;
}

// ---------------------------------------------------------------- Adam

void Adam::step(const std::vector<Tensor*>& params) {
  if (m.size() != params.size()) {
    m.assign(params.size(), {});
    v.assign(params.size(), {});
    for (size_t i = 0; i < params.size(); ++i) {
      m[i].assign(params[i]->size(), 0.0);
      v[i].assign(params[i]->size(), 0.0);
    }
  }
  ++step_count;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    for (size_t j = 0; j < p.size(); ++j) {
      const double g = p.grad[j];
      m[i][j] = beta1 * m[i][j] + (1.0 - beta1) * g;
      v[i][j] = beta2 * v[i][j] + (1.0 - beta2) * g * g;
      const double mh = m[i][j] / bc1;
      const double vh = v[i][j] / bc2;
      p.data[j] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
}

void Adam::reset() {
  m.clear();
  v.clear();
  step_count = 0;
}

}  // namespace peakgen
