#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "common.hpp"
#include "rng.hpp"

namespace peakgen {

// Dense row-major tensor of doubles with a gradient slot of the same shape.
// Training code accumulates into grad and zeroes it between optimizer steps.
struct Tensor {
  std::vector<double> data;
  std::vector<int> shape;
  std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) { resize(std::move(s)); }

  void resize(std::vector<int> s) {
    shape = std::move(s);
    size_t n = 1;
    for (int d : shape) {
      require(d > 0, "tensor dimensions must be positive");
      n *= static_cast<size_t>(d);
    }
    data.assign(n, 0.0);
    grad.assign(n, 0.0);
  }

  size_t size() const { return data.size(); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  double& at(int i) { return data[static_cast<size_t>(i)]; }
  double at(int i) const { return data[static_cast<size_t>(i)]; }
  double& at(int i, int j) { return data[static_cast<size_t>(i) * shape[1] + j]; }
  double at(int i, int j) const { return data[static_cast<size_t>(i) * shape[1] + j]; }
  double& at(int i, int j, int k) {
    return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
  }
  double at(int i, int j, int k) const {
    return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
  }

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  void init_uniform(Rng& rng, double lo, double hi) {
    for (double& v : data) v = rng.uniform(lo, hi);
  }

  void init_normal(Rng& rng, double mean, double stddev) {
    for (double& v : data) v = rng.normal(mean, stddev);
  }

  // Xavier/Glorot uniform for a [fan_in, fan_out] weight matrix.
  void init_xavier(Rng& rng, int fan_in, int fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    init_uniform(rng, -a, a);
  }
};

// C[m,n] (+)= A[m,k] * B[k,n]. accumulate=false overwrites C.
void matmul(const double* a, const double* b, double* c, int m, int k, int n,
            bool accumulate = false);

// C[m,n] (+)= A[k,m]^T * B[k,n].
void matmul_tn(const double* a, const double* b, double* c, int k, int m, int n,
               bool accumulate = false);

// C[m,n] (+)= A[m,k] * B[n,k]^T.
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate = false);

inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace peakgen
