#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "gan.hpp"
#include "layers.hpp"
#include "metrics.hpp"
#include "peak_attention.hpp"
#include "simulator.hpp"
#include "spectrum.hpp"

namespace peakgen {

struct DetectorConfig {
  int gc_kernel = 7;  // padding = kernel/2, length preserving
  int ms_kernel1 = 7;
  int ms_kernel2 = 5;
  int ms_channels1 = 8;
  int ms_channels2 = 16;
  int mz_bins = kMzBins;
  int encoder_dim = 128;
  int heads = 4;
  int layers = 2;
  int ff_dim = 256;
  int classes = kSoluteCount;
  int pool_refine_kernel = 5;
  bool use_gate = true;  // suppress decisions when no chromatographic evidence

  void validate() const;
};

struct DetectorTrainConfig {
  int epochs = 10;
  int batch = 16;
  double lr = 1e-3;
  uint64_t seed = 0;
};

// One training record, assembled by the pipeline from stored spectra.
struct DetectorSample {
  std::vector<double> tic;                 // normalized, any length
  std::vector<std::vector<double>> scans;  // [S, mz_bins]; may be empty
  std::array<int, kSoluteCount> solutes{};
  std::vector<uint8_t> peak_mask;  // per-position target; may be empty
};

struct DetectionResult {
  std::vector<double> peak_presence;       // per retention position, (0,1)
  std::array<double, kSoluteCount> posteriors{};  // softmax over one head
  std::array<int, kSoluteCount> decided{};        // sigmoid(logit) > 0.5
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  DetectionScores val;
};

// MHA + feed-forward with residual connections (x + MHA(x), then + FF).
struct EncoderLayer {
  MultiHeadAttention mha;
  Linear ff1, ff2;
  Relu relu;
  Tensor y1_cache;

  void init(int d, int heads, int ff_dim, Rng& rng);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void collect_params(std::vector<Tensor*>& out);
  void named_params(const std::string& prefix, NamedParams& out);
};

// f = sum_t w_t h_t with w = softmax(refined_alpha); the Eq.-10 style pooled
// feature. Standalone so the normalization contract is testable.
std::vector<double> peak_aware_pool(const Tensor& h,
                                    const std::vector<double>& refined_alpha);

class Detector {
 public:
  Detector(const DetectorConfig& cfg, uint64_t seed);

  // GC stream: conv -> positional encoding -> encoder stack -> per-position
  // sigmoid probability. Backward takes d(loss)/d(logit) per position.
  std::vector<double> gc_forward(const std::vector<double>& tic);
  void gc_backward(const std::vector<double>& d_logits);

  // MS stream: per-scan conv features -> encoder over scan tokens ->
  // peak-aware pooling -> class logits.
  std::vector<double> ms_forward(const std::vector<std::vector<double>>& scans);
  void ms_backward(const std::vector<double>& d_logits);

  static std::array<double, kSoluteCount> posteriors_from_logits(
      const std::vector<double>& logits);

  DetectionResult detect(const Spectrum& spectrum) const;

  std::vector<EpochMetrics> train(const std::vector<DetectorSample>& train_set,
                                  const std::vector<DetectorSample>& val_set,
                                  const DetectorTrainConfig& tc);

  double sample_loss(const DetectorSample& s);  // forward-only loss

  const DetectorConfig& config() const { return cfg_; }
  void collect_params(std::vector<Tensor*>& out);
  void named_params(NamedParams& out);

 private:
  void backward_sample(const DetectorSample& s, double scale);

  DetectorConfig cfg_;
  // GC stream
  Conv1d gc_conv_;
  std::vector<EncoderLayer> gc_encoder_;
  Linear gc_head_;
  std::vector<double> gc_probs_;
  int gc_len_ = 0;
  // MS stream
  Conv1d ms_conv1_, ms_conv2_;
  Relu ms_relu1_, ms_relu2_;
  Linear ms_proj_;
  std::vector<EncoderLayer> ms_encoder_;
  PeakRefiner pool_refiner_;
  Linear ms_head_;
  // per-scan cache snapshots for backward
  std::vector<Tensor> scan_in_, scan_c1_, scan_r1_, scan_c2_, scan_r2_,
      scan_flat_;
  Tensor ms_tokens_enc_;
  std::vector<double> pool_weights_, pool_sig_, pool_alpha_raw_;
  std::vector<double> ms_feat_, ms_logits_;
  int n_scans_ = 0;
};

}  // namespace peakgen
