#include "detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace peakgen {

void DetectorConfig::validate() const {
  require_config(encoder_dim > 0 && encoder_dim % heads == 0,
                 "encoder_dim must be divisible by heads");
  require_config(layers >= 1, "need at least one encoder layer");
  require_config(gc_kernel % 2 == 1, "gc kernel must be odd");
  require_config(pool_refine_kernel % 2 == 1, "pool refine kernel must be odd");
  require_config(classes == kSoluteCount, "classes must match solute set");
  require_config(mz_bins >= 8, "mz_bins too small");
}

// ---------------------------------------------------------------------------
// Encoder layer: y1 = x + MHA(x); y2 = y1 + FF(y1)

void EncoderLayer::init(int d, int heads, int ff_dim, Rng& rng) {
  mha.init(d, heads, rng);
  ff1.init(d, ff_dim, rng);
  ff2.init(ff_dim, d, rng);
}

Tensor EncoderLayer::forward(const Tensor& x) {
  Tensor a = mha.forward_self(x);
  y1_cache.resize(x.shape);
  for (size_t i = 0; i < x.size(); ++i) y1_cache.data[i] = x.data[i] + a.data[i];
  Tensor f = ff2.forward(relu.forward(ff1.forward(y1_cache)));
  Tensor y2;
  y2.resize(x.shape);
  for (size_t i = 0; i < x.size(); ++i) {
    y2.data[i] = y1_cache.data[i] + f.data[i];
  }
  return y2;
}

Tensor EncoderLayer::backward(const Tensor& dy) {
  Tensor d_f = ff1.backward(relu.backward(ff2.backward(dy)));
  Tensor d_y1;
  d_y1.resize(dy.shape);
  for (size_t i = 0; i < dy.size(); ++i) {
    d_y1.data[i] = dy.data[i] + d_f.data[i];
  }
  Tensor d_x_mha = mha.backward_self(d_y1);
  Tensor d_x;
  d_x.resize(dy.shape);
  for (size_t i = 0; i < dy.size(); ++i) {
    d_x.data[i] = d_y1.data[i] + d_x_mha.data[i];
  }
  return d_x;
}

void EncoderLayer::collect_params(std::vector<Tensor*>& out) {
  mha.collect_params(out);
  ff1.collect_params(out);
  ff2.collect_params(out);
}

void EncoderLayer::named_params(const std::string& prefix, NamedParams& out) {
  out.emplace_back(prefix + ".mha.wq.W", &mha.wq.W);
  out.emplace_back(prefix + ".mha.wq.b", &mha.wq.b);
  out.emplace_back(prefix + ".mha.wk.W", &mha.wk.W);
  out.emplace_back(prefix + ".mha.wk.b", &mha.wk.b);
  out.emplace_back(prefix + ".mha.wv.W", &mha.wv.W);
  out.emplace_back(prefix + ".mha.wv.b", &mha.wv.b);
  out.emplace_back(prefix + ".mha.wo.W", &mha.wo.W);
  out.emplace_back(prefix + ".mha.wo.b", &mha.wo.b);
  out.emplace_back(prefix + ".ff1.W", &ff1.W);
  out.emplace_back(prefix + ".ff1.b", &ff1.b);
  out.emplace_back(prefix + ".ff2.W", &ff2.W);
  out.emplace_back(prefix + ".ff2.b", &ff2.b);
}

// ---------------------------------------------------------------------------

std::vector<double> peak_aware_pool(const Tensor& h,
                                    const std::vector<double>& refined_alpha) {
  require(h.shape.size() == 2, "peak_aware_pool expects [T,d]");
  const int t = h.shape[0], d = h.shape[1];
  require(static_cast<size_t>(t) == refined_alpha.size(),
          "pool weight length mismatch");
  // Normalize so the weights sum to one.
  double m = *std::max_element(refined_alpha.begin(), refined_alpha.end());
  std::vector<double> w(refined_alpha.size());
  double z = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(refined_alpha[i] - m);
    z += w[i];
  }
  for (double& v : w) v /= z;
  std::vector<double> f(d, 0.0);
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j < d; ++j) f[j] += w[i] * h.at(i, j);
  }
  return f;
}

// ---------------------------------------------------------------------------

Detector::Detector(const DetectorConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng = Rng(seed).derive("detector-init");
  gc_conv_.init(1, cfg_.encoder_dim, cfg_.gc_kernel, cfg_.gc_kernel / 2, 1, rng);
  gc_encoder_.resize(cfg_.layers);
  for (auto& l : gc_encoder_) {
    l.init(cfg_.encoder_dim, cfg_.heads, cfg_.ff_dim, rng);
  }
  gc_head_.init(cfg_.encoder_dim, 1, rng);

  ms_conv1_.init(1, cfg_.ms_channels1, cfg_.ms_kernel1, cfg_.ms_kernel1 / 2, 2,
                 rng);
  ms_conv2_.init(cfg_.ms_channels1, cfg_.ms_channels2, cfg_.ms_kernel2,
                 cfg_.ms_kernel2 / 2, 2, rng);
  const int l1 = Conv1d::out_len(cfg_.mz_bins, cfg_.ms_kernel1,
                                 cfg_.ms_kernel1 / 2, 2);
  const int l2 = Conv1d::out_len(l1, cfg_.ms_kernel2, cfg_.ms_kernel2 / 2, 2);
  ms_proj_.init(cfg_.ms_channels2 * l2, cfg_.encoder_dim, rng);
  ms_encoder_.resize(cfg_.layers);
  for (auto& l : ms_encoder_) {
    l.init(cfg_.encoder_dim, cfg_.heads, cfg_.ff_dim, rng);
  }
  pool_refiner_.init(cfg_.pool_refine_kernel, rng);
  ms_head_.init(cfg_.encoder_dim, cfg_.classes, rng);
}

namespace {

void add_positional_encoding(Tensor& x) {
  const int t = x.shape[0], d = x.shape[1];
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j < d; j += 2) {
      const double freq = std::exp(-std::log(10000.0) * j / d);
      x.at(i, j) += std::sin(i * freq);
      if (j + 1 < d) x.at(i, j + 1) += std::cos(i * freq);
    }
  }
}

}  // namespace

std::vector<double> Detector::gc_forward(const std::vector<double>& tic) {
  require(!tic.empty(), "gc stream needs a signal");
  gc_len_ = static_cast<int>(tic.size());
  Tensor xt({1, gc_len_});
  std::copy(tic.begin(), tic.end(), xt.data.begin());
  Tensor conv = gc_conv_.forward(xt);  // [d, T]
  Tensor tokens({gc_len_, cfg_.encoder_dim});
  for (int ch = 0; ch < cfg_.encoder_dim; ++ch) {
    for (int t = 0; t < gc_len_; ++t) tokens.at(t, ch) = conv.at(ch, t);
  }
  add_positional_encoding(tokens);
  for (auto& l : gc_encoder_) tokens = l.forward(tokens);
  Tensor logits = gc_head_.forward(tokens);  // [T, 1]
  gc_probs_.resize(gc_len_);
  for (int t = 0; t < gc_len_; ++t) {
    gc_probs_[t] = 1.0 / (1.0 + std::exp(-logits.at(t, 0)));
  }
  return gc_probs_;
}

void Detector::gc_backward(const std::vector<double>& d_logits) {
  require(static_cast<int>(d_logits.size()) == gc_len_,
          "gc backward length mismatch");
  Tensor dl({gc_len_, 1});
  for (int t = 0; t < gc_len_; ++t) dl.at(t, 0) = d_logits[t];
  Tensor d_tokens = gc_head_.backward(dl);
  for (int i = static_cast<int>(gc_encoder_.size()) - 1; i >= 0; --i) {
    d_tokens = gc_encoder_[i].backward(d_tokens);
  }
  Tensor d_conv({cfg_.encoder_dim, gc_len_});
  for (int ch = 0; ch < cfg_.encoder_dim; ++ch) {
    for (int t = 0; t < gc_len_; ++t) d_conv.at(ch, t) = d_tokens.at(t, ch);
  }
  gc_conv_.backward(d_conv);
}

std::vector<double> Detector::ms_forward(
    const std::vector<std::vector<double>>& scans) {
  require(!scans.empty(), "ms stream needs at least one scan");
  n_scans_ = static_cast<int>(scans.size());
  scan_in_.resize(n_scans_);
  scan_c1_.resize(n_scans_);
  scan_r1_.resize(n_scans_);
  scan_c2_.resize(n_scans_);
  scan_r2_.resize(n_scans_);
  scan_flat_.resize(n_scans_);

  Tensor tokens({n_scans_, cfg_.encoder_dim});
  std::vector<double> profile(n_scans_, 0.0);
  for (int s = 0; s < n_scans_; ++s) {
    require(static_cast<int>(scans[s].size()) == cfg_.mz_bins,
            "scan length mismatch");
    profile[s] =
        std::accumulate(scans[s].begin(), scans[s].end(), 0.0) / cfg_.mz_bins;
    Tensor in({1, cfg_.mz_bins});
    std::copy(scans[s].begin(), scans[s].end(), in.data.begin());
    scan_in_[s] = in;
    Tensor c1 = ms_conv1_.forward(in);
    scan_c1_[s] = c1;
    Tensor r1 = ms_relu1_.forward(c1);
    scan_r1_[s] = r1;
    Tensor c2 = ms_conv2_.forward(r1);
    scan_c2_[s] = c2;
    Tensor r2 = ms_relu2_.forward(c2);
    scan_r2_[s] = r2;
    Tensor flat({1, static_cast<int>(r2.size())});
    flat.data = r2.data;
    scan_flat_[s] = flat;
    Tensor tok = ms_proj_.forward(flat);
    for (int j = 0; j < cfg_.encoder_dim; ++j) tokens.at(s, j) = tok.at(0, j);
  }

  for (auto& l : ms_encoder_) tokens = l.forward(tokens);
  ms_tokens_enc_ = tokens;

  // Pooling weights from the raw per-scan intensity profile: slope softmax,
  // learnable refine, then a final softmax so the weights sum to one.
  if (n_scans_ >= 2) {
    pool_alpha_raw_ = slope_softmax(slopes(profile));
    pool_sig_ = pool_refiner_.forward(pool_alpha_raw_);
    const double m = *std::max_element(pool_sig_.begin(), pool_sig_.end());
    pool_weights_.resize(n_scans_);
    double z = 0.0;
    for (int s = 0; s < n_scans_; ++s) {
      pool_weights_[s] = std::exp(pool_sig_[s] - m);
      z += pool_weights_[s];
    }
    for (double& w : pool_weights_) w /= z;
  } else {
    pool_alpha_raw_.clear();
    pool_sig_.clear();
    pool_weights_.assign(1, 1.0);
  }

  ms_feat_.assign(cfg_.encoder_dim, 0.0);
  for (int s = 0; s < n_scans_; ++s) {
    for (int j = 0; j < cfg_.encoder_dim; ++j) {
      ms_feat_[j] += pool_weights_[s] * ms_tokens_enc_.at(s, j);
    }
  }
  Tensor f({1, cfg_.encoder_dim});
  std::copy(ms_feat_.begin(), ms_feat_.end(), f.data.begin());
  Tensor logits = ms_head_.forward(f);
  ms_logits_.assign(logits.data.begin(), logits.data.end());
  return ms_logits_;
}

void Detector::ms_backward(const std::vector<double>& d_logits) {
  require(static_cast<int>(d_logits.size()) == cfg_.classes,
          "ms backward length mismatch");
  Tensor dl({1, cfg_.classes});
  std::copy(d_logits.begin(), d_logits.end(), dl.data.begin());
  Tensor d_f = ms_head_.backward(dl);

  Tensor d_tokens({n_scans_, cfg_.encoder_dim});
  std::vector<double> d_w(n_scans_, 0.0);
  for (int s = 0; s < n_scans_; ++s) {
    for (int j = 0; j < cfg_.encoder_dim; ++j) {
      d_tokens.at(s, j) = pool_weights_[s] * d_f.at(0, j);
      d_w[s] += d_f.at(0, j) * ms_tokens_enc_.at(s, j);
    }
  }

  if (n_scans_ >= 2) {
    // Through the final softmax into the refiner; the raw profile is input
    // data, so the chain stops after the refinement conv.
    double dot = 0.0;
    for (int s = 0; s < n_scans_; ++s) dot += pool_weights_[s] * d_w[s];
    std::vector<double> d_sig(n_scans_);
    for (int s = 0; s < n_scans_; ++s) {
      d_sig[s] = pool_weights_[s] * (d_w[s] - dot);
    }
    pool_refiner_.backward(d_sig);
  }

  for (int i = static_cast<int>(ms_encoder_.size()) - 1; i >= 0; --i) {
    d_tokens = ms_encoder_[i].backward(d_tokens);
  }

  for (int s = 0; s < n_scans_; ++s) {
    Tensor d_tok({1, cfg_.encoder_dim});
    for (int j = 0; j < cfg_.encoder_dim; ++j) d_tok.at(0, j) = d_tokens.at(s, j);
    ms_proj_.x_cache = scan_flat_[s];
    Tensor d_flat = ms_proj_.backward(d_tok);
    Tensor d_r2;
    d_r2.resize(scan_r2_[s].shape);
    d_r2.data = d_flat.data;
    ms_relu2_.x_cache = scan_c2_[s];
    Tensor d_c2 = ms_relu2_.backward(d_r2);
    ms_conv2_.x_cache = scan_r1_[s];
    Tensor d_r1 = ms_conv2_.backward(d_c2);
    ms_relu1_.x_cache = scan_c1_[s];
    Tensor d_c1 = ms_relu1_.backward(d_r1);
    ms_conv1_.x_cache = scan_in_[s];
    ms_conv1_.backward(d_c1);
  }
}

std::array<double, kSoluteCount> Detector::posteriors_from_logits(
    const std::vector<double>& logits) {
  require(logits.size() == kSoluteCount, "posterior length mismatch");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::array<double, kSoluteCount> p{};
  double z = 0.0;
  for (int i = 0; i < kSoluteCount; ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

DetectionResult Detector::detect(const Spectrum& spectrum) const {
  DetectionResult out;
  Detector& self = const_cast<Detector&>(*this);  // forward-only cache use
  out.peak_presence = self.gc_forward(spectrum.tic);
  if (spectrum.scans.empty()) {
    out.posteriors.fill(1.0 / kSoluteCount);
    return out;  // nothing to identify
  }
  std::vector<std::vector<double>> scans;
  for (const auto& sc : spectrum.scans) scans.push_back(sc.mz);
  const auto logits = self.ms_forward(scans);
  out.posteriors = posteriors_from_logits(logits);
  const double max_presence =
      *std::max_element(out.peak_presence.begin(), out.peak_presence.end());
  for (int c = 0; c < cfg_.classes; ++c) {
    const double sig = 1.0 / (1.0 + std::exp(-logits[c]));
    out.decided[c] = sig > 0.5 ? 1 : 0;
  }
  if (cfg_.use_gate && max_presence < 0.5) out.decided.fill(0);
  return out;
}

double Detector::sample_loss(const DetectorSample& s) {
  double loss = 0.0;
  int terms = 0;
  if (!s.peak_mask.empty()) {
    const auto probs = gc_forward(s.tic);
    require(probs.size() == s.peak_mask.size(), "peak mask length mismatch");
    double l = 0.0;
    for (size_t t = 0; t < probs.size(); ++t) {
      const double p = std::clamp(probs[t], 1e-12, 1.0 - 1e-12);
      l += s.peak_mask[t] ? -std::log(p) : -std::log(1.0 - p);
    }
    loss += l / probs.size();
    ++terms;
  }
  if (!s.scans.empty()) {
    const auto logits = ms_forward(s.scans);
    double l = 0.0;
    for (int c = 0; c < cfg_.classes; ++c) {
      // BCE with logits: softplus(l) - y*l is stable in both directions.
      l += softplus(logits[c]) - s.solutes[c] * logits[c];
    }
    loss += l / cfg_.classes;
    ++terms;
  }
  require(terms > 0, "sample has neither mask nor scans");
  return loss;
}

void Detector::backward_sample(const DetectorSample& s, double scale) {
  if (!s.peak_mask.empty()) {
    const auto& probs = gc_probs_;  // from the forward in sample_loss
    std::vector<double> d(probs.size());
    for (size_t t = 0; t < probs.size(); ++t) {
      d[t] = scale * (probs[t] - s.peak_mask[t]) / probs.size();
    }
    gc_backward(d);
  }
  if (!s.scans.empty()) {
    std::vector<double> d(cfg_.classes);
    for (int c = 0; c < cfg_.classes; ++c) {
      const double sig = 1.0 / (1.0 + std::exp(-ms_logits_[c]));
      d[c] = scale * (sig - s.solutes[c]) / cfg_.classes;
    }
    ms_backward(d);
  }
}

std::vector<EpochMetrics> Detector::train(
    const std::vector<DetectorSample>& train_set,
    const std::vector<DetectorSample>& val_set,
    const DetectorTrainConfig& tc) {
  require_config(!train_set.empty(), "detector training set is empty");
  require_config(tc.epochs >= 1 && tc.batch >= 1, "bad detector train config");
  Rng rng = Rng(tc.seed).derive("detector-train");

  std::vector<Tensor*> params;
  collect_params(params);
  Adam opt(tc.lr);

  std::vector<size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochMetrics> history;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    // Fisher-Yates with our own rng keeps runs reproducible.
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    double epoch_loss = 0.0;
    size_t done = 0;
    while (done < order.size()) {
      const size_t batch_n = std::min<size_t>(tc.batch, order.size() - done);
      for (Tensor* p : params) p->zero_grad();
      for (size_t b = 0; b < batch_n; ++b) {
        const auto& s = train_set[order[done + b]];
        epoch_loss += sample_loss(s);
        backward_sample(s, 1.0 / batch_n);
      }
      opt.step(params);
      done += batch_n;
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = epoch_loss / train_set.size();
    if (!val_set.empty()) {
      std::vector<std::array<int, kSoluteCount>> preds, labels;
      for (const auto& s : val_set) {
        Spectrum sp;
        sp.tic = s.tic;
        for (const auto& mz : s.scans) {
          Scan scan;
          scan.retention_index = 0;
          scan.mz = mz;
          sp.scans.push_back(std::move(scan));
        }
        // retention indices are irrelevant to the MS stream
        const auto res = detect(sp);
        preds.push_back(res.decided);
        labels.push_back(s.solutes);
      }
      em.val = detection_scores(preds, labels);
    }
    history.push_back(em);
  }
  return history;
}

void Detector::collect_params(std::vector<Tensor*>& out) {
  gc_conv_.collect_params(out);
  for (auto& l : gc_encoder_) l.collect_params(out);
  gc_head_.collect_params(out);
  ms_conv1_.collect_params(out);
  ms_conv2_.collect_params(out);
  ms_proj_.collect_params(out);
  for (auto& l : ms_encoder_) l.collect_params(out);
  pool_refiner_.collect_params(out);
  ms_head_.collect_params(out);
}

void Detector::named_params(NamedParams& out) {
  out.emplace_back("det.gc.conv.kernels", &gc_conv_.kernels);
  out.emplace_back("det.gc.conv.bias", &gc_conv_.bias);
  for (size_t i = 0; i < gc_encoder_.size(); ++i) {
    gc_encoder_[i].named_params("det.gc.enc" + std::to_string(i), out);
  }
  out.emplace_back("det.gc.head.W", &gc_head_.W);
  out.emplace_back("det.gc.head.b", &gc_head_.b);
  out.emplace_back("det.ms.conv1.kernels", &ms_conv1_.kernels);
  out.emplace_back("det.ms.conv1.bias", &ms_conv1_.bias);
  out.emplace_back("det.ms.conv2.kernels", &ms_conv2_.kernels);
  out.emplace_back("det.ms.conv2.bias", &ms_conv2_.bias);
  out.emplace_back("det.ms.proj.W", &ms_proj_.W);
  out.emplace_back("det.ms.proj.b", &ms_proj_.b);
  for (size_t i = 0; i < ms_encoder_.size(); ++i) {
    ms_encoder_[i].named_params("det.ms.enc" + std::to_string(i), out);
  }
  out.emplace_back("det.ms.pool.kernels", &pool_refiner_.conv().kernels);
  out.emplace_back("det.ms.pool.bias", &pool_refiner_.conv().bias);
  out.emplace_back("det.ms.head.W", &ms_head_.W);
  out.emplace_back("det.ms.head.b", &ms_head_.b);
}

}  // namespace peakgen
