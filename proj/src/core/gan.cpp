#include "gan.hpp"

#include <algorithm>
#include <cmath>

#include "serialize.hpp"

namespace peakgen {

void GanConfig::validate() const {
  require_config(embed_dim > 0 && embed_dim % heads == 0,
                 "embed_dim must be positive and divisible by heads");
  require_config(output_dim >= 8, "output_dim must be >= 8");
  require_config(depth >= 1, "depth must be >= 1");
  require_config(tokens >= 2, "tokens must be >= 2");
  require_config(hidden_dim >= 1, "hidden_dim must be >= 1");
  require_config(noise_dim >= 1, "noise_dim must be >= 1");
  require_config(dropout_p >= 0.0 && dropout_p < 1.0, "dropout_p in [0,1)");
  require_config(disc_channels > 0 && disc_channels % disc_heads == 0,
                 "disc_channels must be divisible by disc_heads");
  require_config(refine_kernel % 2 == 1, "refine_kernel must be odd");
  require_config(stft_window <= output_dim,
                 "stft window exceeds generator output length");
  require_config(stft_hop >= 1 && stft_hop <= stft_window,
                 "stft hop must be in [1, window]");
}

void TrainConfig::validate() const {
  require_config(iterations >= 1, "iterations must be >= 1");
  require_config(batch >= 1, "batch must be >= 1");
  require_config(lambda_stft >= 0.0, "lambda must be >= 0");
  require_config(lr_g > 0.0 && lr_d > 0.0, "learning rates must be positive");
}

// ---------------------------------------------------------------------------
// Condition embedding

void ConditionEmbedding::init(int embed, Rng& rng) {
  solvent_table.resize({kSolventCount, embed});
  solvent_table.init_normal(rng, 0.0, 0.1);
  solute_table.resize({kSoluteCount, embed});
  solute_table.init_normal(rng, 0.0, 0.1);
}

Tensor ConditionEmbedding::forward(const ConditionLabel& label) {
  label.validate();
  label_ = label;
  const int embed = solvent_table.shape[1];
  Tensor ec({2, embed});
  const int sv = label.solvent_index();
  for (int j = 0; j < embed; ++j) ec.at(0, j) = solvent_table.at(sv, j);
  for (int i = 0; i < kSoluteCount; ++i) {
    if (!label.solutes[i]) continue;
    for (int j = 0; j < embed; ++j) ec.at(1, j) += solute_table.at(i, j);
  }
  return ec;
}

void ConditionEmbedding::backward(const Tensor& d_ec) {
  const int embed = solvent_table.shape[1];
  const int sv = label_.solvent_index();
  for (int j = 0; j < embed; ++j) {
    solvent_table.grad[static_cast<size_t>(sv) * embed + j] += d_ec.at(0, j);
  }
  for (int i = 0; i < kSoluteCount; ++i) {
    if (!label_.solutes[i]) continue;
    for (int j = 0; j < embed; ++j) {
      solute_table.grad[static_cast<size_t>(i) * embed + j] += d_ec.at(1, j);
    }
  }
}

void ConditionEmbedding::collect_params(std::vector<Tensor*>& out) {
  out.push_back(&solvent_table);
  out.push_back(&solute_table);
}

void ConditionEmbedding::named_params(const std::string& prefix,
                                      NamedParams& out) {
  out.emplace_back(prefix + ".solvent", &solvent_table);
  out.emplace_back(prefix + ".solute", &solute_table);
}

// ---------------------------------------------------------------------------
// Generator

namespace {

void mha_named(const std::string& prefix, MultiHeadAttention& mha,
               NamedParams& out) {
  out.emplace_back(prefix + ".wq.W", &mha.wq.W);
  out.emplace_back(prefix + ".wq.b", &mha.wq.b);
  out.emplace_back(prefix + ".wk.W", &mha.wk.W);
  out.emplace_back(prefix + ".wk.b", &mha.wk.b);
  out.emplace_back(prefix + ".wv.W", &mha.wv.W);
  out.emplace_back(prefix + ".wv.b", &mha.wv.b);
  out.emplace_back(prefix + ".wo.W", &mha.wo.W);
  out.emplace_back(prefix + ".wo.b", &mha.wo.b);
}

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

Generator::Generator(const GanConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  embed_.init(cfg_.embed_dim, rng);
  mha_cond_.init(cfg_.embed_dim, cfg_.heads, rng);
  const int in_dim = 2 * cfg_.embed_dim + cfg_.noise_dim;
  const int up_dim = cfg_.tokens * cfg_.embed_dim;
  blocks_.resize(cfg_.depth);
  relus_.resize(cfg_.depth);
  drops_.resize(cfg_.depth);
  for (int i = 0; i < cfg_.depth; ++i) {
    const int d_in = (i == 0) ? in_dim : cfg_.hidden_dim;
    const int d_out = (i == cfg_.depth - 1) ? up_dim : cfg_.hidden_dim;
    blocks_[i].init(d_in, d_out, rng);
    drops_[i].p = cfg_.dropout_p;
  }
  mha_up_.init(cfg_.embed_dim, cfg_.heads, rng);
  refiner_.init(cfg_.refine_kernel, rng);
  out_proj_.init(up_dim, cfg_.output_dim, rng);
}

std::vector<double> Generator::forward(const ConditionLabel& label,
                                       const std::vector<double>& z,
                                       bool training, Rng& rng) {
  require(static_cast<int>(z.size()) == cfg_.noise_dim,
          "noise vector length mismatch");
  Tensor ec = embed_.forward(label);
  Tensor h1 = mha_cond_.forward_self(ec);

  Tensor x({1, 2 * cfg_.embed_dim + cfg_.noise_dim});
  for (size_t i = 0; i < h1.size(); ++i) x.data[i] = h1.data[i];
  for (int i = 0; i < cfg_.noise_dim; ++i) {
    x.data[h1.size() + i] = z[static_cast<size_t>(i)];
  }

  for (int i = 0; i < cfg_.depth; ++i) {
    x = blocks_[i].forward(x);
    x = relus_[i].forward(x);
    x = drops_[i].forward(x, training, rng);
  }

  fup_.resize({cfg_.tokens, cfg_.embed_dim});
  fup_.data = x.data;

  // Raw attention comes from the per-token mean |activation| profile.
  profile_.assign(cfg_.tokens, 0.0);
  for (int t = 0; t < cfg_.tokens; ++t) {
    double acc = 0.0;
    for (int j = 0; j < cfg_.embed_dim; ++j) acc += std::fabs(fup_.at(t, j));
    profile_[t] = acc / cfg_.embed_dim;
  }
  alpha_raw_ = slope_softmax(slopes(profile_));
  alpha_ref_ = refiner_.forward(alpha_raw_);

  h2_ = mha_up_.forward_self(fup_);
  Tensor xhat = apply_attention(h2_, alpha_ref_);

  Tensor flat({1, cfg_.tokens * cfg_.embed_dim});
  flat.data = xhat.data;
  Tensor pre = out_proj_.forward(flat);
  out_.resize(cfg_.output_dim);
  for (int i = 0; i < cfg_.output_dim; ++i) {
    out_[i] = 1.0 / (1.0 + std::exp(-pre.at(0, i)));
  }
  return out_;
}

void Generator::backward(const std::vector<double>& d_out) {
  require(static_cast<int>(d_out.size()) == cfg_.output_dim,
          "generator backward length mismatch");
  Tensor d_pre({1, cfg_.output_dim});
  for (int i = 0; i < cfg_.output_dim; ++i) {
    d_pre.at(0, i) = d_out[i] * out_[i] * (1.0 - out_[i]);
  }
  Tensor d_flat = out_proj_.backward(d_pre);
  Tensor d_xhat;
  d_xhat.resize({cfg_.tokens, cfg_.embed_dim});
  d_xhat.data = d_flat.data;

  std::vector<double> d_alpha;
  Tensor d_h2 = apply_attention_backward(d_xhat, h2_, alpha_ref_, d_alpha);
  const std::vector<double> d_alpha_raw = refiner_.backward(d_alpha);

  // Softmax backward over the non-pad entries, then through the |slope| and
  // |activation| profile chain.
  const int n = cfg_.tokens - 1;
  double dot = 0.0;
  for (int i = 0; i < n; ++i) dot += alpha_raw_[i] * d_alpha_raw[i];
  std::vector<double> d_profile(cfg_.tokens, 0.0);
  for (int i = 0; i < n; ++i) {
    const double ds = alpha_raw_[i] * (d_alpha_raw[i] - dot);
    const double sg = sign_of(profile_[i + 1] - profile_[i]);
    d_profile[i + 1] += ds * sg;
    d_profile[i] -= ds * sg;
  }

  Tensor d_fup = mha_up_.backward_self(d_h2);
  const double inv_d = 1.0 / cfg_.embed_dim;
  for (int t = 0; t < cfg_.tokens; ++t) {
    for (int j = 0; j < cfg_.embed_dim; ++j) {
      d_fup.at(t, j) += d_profile[t] * inv_d * sign_of(fup_.at(t, j));
    }
  }

  Tensor d = Tensor({1, cfg_.tokens * cfg_.embed_dim});
  d.data = d_fup.data;
  for (int i = cfg_.depth - 1; i >= 0; --i) {
    d = drops_[i].backward(d);
    d = relus_[i].backward(d);
    d = blocks_[i].backward(d);
  }

  Tensor d_h1({2, cfg_.embed_dim});
  for (size_t i = 0; i < d_h1.size(); ++i) d_h1.data[i] = d.data[i];
  Tensor d_ec = mha_cond_.backward_self(d_h1);
  embed_.backward(d_ec);
}

void Generator::collect_params(std::vector<Tensor*>& out) {
  embed_.collect_params(out);
  mha_cond_.collect_params(out);
  for (auto& b : blocks_) b.collect_params(out);
  mha_up_.collect_params(out);
  refiner_.collect_params(out);
  out_proj_.collect_params(out);
}

void Generator::named_params(NamedParams& out) {
  embed_.named_params("g.embed", out);
  mha_named("g.mha_cond", mha_cond_, out);
  for (size_t i = 0; i < blocks_.size(); ++i) {
    out.emplace_back("g.block" + std::to_string(i) + ".W", &blocks_[i].W);
    out.emplace_back("g.block" + std::to_string(i) + ".b", &blocks_[i].b);
  }
  mha_named("g.mha_up", mha_up_, out);
  out.emplace_back("g.refine.kernels", &refiner_.conv().kernels);
  out.emplace_back("g.refine.bias", &refiner_.conv().bias);
  out.emplace_back("g.out.W", &out_proj_.W);
  out.emplace_back("g.out.b", &out_proj_.b);
}

// ---------------------------------------------------------------------------
// Discriminator

Discriminator::Discriminator(const GanConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  embed_.init(cfg_.embed_dim, rng);
  conv1_.init(1, cfg_.disc_channels, 7, 3, 2, rng);
  conv2_.init(cfg_.disc_channels, cfg_.disc_channels, 5, 2, 2, rng);
  mha_.init(cfg_.disc_channels, cfg_.disc_heads, rng);
  head_.init(cfg_.disc_channels + 2 * cfg_.embed_dim, 1, rng);
}

double Discriminator::forward(const std::vector<double>& x,
                              const ConditionLabel& label) {
  require(static_cast<int>(x.size()) == cfg_.output_dim,
          "discriminator input length mismatch");
  in_len_ = static_cast<int>(x.size());
  Tensor ec = embed_.forward(label);

  Tensor xt({1, in_len_});
  std::copy(x.begin(), x.end(), xt.data.begin());
  Tensor c1 = relu1_.forward(conv1_.forward(xt));
  Tensor c2 = relu2_.forward(conv2_.forward(c1));

  seq_len_ = c2.shape[1];
  tokens_.resize({seq_len_, cfg_.disc_channels});
  for (int ch = 0; ch < cfg_.disc_channels; ++ch) {
    for (int t = 0; t < seq_len_; ++t) tokens_.at(t, ch) = c2.at(ch, t);
  }
  attn_out_ = mha_.forward_self(tokens_);

  feat_.resize({1, cfg_.disc_channels + 2 * cfg_.embed_dim});
  const double inv_l = 1.0 / seq_len_;
  for (int ch = 0; ch < cfg_.disc_channels; ++ch) {
    double acc = 0.0;
    for (int t = 0; t < seq_len_; ++t) acc += attn_out_.at(t, ch);
    feat_.at(0, ch) = acc * inv_l;
  }
  for (int i = 0; i < 2 * cfg_.embed_dim; ++i) {
    feat_.at(0, cfg_.disc_channels + i) = ec.data[i];
  }
  Tensor score = head_.forward(feat_);
  return score.at(0, 0);
}

std::vector<double> Discriminator::backward(double d_score) {
  Tensor ds({1, 1});
  ds.at(0, 0) = d_score;
  Tensor d_feat = head_.backward(ds);

  Tensor d_ec({2, cfg_.embed_dim});
  for (int i = 0; i < 2 * cfg_.embed_dim; ++i) {
    d_ec.data[i] = d_feat.at(0, cfg_.disc_channels + i);
  }
  embed_.backward(d_ec);

  Tensor d_attn({seq_len_, cfg_.disc_channels});
  const double inv_l = 1.0 / seq_len_;
  for (int ch = 0; ch < cfg_.disc_channels; ++ch) {
    const double g = d_feat.at(0, ch) * inv_l;
    for (int t = 0; t < seq_len_; ++t) d_attn.at(t, ch) = g;
  }
  Tensor d_tokens = mha_.backward_self(d_attn);

  Tensor d_c2({cfg_.disc_channels, seq_len_});
  for (int ch = 0; ch < cfg_.disc_channels; ++ch) {
    for (int t = 0; t < seq_len_; ++t) d_c2.at(ch, t) = d_tokens.at(t, ch);
  }
  Tensor d_c1 = conv2_.backward(relu2_.backward(d_c2));
  Tensor d_x = conv1_.backward(relu1_.backward(d_c1));
  return std::vector<double>(d_x.data.begin(), d_x.data.end());
}

void Discriminator::collect_params(std::vector<Tensor*>& out) {
  embed_.collect_params(out);
  conv1_.collect_params(out);
  conv2_.collect_params(out);
  mha_.collect_params(out);
  head_.collect_params(out);
}

void Discriminator::named_params(NamedParams& out) {
  embed_.named_params("d.embed", out);
  out.emplace_back("d.conv1.kernels", &conv1_.kernels);
  out.emplace_back("d.conv1.bias", &conv1_.bias);
  out.emplace_back("d.conv2.kernels", &conv2_.kernels);
  out.emplace_back("d.conv2.bias", &conv2_.bias);
  mha_named("d.mha", mha_, out);
  out.emplace_back("d.head.W", &head_.W);
  out.emplace_back("d.head.b", &head_.b);
}

// ---------------------------------------------------------------------------
// Losses

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double generator_adv_loss(const std::vector<double>& fake_scores) {
  require(!fake_scores.empty(), "generator_adv_loss needs scores");
  double acc = 0.0;
  for (double s : fake_scores) acc += softplus(-s);  // -log sigmoid(s)
  return acc / fake_scores.size();
}

double discriminator_loss(const std::vector<double>& real_scores,
                          const std::vector<double>& fake_scores) {
  require(!real_scores.empty() && !fake_scores.empty(),
          "discriminator_loss needs scores");
  double lr = 0.0, lf = 0.0;
  for (double s : real_scores) lr += (s - 1.0) * (s - 1.0);
  for (double s : fake_scores) lf += s * s;
  return 0.5 * lr / real_scores.size() + 0.5 * lf / fake_scores.size();
}

double generator_loss(const std::vector<double>& fake_scores,
                      const std::vector<std::vector<double>>& x_real,
                      const std::vector<std::vector<double>>& x_fake,
                      double lambda, int window, int hop, double* adv_part,
                      double* stft_part) {
  require(x_real.size() == x_fake.size() && !x_real.empty(),
          "generator_loss needs paired signals");
  const double adv = generator_adv_loss(fake_scores);
  double stft = 0.0;
  for (size_t i = 0; i < x_real.size(); ++i) {
    stft += stft_sq_distance(x_real[i], x_fake[i], window, hop);
  }
  stft /= x_real.size();
  if (adv_part) *adv_part = adv;
  if (stft_part) *stft_part = stft;
  return adv + lambda * stft;
}

// ---------------------------------------------------------------------------
// Training loop

Gan::Gan(const GanConfig& cfg, uint64_t init_seed)
    : cfg_(cfg),
      init_rng_(Rng(init_seed).derive("gan-init")),
      g_(cfg_, init_rng_),
      d_(cfg_, init_rng_) {}

void Gan::train(const std::vector<DatasetItem>& data, const TrainConfig& tc,
                std::vector<LossRow>* history,
                const std::function<void(const LossRow&)>& on_iteration) {
  tc.validate();
  require_config(!data.empty(), "training dataset is empty");
  for (const auto& item : data) {
    require_config(item.spectrum.length() == cfg_.output_dim,
                   "dataset spectrum length must equal output_dim");
  }
  const size_t n = data.size();
  Rng rng = Rng(tc.seed).derive("gan-train");

  std::vector<Tensor*> params_g, params_d;
  g_.collect_params(params_g);
  d_.collect_params(params_d);
  Adam opt_g(tc.lr_g), opt_d(tc.lr_d);

  std::vector<double> z(cfg_.noise_dim);
  const auto fill_z = [&] {
    for (double& v : z) v = rng.normal();
  };
  const auto zero = [](std::vector<Tensor*>& ps) {
    for (Tensor* p : ps) p->zero_grad();
  };

  if (history) history->reserve(history->size() + tc.iterations);
  for (long long it = 0; it < tc.iterations; ++it) {
    LossRow row;
    row.iteration = it;

    // Discriminator step: least-squares loss on raw scores.
    zero(params_d);
    double l_d = 0.0;
    for (int b = 0; b < tc.batch; ++b) {
      const auto& item = data[rng.below(n)];
      const double s_real = d_.forward(item.spectrum.tic, item.label);
      l_d += 0.5 * (s_real - 1.0) * (s_real - 1.0);
      d_.backward((s_real - 1.0) / tc.batch);

      fill_z();
      const auto x_fake = g_.forward(item.label, z, true, rng);
      const double s_fake = d_.forward(x_fake, item.label);
      l_d += 0.5 * s_fake * s_fake;
      d_.backward(s_fake / tc.batch);
    }
    row.d_loss = l_d / tc.batch;
    opt_d.step(params_d);

    // Generator step: BCE through the discriminator plus the STFT term.
    // Discriminator gradients accumulate as a side effect and are discarded
    // at the next zero().
    zero(params_g);
    zero(params_d);
    double l_adv = 0.0, l_stft = 0.0;
    for (int b = 0; b < tc.batch; ++b) {
      const auto& item = data[rng.below(n)];
      fill_z();
      const auto x_fake = g_.forward(item.label, z, true, rng);
      const double s_fake = d_.forward(x_fake, item.label);
      l_adv += softplus(-s_fake);
      const double sig = 1.0 / (1.0 + std::exp(-s_fake));
      auto d_x = d_.backward((sig - 1.0) / tc.batch);
      l_stft += stft_sq_distance(item.spectrum.tic, x_fake, cfg_.stft_window,
                                 cfg_.stft_hop, &d_x,
                                 tc.lambda_stft / tc.batch);
      g_.backward(d_x);
    }
    row.g_adv = l_adv / tc.batch;
    row.g_stft = l_stft / tc.batch;
    opt_g.step(params_g);

    if (history) history->push_back(row);
    if (on_iteration) on_iteration(row);
  }
}

std::vector<std::vector<double>> Gan::generate(const ConditionLabel& label,
                                               int n, uint64_t seed) {
  require(n >= 0, "generate needs n >= 0");
  Rng rng = Rng(seed).derive("gan-sample");
  std::vector<std::vector<double>> out;
  out.reserve(n);
  std::vector<double> z(cfg_.noise_dim);
  for (int i = 0; i < n; ++i) {
    for (double& v : z) v = rng.normal();
    out.push_back(g_.forward(label, z, false, rng));
  }
  return out;
}

void Gan::named_params(NamedParams& out) {
  g_.named_params(out);
  d_.named_params(out);
}

std::string loss_history_csv(const std::vector<LossRow>& rows) {
  std::string out = "iteration,g_adv,g_stft,d_loss\n";
  for (const auto& r : rows) {
    out += std::to_string(r.iteration);
    out += ',';
    out += format_double(r.g_adv);
    out += ',';
    out += format_double(r.g_stft);
    out += ',';
    out += format_double(r.d_loss);
    out += '\n';
  }
  return out;
}

}  // namespace peakgen
