#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "layers.hpp"
#include "peak_attention.hpp"
#include "simulator.hpp"
#include "spectrum.hpp"
#include "stft.hpp"

namespace peakgen {

struct GanConfig {
  int solvent_dim = kSolventCount;
  int solute_dim = kSoluteCount;
  int embed_dim = 100;
  int noise_dim = 64;
  int hidden_dim = 32;
  int depth = 16;
  int output_dim = 5347;
  int heads = 4;
  double dropout_p = 0.1;
  int tokens = 64;        // up-sampled sequence length
  int refine_kernel = 5;  // peak-attention refinement conv
  int disc_channels = 32;
  int disc_heads = 4;
  int stft_window = 64;
  int stft_hop = 32;

  void validate() const;
};

struct TrainConfig {
  long long iterations = 100000;
  double lr_g = 1e-4;
  double lr_d = 1e-5;
  int batch = 128;
  double lambda_stft = 1.0;
  double mu = 0.0;  // reserved trade-off weight; not used by any loss
  uint64_t seed = 0;

  void validate() const;
};

using NamedParams = std::vector<std::pair<std::string, Tensor*>>;

// Learned embeddings: one row per solvent, one per solute. A label maps to a
// 2-token sequence [solvent row; sum of active solute rows].
struct ConditionEmbedding {
  Tensor solvent_table;  // [n_solvents, embed]
  Tensor solute_table;   // [n_solutes, embed]

  void init(int embed, Rng& rng);
  Tensor forward(const ConditionLabel& label);
  void backward(const Tensor& d_ec);
  void collect_params(std::vector<Tensor*>& out);
  void named_params(const std::string& prefix, NamedParams& out);

 private:
  ConditionLabel label_;
};

// Condition tokens -> MHA fuse -> [flatten | z] -> dense/ReLU/dropout stack
// up-sampling to [tokens, embed] -> MHA -> peak attention (slope softmax over
// the per-token magnitude profile, conv+sigmoid refine, row-wise apply) ->
// dense to output_dim -> sigmoid.
class Generator {
 public:
  Generator(const GanConfig& cfg, Rng& rng);

  std::vector<double> forward(const ConditionLabel& label,
                              const std::vector<double>& z, bool training,
                              Rng& rng);
  // Accumulates parameter gradients; input here is d(loss)/d(output).
  void backward(const std::vector<double>& d_out);

  void collect_params(std::vector<Tensor*>& out);
  void named_params(NamedParams& out);
  const std::vector<double>& last_refined_alpha() const { return alpha_ref_; }

 private:
  GanConfig cfg_;
  ConditionEmbedding embed_;
  MultiHeadAttention mha_cond_;
  std::vector<Linear> blocks_;
  std::vector<Relu> relus_;
  std::vector<Dropout> drops_;
  MultiHeadAttention mha_up_;
  PeakRefiner refiner_;
  Linear out_proj_;

  // caches for backward
  Tensor fup_, h2_;
  std::vector<double> profile_, alpha_raw_, alpha_ref_, out_;
};

// Two strided conv layers -> MHA over the downsampled tokens -> mean pool ->
// dense over [pooled | condition embedding] -> raw scalar score.
class Discriminator {
 public:
  Discriminator(const GanConfig& cfg, Rng& rng);

  double forward(const std::vector<double>& x, const ConditionLabel& label);
  // Returns d(loss)/d(x); accumulates parameter gradients.
  std::vector<double> backward(double d_score);

  void collect_params(std::vector<Tensor*>& out);
  void named_params(NamedParams& out);

 private:
  GanConfig cfg_;
  ConditionEmbedding embed_;
  Conv1d conv1_, conv2_;
  Relu relu1_, relu2_;
  MultiHeadAttention mha_;
  Linear head_;

  Tensor tokens_, attn_out_, feat_;
  int in_len_ = 0, seq_len_ = 0;
};

// log(1 + e^x) without overflow.
double softplus(double x);

// Mean of -log sigmoid(score): the adversarial part of the generator loss.
double generator_adv_loss(const std::vector<double>& fake_scores);

// 0.5*mean((real-1)^2) + 0.5*mean(fake^2) on raw scores.
double discriminator_loss(const std::vector<double>& real_scores,
                          const std::vector<double>& fake_scores);

// Full generator objective: adversarial BCE plus lambda times the mean
// squared STFT-magnitude distance between paired real and generated signals.
double generator_loss(const std::vector<double>& fake_scores,
                      const std::vector<std::vector<double>>& x_real,
                      const std::vector<std::vector<double>>& x_fake,
                      double lambda, int window, int hop,
                      double* adv_part = nullptr, double* stft_part = nullptr);

struct LossRow {
  long long iteration = 0;
  double g_adv = 0.0;
  double g_stft = 0.0;  // unweighted mean STFT distance
  double d_loss = 0.0;
};

class Gan {
 public:
  Gan(const GanConfig& cfg, uint64_t init_seed);

  // Alternating single discriminator/generator Adam steps. `on_iteration`
  // (when set) runs after each iteration, e.g. for checkpointing.
  void train(const std::vector<DatasetItem>& data, const TrainConfig& tc,
             std::vector<LossRow>* history,
             const std::function<void(const LossRow&)>& on_iteration = {});

  std::vector<std::vector<double>> generate(const ConditionLabel& label, int n,
                                            uint64_t seed);

  Generator& generator() { return g_; }
  Discriminator& discriminator() { return d_; }
  const GanConfig& config() const { return cfg_; }
  void named_params(NamedParams& out);

 private:
  GanConfig cfg_;
  Rng init_rng_;
  Generator g_;
  Discriminator d_;
};

std::string loss_history_csv(const std::vector<LossRow>& rows);

}  // namespace peakgen
