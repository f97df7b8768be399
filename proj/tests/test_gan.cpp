#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "core/gan.hpp"
#include "core/gradcheck.hpp"
#include "core/simulator.hpp"

using namespace peakgen;

namespace {

GanConfig tiny_config() {
  GanConfig cfg;
  cfg.embed_dim = 8;
  cfg.noise_dim = 6;
  cfg.hidden_dim = 10;
  cfg.depth = 2;
  cfg.output_dim = 48;
  cfg.heads = 2;
  cfg.dropout_p = 0.1;
  cfg.tokens = 4;
  cfg.disc_channels = 6;
  cfg.disc_heads = 2;
  cfg.stft_window = 16;
  cfg.stft_hop = 8;
  cfg.validate();
  return cfg;
}

ConditionLabel label_a() { return ConditionLabel::make("EtOH", {"2-CEES"}); }

std::vector<double> fixed_noise(int n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> z(n);
  for (double& v : z) v = rng.normal();
  return z;
}

}  // namespace

TEST_CASE("config validation rejects inconsistent settings") {
  GanConfig cfg = tiny_config();
  cfg.embed_dim = 9;  // not divisible by heads=2
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.output_dim = 4;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.stft_window = 64;  // exceeds output_dim=48
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.dropout_p = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.refine_kernel = 4;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  TrainConfig tc;
  tc.iterations = 0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc = TrainConfig{};
  tc.lambda_stft = -0.5;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc = TrainConfig{};
  tc.lr_d = 0.0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
}

TEST_CASE("condition embedding stacks solvent row over summed solute rows") {
  Rng rng(4);
  ConditionEmbedding emb;
  emb.init(5, rng);
  const auto label = ConditionLabel::make("MeOH", {"DMMP", "2-CEPS"});
  const auto ec = emb.forward(label);
  REQUIRE(ec.shape == std::vector<int>({2, 5}));
  const int sv = label.solvent_index();
  std::vector<Tensor*> params;
  emb.collect_params(params);
  REQUIRE(params.size() == 2);
  Tensor& solvent_table = *params[0];
  Tensor& solute_table = *params[1];
  for (int j = 0; j < 5; ++j) {
    CHECK(ec.at(0, j) == solvent_table.at(sv, j));
    // DMMP is solute 0, 2-CEPS is solute 3.
    CHECK(ec.at(1, j) ==
          doctest::Approx(solute_table.at(0, j) + solute_table.at(3, j))
              .epsilon(1e-12));
  }

  Tensor d_ec({2, 5});
  d_ec.fill(1.0);
  emb.backward(d_ec);
  for (int i = 0; i < kSolventCount; ++i) {
    for (int j = 0; j < 5; ++j) {
      CHECK(solvent_table.grad[static_cast<size_t>(i) * 5 + j] ==
            (i == sv ? 1.0 : 0.0));
    }
  }
  for (int i = 0; i < kSoluteCount; ++i) {
    const double want = (i == 0 || i == 3) ? 1.0 : 0.0;
    for (int j = 0; j < 5; ++j) {
      CHECK(solute_table.grad[static_cast<size_t>(i) * 5 + j] == want);
    }
  }
}

TEST_CASE("generator output is a sigmoid-squashed signal of the right length") {
  Rng rng(11);
  Generator g(tiny_config(), rng);
  const auto z = fixed_noise(6, 1);
  Rng fwd(2);
  const auto y = g.forward(label_a(), z, false, fwd);
  REQUIRE(y.size() == 48);
  for (double v : y) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  const auto& alpha = g.last_refined_alpha();
  REQUIRE(alpha.size() == 4);  // one weight per token
  for (double a : alpha) {
    CHECK(a > 0.0);
    CHECK(a < 1.0);
  }
}

TEST_CASE("generator inference is deterministic and seed-faithful") {
  const auto z = fixed_noise(6, 3);
  Rng r1(7), r2(7), r3(8);
  Generator g1(tiny_config(), r1);
  Generator g2(tiny_config(), r2);
  Generator g3(tiny_config(), r3);
  Rng fa(0), fb(0), fc(0);
  const auto a = g1.forward(label_a(), z, false, fa);
  const auto b = g2.forward(label_a(), z, false, fb);
  const auto c = g3.forward(label_a(), z, false, fc);
  CHECK(a == b);
  CHECK(a != c);

  // Different conditions steer the same noise to different signals.
  Rng fd(0);
  const auto d = g1.forward(ConditionLabel::make("THF", {"DFP"}), z, false, fd);
  CHECK(a != d);
}

TEST_CASE("generator parameter gradients match finite differences") {
  Rng rng(21);
  Generator g(tiny_config(), rng);
  const auto z = fixed_noise(6, 5);
  std::vector<Tensor*> params;
  g.collect_params(params);
  // Weighted sum keeps the scalar loss sensitive to every output position.
  std::vector<double> w(48);
  Rng wr(6);
  for (double& v : w) v = wr.uniform(0.5, 1.5);
  const auto loss = [&](bool with_grad) {
    Rng fwd(0);
    const auto y = g.forward(label_a(), z, false, fwd);
    double total = 0.0;
    for (size_t i = 0; i < y.size(); ++i) total += w[i] * y[i];
    if (with_grad) {
      std::vector<double> dy = w;
      g.backward(dy);
    }
    return total;
  };
  Rng pick(9);
  const auto res = grad_check(params, loss, 1e-5, 40, pick);
  CHECK(res.coords_checked > 0);
  CHECK(res.max_rel_err < 2e-5);
}

TEST_CASE("discriminator scores are finite and input gradients check out") {
  Rng rng(31);
  const auto cfg = tiny_config();
  Discriminator d(cfg, rng);
  auto x = fixed_noise(cfg.output_dim, 8);
  for (double& v : x) v = std::fabs(v);
  const double s = d.forward(x, label_a());
  CHECK(std::isfinite(s));

  std::vector<Tensor*> params;
  d.collect_params(params);
  const auto loss = [&](bool with_grad) {
    const double score = d.forward(x, label_a());
    if (with_grad) d.backward(1.0);
    return score;
  };
  Rng pick(12);
  const auto res = grad_check(params, loss, 1e-5, 40, pick);
  CHECK(res.max_rel_err < 2e-5);

  // d(score)/dx against central differences on a few coordinates.
  d.forward(x, label_a());
  for (Tensor* p : params) p->zero_grad();
  const auto dx = d.backward(1.0);
  REQUIRE(dx.size() == x.size());
  for (size_t i : {size_t{0}, size_t{7}, size_t{23}, size_t{47}}) {
    const double eps = 1e-5;
    auto xp = x;
    auto xm = x;
    xp[i] += eps;
    xm[i] -= eps;
    const double fd = (d.forward(xp, label_a()) - d.forward(xm, label_a())) /
                      (2.0 * eps);
    CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("named parameters are unique and cover every tensor") {
  Gan gan(tiny_config(), 5);
  NamedParams named;
  gan.named_params(named);
  std::set<std::string> names;
  size_t total = 0;
  for (const auto& [name, t] : named) {
    CHECK(!name.empty());
    CHECK(t != nullptr);
    CHECK(t->size() > 0);
    names.insert(name);
    total += t->size();
  }
  CHECK(names.size() == named.size());

  std::vector<Tensor*> g_params, d_params;
  gan.generator().collect_params(g_params);
  gan.discriminator().collect_params(d_params);
  CHECK(named.size() == g_params.size() + d_params.size());
  CHECK(total > 0);
}

TEST_CASE("short training run produces finite losses and is reproducible") {
  // Hand-built records at the tiny output length; one bump per condition.
  std::vector<DatasetItem> data;
  const std::vector<ConditionLabel> labels = {
      label_a(), ConditionLabel::make("MeOH", {"DMMP"})};
  Rng data_rng(3);
  for (int r = 0; r < 4; ++r) {
    DatasetItem item;
    item.label = labels[static_cast<size_t>(r % 2)];
    item.spectrum.tic.resize(48);
    const double c = (r % 2) ? 14.0 : 33.0;
    for (int t = 0; t < 48; ++t) {
      const double d = t - c;
      item.spectrum.tic[static_cast<size_t>(t)] =
          0.05 + 0.9 * std::exp(-d * d / 6.0) + 0.01 * data_rng.uniform();
    }
    data.push_back(std::move(item));
  }
  TrainConfig tc;
  tc.iterations = 5;
  tc.batch = 2;
  tc.lr_g = 1e-3;
  tc.lr_d = 1e-4;
  tc.lambda_stft = 1.0;
  tc.seed = 40;

  Gan a(tiny_config(), 5);
  Gan b(tiny_config(), 5);
  std::vector<LossRow> ha, hb;
  int callbacks = 0;
  a.train(data, tc, &ha, [&](const LossRow&) { ++callbacks; });
  b.train(data, tc, &hb);
  CHECK(callbacks == 5);
  REQUIRE(ha.size() == 5);
  REQUIRE(hb.size() == 5);
  for (size_t i = 0; i < ha.size(); ++i) {
    CHECK(ha[i].iteration == static_cast<long long>(i));
    CHECK(std::isfinite(ha[i].g_adv));
    CHECK(std::isfinite(ha[i].g_stft));
    CHECK(std::isfinite(ha[i].d_loss));
    CHECK(ha[i].g_adv == hb[i].g_adv);
    CHECK(ha[i].g_stft == hb[i].g_stft);
    CHECK(ha[i].d_loss == hb[i].d_loss);
  }

  const auto xa = a.generate(label_a(), 2, 9);
  const auto xb = b.generate(label_a(), 2, 9);
  REQUIRE(xa.size() == 2);
  CHECK(xa[0] == xb[0]);
  CHECK(xa[1] == xb[1]);
}

TEST_CASE("generation is seeded and bounded") {
  Gan gan(tiny_config(), 77);
  const auto batch = gan.generate(label_a(), 3, 123);
  REQUIRE(batch.size() == 3);
  for (const auto& x : batch) {
    REQUIRE(x.size() == 48);
    for (double v : x) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK(batch[0] != batch[1]);  // distinct noise per sample

  const auto again = gan.generate(label_a(), 3, 123);
  CHECK(again[0] == batch[0]);
  CHECK(again[2] == batch[2]);
  const auto moved = gan.generate(label_a(), 3, 124);
  CHECK(moved[0] != batch[0]);
}

TEST_CASE("loss history renders as a stable CSV") {
  std::vector<LossRow> rows(2);
  rows[0] = {0, 0.5, 0.25, 1.0};
  rows[1] = {1, 0.125, 0.0625, 2.0};
  const auto csv = loss_history_csv(rows);
  CHECK(csv ==
        "iteration,g_adv,g_stft,d_loss\n"
        "0,0.5,0.25,1\n"
        "1,0.125,0.0625,2\n");
}
