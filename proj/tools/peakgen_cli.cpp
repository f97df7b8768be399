// Command-line front end. Talks to the core exclusively through the public C
// API; the only other dependencies are the vendored CLI11 and JSON headers
// used to assemble the pipeline config from a file plus flag overrides.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "peakgen/peakgen.h"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string default_db_path() {
  const char* env = std::getenv("PEAKGEN_DB");
  return (env != nullptr && env[0] != '\0') ? env : "peakgen.ndjson";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peak-aware GC-MS spectrum toolkit: simulate chromatograms, "
               "train the conditional generator, synthesize spectra, train "
               "the two-stream detector and evaluate the results."};
  app.set_version_flag("--version", peakgen_version());
  app.require_subcommand(1);

  std::string config_path;
  std::string db_path = default_db_path();
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int t_len = 0;
  long long iterations = 0;
  double lr_g = 0.0, lr_d = 0.0, lambda = 0.0;
  int batch = 0;
  std::string condition;
  int n_gen = 0;
  bool ladder = false;
  long long record_id = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "pipeline config JSON file")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--db", db_path,
                    "datastore path (default: $PEAKGEN_DB or peakgen.ndjson)");
    sub->add_option("--out", out_dir, "directory for artifacts (default: out)");
    sub->add_option("--T", t_len, "override the retention axis length");
  };

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Simulate ground-truth spectra into the datastore");
  add_common(simulate);

  CLI::App* eda = app.add_subcommand(
      "eda", "Per-condition peak statistics over the stored real spectra");
  add_common(eda);

  CLI::App* train_gan =
      app.add_subcommand("train-gan", "Train the conditional generator");
  add_common(train_gan);
  train_gan->add_option("--iterations", iterations, "training iterations");
  train_gan->add_option("--lr-g", lr_g, "generator learning rate");
  train_gan->add_option("--lr-d", lr_d, "discriminator learning rate");
  train_gan->add_option("--batch", batch, "batch size");
  train_gan->add_option("--lambda", lambda, "weight of the STFT loss term");

  CLI::App* generate = app.add_subcommand(
      "generate", "Sample synthetic spectra from a trained generator");
  add_common(generate);
  generate->add_option("--condition", condition,
                       "single condition name, e.g. \"2-CEES + EtOH\" "
                       "(default: all)");
  generate->add_option("--n", n_gen, "samples per condition");

  CLI::App* train_det =
      app.add_subcommand("train-detector", "Train the two-stream detector");
  add_common(train_det);
  train_det->add_flag("--ladder", ladder,
                      "sweep the synthetic-data ladder and write ladder.csv");

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Compare stored real and synthetic spectra; score the "
                  "trained detector when present");
  add_common(evaluate);

  CLI::App* export_mesh = app.add_subcommand(
      "export-mesh", "Export one record's (t, m/z, intensity) mesh as CSV");
  add_common(export_mesh);
  export_mesh->add_option("--record", record_id, "datastore record id")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  CLI::App* sub = app.get_subcommands().front();

  // Config = file (when given) + flag overrides, serialized back to JSON for
  // the C API. Validation happens on the other side of the boundary.
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    std::ostringstream text;
    text << in.rdbuf();
    try {
      cfg = nlohmann::ordered_json::parse(text.str());
    } catch (const nlohmann::json::exception& e) {
      std::fprintf(stderr, "error: %s is not valid JSON: %s\n",
                   config_path.c_str(), e.what());
      return kExitUsage;
    }
    if (!cfg.is_object()) {
      std::fprintf(stderr, "error: %s must contain a JSON object\n",
                   config_path.c_str());
      return kExitUsage;
    }
  }
  try {
    if (sub->count("--seed") > 0) cfg["seed"] = seed;
    if (sub->count("--T") > 0) cfg["t_len"] = t_len;
    if (sub == train_gan) {
      if (sub->count("--iterations") > 0)
        cfg["gan_train"]["iterations"] = iterations;
      if (sub->count("--lr-g") > 0) cfg["gan_train"]["lr_g"] = lr_g;
      if (sub->count("--lr-d") > 0) cfg["gan_train"]["lr_d"] = lr_d;
      if (sub->count("--batch") > 0) cfg["gan_train"]["batch"] = batch;
      if (sub->count("--lambda") > 0) cfg["gan_train"]["lambda_stft"] = lambda;
    }
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: cannot apply flag overrides: %s\n", e.what());
    return kExitUsage;
  }
  const std::string cfg_text = cfg.dump();

  char* summary = nullptr;
  peakgen_status st = PEAKGEN_ERR_UNKNOWN;
  if (sub == simulate) {
    st = peakgen_run_simulate(cfg_text.c_str(), db_path.c_str(),
                              out_dir.c_str(), &summary);
  } else if (sub == eda) {
    st = peakgen_run_eda(cfg_text.c_str(), db_path.c_str(), out_dir.c_str(),
                         &summary);
  } else if (sub == train_gan) {
    st = peakgen_run_train_gan(cfg_text.c_str(), db_path.c_str(),
                               out_dir.c_str(), &summary);
  } else if (sub == generate) {
    st = peakgen_run_generate(cfg_text.c_str(), db_path.c_str(),
                              out_dir.c_str(), condition.c_str(), n_gen,
                              &summary);
  } else if (sub == train_det) {
    st = peakgen_run_train_detector(cfg_text.c_str(), db_path.c_str(),
                                    out_dir.c_str(), ladder ? 1 : 0, &summary);
  } else if (sub == evaluate) {
    st = peakgen_run_evaluate(cfg_text.c_str(), db_path.c_str(),
                              out_dir.c_str(), &summary);
  } else if (sub == export_mesh) {
    st = peakgen_run_export_mesh(cfg_text.c_str(), db_path.c_str(),
                                 out_dir.c_str(), record_id, &summary);
  }

  if (st == PEAKGEN_OK) {
    if (summary != nullptr) {
      std::printf("%s\n", summary);
      peakgen_string_free(summary);
    }
    return 0;
  }
  std::fprintf(stderr, "error: %s\n", peakgen_last_error());
  return (st == PEAKGEN_ERR_CONFIG || st == PEAKGEN_ERR_CONTRACT) ? kExitUsage
                                                                  : kExitRuntime;
}
