#pragma once

#include <string>
#include <vector>

#include "datastore.hpp"
#include "detector.hpp"
#include "gan.hpp"
#include "simulator.hpp"

namespace peakgen {

// Everything a run needs, JSON round-trippable. Unknown keys in the JSON are
// rejected so a snapshot is always authoritative.
struct PipelineConfig {
  int t_len = 512;  // retention axis length; also the generator output size
  int n_per_condition = 13;
  bool interference_mix = false;
  uint64_t seed = 42;
  std::string date;  // fixed ISO timestamp for records; empty = wall clock
  int generate_per_condition = 8;
  std::vector<int> ladder = {12, 123, 307, 615, 922};
  double min_prominence = kDefaultMinProminence;
  int real_pool_per_condition = 3;  // detector training pool drawn from DB
  int val_per_condition = 5;        // held-out simulated validation
  long long checkpoint_interval = 0;  // train-gan; 0 = final only

  GanConfig gan;
  TrainConfig gan_train;
  DetectorConfig det;
  DetectorTrainConfig det_train;

  void finalize();  // ties gan.output_dim to t_len and validates
};

PipelineConfig config_from_json(const std::string& text);
std::string config_to_json(const PipelineConfig& c);

struct RunReport {
  std::vector<std::string> artifacts;  // absolute paths written
  std::string summary_json;
};

RunReport run_simulate(const PipelineConfig& c, const std::string& db_path,
                       const std::string& out_dir);
RunReport run_eda(const PipelineConfig& c, const std::string& db_path,
                  const std::string& out_dir);
RunReport run_train_gan(const PipelineConfig& c, const std::string& db_path,
                        const std::string& out_dir);
RunReport run_generate(const PipelineConfig& c, const std::string& db_path,
                       const std::string& out_dir,
                       const std::string& condition_filter, int n_override);
RunReport run_train_detector(const PipelineConfig& c,
                             const std::string& db_path,
                             const std::string& out_dir, bool ladder_mode);
RunReport run_evaluate(const PipelineConfig& c, const std::string& db_path,
                       const std::string& out_dir);
RunReport run_export_mesh(const PipelineConfig& c, const std::string& db_path,
                          const std::string& out_dir, long long record_id);

// Helpers shared with tests.
ConditionLabel label_from_record(const SpectrumRecord& rec);
std::vector<uint8_t> mask_from_peaks(const std::vector<int>& centers, int t_len,
                                     int halo = 2);
std::string ladder_csv_header();
// row_prefix carries the leading "train_size,val_size" cells.
std::string ladder_csv_row(const std::string& row_prefix,
                           const DetectionScores& s);

}  // namespace peakgen
