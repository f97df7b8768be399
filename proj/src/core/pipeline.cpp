#include "pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "json.hpp"

#include "checkpoint.hpp"
#include "metrics.hpp"
#include "serialize.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace peakgen {

namespace {

void check_keys(const ojson& j, const std::set<std::string>& allowed,
                const std::string& where) {
  require_config(j.is_object(), "config section '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    require_config(allowed.count(it.key()) != 0,
                   "unknown config key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void opt_get(const ojson& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + std::string(key) + "' in " + where +
                      " has the wrong type");
  }
}

void parse_gan_section(const ojson& j, GanConfig& g) {
  // output_dim is deliberately absent: it always follows t_len.
  check_keys(j,
             {"solvent_dim", "solute_dim", "embed_dim", "noise_dim",
              "hidden_dim", "depth", "heads", "dropout_p", "tokens",
              "refine_kernel", "disc_channels", "disc_heads", "stft_window",
              "stft_hop"},
             "gan");
  opt_get(j, "solvent_dim", g.solvent_dim, "gan");
  opt_get(j, "solute_dim", g.solute_dim, "gan");
  opt_get(j, "embed_dim", g.embed_dim, "gan");
  opt_get(j, "noise_dim", g.noise_dim, "gan");
  opt_get(j, "hidden_dim", g.hidden_dim, "gan");
  opt_get(j, "depth", g.depth, "gan");
  opt_get(j, "heads", g.heads, "gan");
  opt_get(j, "dropout_p", g.dropout_p, "gan");
  opt_get(j, "tokens", g.tokens, "gan");
  opt_get(j, "refine_kernel", g.refine_kernel, "gan");
  opt_get(j, "disc_channels", g.disc_channels, "gan");
  opt_get(j, "disc_heads", g.disc_heads, "gan");
  opt_get(j, "stft_window", g.stft_window, "gan");
  opt_get(j, "stft_hop", g.stft_hop, "gan");
}

void parse_gan_train_section(const ojson& j, TrainConfig& t) {
  // The seed is always derived from the top-level seed, hence not a key here.
  check_keys(j, {"iterations", "lr_g", "lr_d", "batch", "lambda_stft", "mu"},
             "gan_train");
  opt_get(j, "iterations", t.iterations, "gan_train");
  opt_get(j, "lr_g", t.lr_g, "gan_train");
  opt_get(j, "lr_d", t.lr_d, "gan_train");
  opt_get(j, "batch", t.batch, "gan_train");
  opt_get(j, "lambda_stft", t.lambda_stft, "gan_train");
  opt_get(j, "mu", t.mu, "gan_train");
}

void parse_detector_section(const ojson& j, DetectorConfig& d) {
  check_keys(j,
             {"gc_kernel", "ms_kernel1", "ms_kernel2", "ms_channels1",
              "ms_channels2", "mz_bins", "encoder_dim", "heads", "layers",
              "ff_dim", "pool_refine_kernel", "use_gate"},
             "detector");
  opt_get(j, "gc_kernel", d.gc_kernel, "detector");
  opt_get(j, "ms_kernel1", d.ms_kernel1, "detector");
  opt_get(j, "ms_kernel2", d.ms_kernel2, "detector");
  opt_get(j, "ms_channels1", d.ms_channels1, "detector");
  opt_get(j, "ms_channels2", d.ms_channels2, "detector");
  opt_get(j, "mz_bins", d.mz_bins, "detector");
  opt_get(j, "encoder_dim", d.encoder_dim, "detector");
  opt_get(j, "heads", d.heads, "detector");
  opt_get(j, "layers", d.layers, "detector");
  opt_get(j, "ff_dim", d.ff_dim, "detector");
  opt_get(j, "pool_refine_kernel", d.pool_refine_kernel, "detector");
  opt_get(j, "use_gate", d.use_gate, "detector");
}

void parse_detector_train_section(const ojson& j, DetectorTrainConfig& t) {
  check_keys(j, {"epochs", "batch", "lr"}, "detector_train");
  opt_get(j, "epochs", t.epochs, "detector_train");
  opt_get(j, "batch", t.batch, "detector_train");
  opt_get(j, "lr", t.lr, "detector_train");
}

std::string iso_date(const PipelineConfig& c) {
  return c.date.empty() ? now_iso_utc() : c.date;
}

void write_config_snapshot(const PipelineConfig& c, const fs::path& out,
                           const std::string& cmd, RunReport& rep) {
  fs::path p = out / ("config_" + cmd + ".json");
  write_text_file(p.string(), config_to_json(c));
  rep.artifacts.push_back(fs::absolute(p).string());
}

void append_manifest(const fs::path& out, const std::string& cmd,
                     const std::string& date, const RunReport& rep) {
  fs::path mp = out / "manifest.json";
  ojson m = ojson::object();
  if (fs::exists(mp)) {
    try {
      m = ojson::parse(read_text_file(mp.string()));
    } catch (const nlohmann::json::exception&) {
      m = ojson::object();
    }
  }
  if (!m.contains("runs") || !m["runs"].is_array()) m["runs"] = ojson::array();
  ojson run = ojson::object();
  run["command"] = cmd;
  run["date"] = date;
  ojson arts = ojson::array();
  for (const auto& a : rep.artifacts) {
    std::error_code ec;
    fs::path rel = fs::relative(a, fs::absolute(out), ec);
    arts.push_back(ec || rel.empty() ? a : rel.generic_string());
  }
  run["artifacts"] = arts;
  m["runs"].push_back(run);
  write_text_file(mp.string(), m.dump(2) + "\n");
}

std::string rel_to_db(const Datastore& store, const fs::path& file) {
  fs::path db_dir = fs::absolute(fs::path(store.path())).parent_path();
  std::error_code ec;
  fs::path rel = fs::relative(fs::absolute(file), db_dir, ec);
  if (ec || rel.empty()) return fs::absolute(file).generic_string();
  return rel.generic_string();
}

SpectrumRecord make_record(const std::string& data_type,
                           const ConditionLabel& label,
                           const std::string& date,
                           const std::string& file_rel) {
  SpectrumRecord r;
  r.data_type = data_type;
  r.condition = interference_name(label.interference);
  r.solvent = label.solvent_name();
  std::string joined;
  for (const auto& s : label.solute_names()) {
    if (!joined.empty()) joined += ",";
    joined += s;
  }
  r.solute = joined;
  r.date = date;
  r.file_name = file_rel;
  return r;
}

// The Table 5 layout lists agents in this order.
constexpr int kReportOrder[kSoluteCount] = {2, 3, 1, 0, 4, 5};

std::string scores_csv_cells(const DetectionScores& s) {
  std::string row = format_double(s.accuracy);
  for (int idx : kReportOrder) {
    const ClassScores& c = s.per_class[static_cast<size_t>(idx)];
    row += "," + format_double(c.precision);
    row += "," + format_double(c.recall);
    row += "," + format_double(c.f1);
  }
  row += "," + format_double(s.macro_f1);
  return row;
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Spectrum load_record_spectrum(const Datastore& store, const SpectrumRecord& rec,
                              ConditionLabel* cond) {
  return load_spectrum_json(store.resolve(rec.file_name), cond);
}

// Path of the ground-truth sidecar written next to a simulated spectrum.
std::string sidecar_path(const std::string& spectrum_path) {
  const std::string suffix = ".json";
  if (spectrum_path.size() > suffix.size() &&
      spectrum_path.compare(spectrum_path.size() - suffix.size(), suffix.size(),
                            suffix) == 0) {
    return spectrum_path.substr(0, spectrum_path.size() - suffix.size()) +
           ".gt.json";
  }
  return spectrum_path + ".gt.json";
}

DetectorSample to_sample(const Spectrum& sp, const ConditionLabel& label,
                         const std::vector<int>& peak_centers,
                         const PipelineConfig& c) {
  DetectorSample s;
  s.tic = sp.tic;
  s.scans.reserve(sp.scans.size());
  for (const Scan& sc : sp.scans) {
    if (static_cast<int>(sc.mz.size()) != c.det.mz_bins)
      throw DataError("scan has " + std::to_string(sc.mz.size()) +
                      " m/z bins, expected " + std::to_string(c.det.mz_bins));
    s.scans.push_back(sc.mz);
  }
  s.solutes = label.solutes;
  s.peak_mask = mask_from_peaks(peak_centers, sp.length());
  return s;
}

std::vector<int> detected_centers(const std::vector<double>& tic,
                                  const PipelineConfig& c) {
  PeakList pl = detect_peaks(tic, c.min_prominence,
                             default_min_distance(static_cast<int>(tic.size())));
  std::vector<int> centers;
  centers.reserve(pl.size());
  for (const Peak& p : pl.peaks) centers.push_back(p.index);
  return centers;
}

std::vector<int> truth_centers(const GroundTruth& gt, int t_len) {
  std::vector<int> centers;
  centers.reserve(gt.peaks.size());
  for (const GroundTruthPeak& p : gt.peaks) {
    if (p.index >= 0 && p.index < t_len) centers.push_back(p.index);
  }
  return centers;
}

// Loads records of one data_type grouped per condition name, preserving
// record-id order inside each group.
struct LoadedGroup {
  ConditionLabel label;
  std::vector<SpectrumRecord> records;
};

std::vector<LoadedGroup> group_records(const Datastore& store,
                                       const std::string& data_type) {
  RecordFilter f;
  f.data_type = data_type;
  std::vector<LoadedGroup> groups;
  std::map<std::string, size_t> index;
  for (const SpectrumRecord& rec : store.query(f)) {
    ConditionLabel label = label_from_record(rec);
    std::string key = label.name();
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, groups.size());
      groups.push_back({label, {rec}});
    } else {
      groups[it->second].records.push_back(rec);
    }
  }
  return groups;
}

// Interleaves groups round-robin so any prefix stays stratified across
// conditions.
std::vector<SpectrumRecord> round_robin(const std::vector<LoadedGroup>& groups,
                                        size_t limit_per_group) {
  std::vector<SpectrumRecord> out;
  size_t depth = 0;
  for (const auto& g : groups)
    depth = std::max(depth, std::min(g.records.size(), limit_per_group));
  for (size_t r = 0; r < depth; ++r) {
    for (const auto& g : groups) {
      if (r < std::min(g.records.size(), limit_per_group))
        out.push_back(g.records[r]);
    }
  }
  return out;
}

}  // namespace

void PipelineConfig::finalize() {
  require_config(t_len >= 16, "t_len must be at least 16");
  require_config(n_per_condition >= 1, "n_per_condition must be >= 1");
  require_config(generate_per_condition >= 1,
                 "generate_per_condition must be >= 1");
  require_config(!ladder.empty(), "ladder must have at least one size");
  for (int k : ladder) require_config(k >= 1, "ladder sizes must be >= 1");
  require_config(min_prominence > 0.0 && min_prominence < 1.0,
                 "min_prominence must be in (0, 1)");
  require_config(real_pool_per_condition >= 1,
                 "real_pool_per_condition must be >= 1");
  require_config(val_per_condition >= 1, "val_per_condition must be >= 1");
  require_config(checkpoint_interval >= 0,
                 "checkpoint_interval must be >= 0");
  require_config(date.empty() || is_iso_datetime(date),
                 "date must be ISO-8601 (YYYY-MM-DDTHH:MM:SS)");
  gan.output_dim = t_len;
  require_config(t_len >= gan.stft_window,
                 "t_len must be >= gan.stft_window");
  gan.validate();
  gan_train.validate();
  det.validate();
  require_config(det_train.epochs >= 1, "detector_train.epochs must be >= 1");
  require_config(det_train.batch >= 1, "detector_train.batch must be >= 1");
  require_config(det_train.lr > 0.0, "detector_train.lr must be positive");
}

PipelineConfig config_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j,
             {"t_len", "n_per_condition", "interference_mix", "seed", "date",
              "generate_per_condition", "ladder", "min_prominence",
              "real_pool_per_condition", "val_per_condition",
              "checkpoint_interval", "gan", "gan_train", "detector",
              "detector_train"},
             "top level");
  PipelineConfig c;
  opt_get(j, "t_len", c.t_len, "top level");
  opt_get(j, "n_per_condition", c.n_per_condition, "top level");
  opt_get(j, "interference_mix", c.interference_mix, "top level");
  opt_get(j, "seed", c.seed, "top level");
  opt_get(j, "date", c.date, "top level");
  opt_get(j, "generate_per_condition", c.generate_per_condition, "top level");
  opt_get(j, "ladder", c.ladder, "top level");
  opt_get(j, "min_prominence", c.min_prominence, "top level");
  opt_get(j, "real_pool_per_condition", c.real_pool_per_condition, "top level");
  opt_get(j, "val_per_condition", c.val_per_condition, "top level");
  opt_get(j, "checkpoint_interval", c.checkpoint_interval, "top level");
  if (j.contains("gan")) parse_gan_section(j.at("gan"), c.gan);
  if (j.contains("gan_train")) parse_gan_train_section(j.at("gan_train"), c.gan_train);
  if (j.contains("detector")) parse_detector_section(j.at("detector"), c.det);
  if (j.contains("detector_train"))
    parse_detector_train_section(j.at("detector_train"), c.det_train);
  c.finalize();
  return c;
}

std::string config_to_json(const PipelineConfig& c) {
  ojson j;
  j["t_len"] = c.t_len;
  j["n_per_condition"] = c.n_per_condition;
  j["interference_mix"] = c.interference_mix;
  j["seed"] = c.seed;
  j["date"] = c.date;
  j["generate_per_condition"] = c.generate_per_condition;
  j["ladder"] = c.ladder;
  j["min_prominence"] = c.min_prominence;
  j["real_pool_per_condition"] = c.real_pool_per_condition;
  j["val_per_condition"] = c.val_per_condition;
  j["checkpoint_interval"] = c.checkpoint_interval;
  ojson g;
  g["solvent_dim"] = c.gan.solvent_dim;
  g["solute_dim"] = c.gan.solute_dim;
  g["embed_dim"] = c.gan.embed_dim;
  g["noise_dim"] = c.gan.noise_dim;
  g["hidden_dim"] = c.gan.hidden_dim;
  g["depth"] = c.gan.depth;
  g["heads"] = c.gan.heads;
  g["dropout_p"] = c.gan.dropout_p;
  g["tokens"] = c.gan.tokens;
  g["refine_kernel"] = c.gan.refine_kernel;
  g["disc_channels"] = c.gan.disc_channels;
  g["disc_heads"] = c.gan.disc_heads;
  g["stft_window"] = c.gan.stft_window;
  g["stft_hop"] = c.gan.stft_hop;
  j["gan"] = g;
  ojson t;
  t["iterations"] = c.gan_train.iterations;
  t["lr_g"] = c.gan_train.lr_g;
  t["lr_d"] = c.gan_train.lr_d;
  t["batch"] = c.gan_train.batch;
  t["lambda_stft"] = c.gan_train.lambda_stft;
  t["mu"] = c.gan_train.mu;
  j["gan_train"] = t;
  ojson d;
  d["gc_kernel"] = c.det.gc_kernel;
  d["ms_kernel1"] = c.det.ms_kernel1;
  d["ms_kernel2"] = c.det.ms_kernel2;
  d["ms_channels1"] = c.det.ms_channels1;
  d["ms_channels2"] = c.det.ms_channels2;
  d["mz_bins"] = c.det.mz_bins;
  d["encoder_dim"] = c.det.encoder_dim;
  d["heads"] = c.det.heads;
  d["layers"] = c.det.layers;
  d["ff_dim"] = c.det.ff_dim;
  d["pool_refine_kernel"] = c.det.pool_refine_kernel;
  d["use_gate"] = c.det.use_gate;
  j["detector"] = d;
  ojson dt;
  dt["epochs"] = c.det_train.epochs;
  dt["batch"] = c.det_train.batch;
  dt["lr"] = c.det_train.lr;
  j["detector_train"] = dt;
  return j.dump(2) + "\n";
}

ConditionLabel label_from_record(const SpectrumRecord& rec) {
  return ConditionLabel::make(rec.solvent, split_csv_list(rec.solute),
                              rec.condition.empty() ? "none" : rec.condition);
}

std::vector<uint8_t> mask_from_peaks(const std::vector<int>& centers, int t_len,
                                     int halo) {
  std::vector<uint8_t> mask(static_cast<size_t>(t_len), 0);
  for (int c : centers) {
    for (int i = std::max(0, c - halo); i <= std::min(t_len - 1, c + halo); ++i)
      mask[static_cast<size_t>(i)] = 1;
  }
  return mask;
}

std::string ladder_csv_header() {
  std::string h = "train_size,val_size,accuracy";
  for (int idx : kReportOrder) {
    std::string name = kSoluteNames[static_cast<size_t>(idx)];
    h += "," + name + "_precision," + name + "_recall," + name + "_f1";
  }
  h += ",avg_f1";
  return h;
}

std::string ladder_csv_row(const std::string& row_prefix,
                           const DetectionScores& s) {
  return row_prefix + "," + scores_csv_cells(s);
}

RunReport run_simulate(const PipelineConfig& cfg, const std::string& db_path,
                       const std::string& out_dir) {
  PipelineConfig c = cfg;
  c.finalize();
  RunReport rep;
  fs::path out(out_dir);
  fs::create_directories(out / "spectra");
  std::string date = iso_date(c);
  Datastore store(db_path);

  auto data = make_dataset(c.n_per_condition, default_conditions(), c.t_len,
                           Rng(c.seed).derive_seed("simulate"),
                           c.interference_mix);
  for (size_t i = 0; i < data.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "rec_%05zu", i);
    fs::path sp = out / "spectra" / (std::string(buf) + ".json");
    save_spectrum_json(sp.string(), data[i].spectrum, &data[i].label);
    fs::path gt = out / "spectra" / (std::string(buf) + ".gt.json");
    write_text_file(gt.string(), data[i].truth.to_json());
    store.insert(make_record("real", data[i].label, date, rel_to_db(store, sp)));
    rep.artifacts.push_back(fs::absolute(sp).string());
    rep.artifacts.push_back(fs::absolute(gt).string());
  }
  write_config_snapshot(c, out, "simulate", rep);
  ojson s;
  s["command"] = "simulate";
  s["records"] = data.size();
  s["conditions"] = default_conditions().size();
  s["db"] = fs::absolute(db_path).string();
  rep.summary_json = s.dump();
  append_manifest(out, "simulate", date, rep);
  return rep;
}

RunReport run_eda(const PipelineConfig& cfg, const std::string& db_path,
                  const std::string& out_dir) {
  PipelineConfig c = cfg;
  c.finalize();
  RunReport rep;
  fs::path out(out_dir);
  fs::create_directories(out);
  Datastore store(db_path);

  struct Agg {
    double area = 0.0, mean = 0.0, stddev = 0.0;
    int n = 0;
  };
  std::map<std::string, Agg> groups;  // condition name -> running sums
  RecordFilter f;
  f.data_type = "real";
  auto recs = store.query(f);
  if (recs.empty()) throw DataError("datastore has no real records to analyze");
  for (const SpectrumRecord& rec : recs) {
    ConditionLabel label;
    Spectrum sp = load_record_spectrum(store, rec, &label);
    PeakList pl = detect_peaks(sp.tic, c.min_prominence,
                               default_min_distance(sp.length()));
    PeakStats st = peak_stats(sp.tic, pl);
    Agg& a = groups[label.name()];
    a.area += st.total_peak_area;
    a.mean += st.mean_intensity;
    a.stddev += st.std_intensity;
    a.n += 1;
  }
  std::string csv =
      "condition,records,total_peak_area,mean_intensity,std_intensity\n";
  for (const auto& [name, a] : groups) {
    csv += name + "," + std::to_string(a.n);
    csv += "," + format_double(a.area / a.n);
    csv += "," + format_double(a.mean / a.n);
    csv += "," + format_double(a.stddev / a.n);
    csv += "\n";
  }
  fs::path p = out / "eda.csv";
  write_text_file(p.string(), csv);
  rep.artifacts.push_back(fs::absolute(p).string());
  write_config_snapshot(c, out, "eda", rep);
  ojson s;
  s["command"] = "eda";
  s["records"] = recs.size();
  s["conditions"] = groups.size();
  rep.summary_json = s.dump();
  append_manifest(out, "eda", iso_date(c), rep);
  return rep;
}

RunReport run_train_gan(const PipelineConfig& cfg, const std::string& db_path,
                        const std::string& out_dir) {
  PipelineConfig c = cfg;
  c.finalize();
  RunReport rep;
  fs::path out(out_dir);
  fs::create_directories(out);
  Datastore store(db_path);

  RecordFilter f;
  f.data_type = "real";
  auto recs = store.query(f);
  if (recs.empty())
    throw DataError("datastore has no real records; run simulate first");
  std::vector<DatasetItem> data;
  data.reserve(recs.size());
  for (const SpectrumRecord& rec : recs) {
    DatasetItem item;
    item.spectrum = load_record_spectrum(store, rec, &item.label);
    if (item.spectrum.length() != c.t_len)
      throw DataError("record " + std::to_string(rec.id) + " has length " +
                      std::to_string(item.spectrum.length()) +
                      ", config t_len is " + std::to_string(c.t_len));
    data.push_back(std::move(item));
  }

  Gan gan(c.gan, Rng(c.seed).derive_seed("gan-model"));
  NamedParams params;
  gan.named_params(params);
  TrainConfig tc = c.gan_train;
  tc.seed = Rng(c.seed).derive_seed("gan-train");
  std::vector<LossRow> history;
  auto on_iter = [&](const LossRow& row) {
    if (c.checkpoint_interval > 0 &&
        (row.iteration + 1) % c.checkpoint_interval == 0 &&
        row.iteration + 1 < tc.iterations) {
      fs::path p =
          out / ("gan_iter" + std::to_string(row.iteration + 1) + ".ckpt");
      save_checkpoint(p.string(), params);
      rep.artifacts.push_back(fs::absolute(p).string());
    }
  };
  gan.train(data, tc, &history, on_iter);

  fs::path ck = out / "gan.ckpt";
  save_checkpoint(ck.string(), params);
  rep.artifacts.push_back(fs::absolute(ck).string());
  fs::path hist = out / "gan_loss_history.csv";
  write_text_file(hist.string(), loss_history_csv(history));
  rep.artifacts.push_back(fs::absolute(hist).string());
  write_config_snapshot(c, out, "train-gan", rep);
  ojson s;
  s["command"] = "train-gan";
  s["records"] = data.size();
  s["iterations"] = tc.iterations;
  if (!history.empty()) {
    s["final_g_adv"] = history.back().g_adv;
    s["final_g_stft"] = history.back().g_stft;
    s["final_d_loss"] = history.back().d_loss;
  }
  rep.summary_json = s.dump();
  append_manifest(out, "train-gan", iso_date(c), rep);
  return rep;
}

RunReport run_generate(const PipelineConfig& cfg, const std::string& db_path,
                       const std::string& out_dir,
                       const std::string& condition_filter, int n_override) {
  PipelineConfig c = cfg;
  c.finalize();
  RunReport rep;
  fs::path out(out_dir);
  fs::create_directories(out / "spectra");
  Datastore store(db_path);

  fs::path ck = out / "gan.ckpt";
  if (!fs::exists(ck))
    throw IoError("generator checkpoint not found at " + ck.string() +
                  "; run train-gan into this output directory first");
  Gan gan(c.gan, Rng(c.seed).derive_seed("gan-model"));
  NamedParams params;
  gan.named_params(params);
  load_checkpoint(ck.string(), params);

  std::vector<ConditionLabel> targets;
  if (condition_filter.empty()) {
    targets = default_conditions();
  } else {
    for (const ConditionLabel& label : default_conditions()) {
      if (label.name() == condition_filter) targets.push_back(label);
    }
    if (targets.empty()) {
      std::string names;
      for (const ConditionLabel& label : default_conditions())
        names += "\n  " + label.name();
      throw ConfigError("unknown condition '" + condition_filter +
                        "'; expected one of:" + names);
    }
  }
  int per = n_override > 0 ? n_override : c.generate_per_condition;
  std::string date = iso_date(c);
  Rng master(c.seed);
  size_t written = 0;
  for (size_t ci = 0; ci < targets.size(); ++ci) {
    const ConditionLabel& label = targets[ci];
    auto tics = gan.generate(label, per,
                             master.derive_seed("generate#" + label.name()));
    for (size_t k = 0; k < tics.size(); ++k) {
      Spectrum sp;
      sp.tic = std::move(tics[k]);
      sp.t_minutes.resize(sp.tic.size());
      for (size_t t = 0; t < sp.tic.size(); ++t)
        sp.t_minutes[t] = static_cast<double>(t) * kRunMinutes /
                          static_cast<double>(sp.tic.size());
      sp.scans = synthesize_scans(
          sp.tic, label,
          master.derive_seed("scans#" + label.name() + "#" + std::to_string(k)));
      char buf[48];
      std::snprintf(buf, sizeof buf, "gen_%05zu", store.size());
      fs::path p = out / "spectra" / (std::string(buf) + ".json");
      save_spectrum_json(p.string(), sp, &label);
      store.insert(make_record("synthetic", label, date, rel_to_db(store, p)));
      rep.artifacts.push_back(fs::absolute(p).string());
      ++written;
    }
  }
  write_config_snapshot(c, out, "generate", rep);
  ojson s;
  s["command"] = "generate";
  s["records"] = written;
  s["per_condition"] = per;
  s["conditions"] = targets.size();
  rep.summary_json = s.dump();
  append_manifest(out, "generate", date, rep);
  return rep;
}

RunReport run_train_detector(const PipelineConfig& cfg,
                             const std::string& db_path,
                             const std::string& out_dir, bool ladder_mode) {
  PipelineConfig c = cfg;
  c.finalize();
  RunReport rep;
  fs::path out(out_dir);
  fs::create_directories(out);
  Datastore store(db_path);

  // Fixed training pool drawn from stored real records, ground-truth masks
  // from the simulator sidecars when present.
  auto real_groups = group_records(store, "real");
  if (real_groups.empty())
    throw DataError("datastore has no real records; run simulate first");
  auto real_recs =
      round_robin(real_groups, static_cast<size_t>(c.real_pool_per_condition));
  std::vector<DetectorSample> real_pool;
  real_pool.reserve(real_recs.size());
  for (const SpectrumRecord& rec : real_recs) {
    ConditionLabel label;
    Spectrum sp = load_record_spectrum(store, rec, &label);
    std::string gt_path = sidecar_path(store.resolve(rec.file_name));
    std::vector<int> centers;
    if (fs::exists(gt_path)) {
      centers = truth_centers(GroundTruth::from_json(read_text_file(gt_path)),
                              sp.length());
    } else {
      centers = detected_centers(sp.tic, c);
    }
    real_pool.push_back(to_sample(sp, label, centers, c));
  }

  // Synthetic records, round-robin across conditions so ladder prefixes are
  // stratified; supervision from detected peaks (no simulator truth exists).
  auto synth_groups = group_records(store, "synthetic");
  auto synth_recs = round_robin(synth_groups, SIZE_MAX);
  std::vector<DetectorSample> synth_pool;
  synth_pool.reserve(synth_recs.size());
  for (const SpectrumRecord& rec : synth_recs) {
    ConditionLabel label;
    Spectrum sp = load_record_spectrum(store, rec, &label);
    synth_pool.push_back(to_sample(sp, label, detected_centers(sp.tic, c), c));
  }

  // Held-out validation: freshly simulated, never part of any pool.
  auto val_items =
      make_dataset(c.val_per_condition, default_conditions(), c.t_len,
                   Rng(c.seed).derive_seed("detector-val"), false);
  std::vector<DetectorSample> val_set;
  val_set.reserve(val_items.size());
  for (const DatasetItem& item : val_items) {
    val_set.push_back(to_sample(item.spectrum, item.label,
                                truth_centers(item.truth, c.t_len), c));
  }

  std::vector<int> rungs =
      ladder_mode ? c.ladder : std::vector<int>{static_cast<int>(synth_pool.size())};
  if (ladder_mode) {
    int need = *std::max_element(rungs.begin(), rungs.end());
    if (static_cast<int>(synth_pool.size()) < need)
      throw DataError("ladder needs " + std::to_string(need) +
                      " synthetic records but the datastore has " +
                      std::to_string(synth_pool.size()) +
                      "; run generate with a larger generate_per_condition");
  }

  std::string ladder_csv = ladder_csv_header() + "\n";
  std::string epoch_csv = "synthetic,epoch,train_loss,val_accuracy,val_macro_f1\n";
  ojson rung_summaries = ojson::array();
  for (size_t ri = 0; ri < rungs.size(); ++ri) {
    int k = rungs[ri];
    std::vector<DetectorSample> train_set = real_pool;
    train_set.insert(train_set.end(), synth_pool.begin(),
                     synth_pool.begin() + std::min<size_t>(k, synth_pool.size()));
    Detector det(c.det,
                 Rng(c.seed).derive_seed("detector-model#" + std::to_string(k)));
    DetectorTrainConfig tc = c.det_train;
    tc.seed = Rng(c.seed).derive_seed("detector-train#" + std::to_string(k));
    auto epochs = det.train(train_set, val_set, tc);
    for (const EpochMetrics& em : epochs) {
      epoch_csv += std::to_string(k) + "," + std::to_string(em.epoch);
      epoch_csv += "," + format_double(em.train_loss);
      epoch_csv += "," + format_double(em.val.accuracy);
      epoch_csv += "," + format_double(em.val.macro_f1);
      epoch_csv += "\n";
    }
    const DetectionScores& last = epochs.back().val;
    ladder_csv += ladder_csv_row(std::to_string(train_set.size()) + "," +
                                     std::to_string(val_set.size()),
                                 last) +
                  "\n";
    ojson r;
    r["synthetic"] = k;
    r["train_size"] = train_set.size();
    r["accuracy"] = last.accuracy;
    r["macro_f1"] = last.macro_f1;
    rung_summaries.push_back(r);
    if (ri + 1 == rungs.size()) {
      NamedParams params;
      det.named_params(params);
      fs::path ck = out / "det.ckpt";
      save_checkpoint(ck.string(), params);
      rep.artifacts.push_back(fs::absolute(ck).string());
    }
  }

  fs::path lp = out / (ladder_mode ? "ladder.csv" : "detector_scores.csv");
  write_text_file(lp.string(), ladder_csv);
  rep.artifacts.push_back(fs::absolute(lp).string());
  fs::path ep = out / "detector_epochs.csv";
  write_text_file(ep.string(), epoch_csv);
  rep.artifacts.push_back(fs::absolute(ep).string());
  write_config_snapshot(c, out, "train-detector", rep);
  ojson s;
  s["command"] = "train-detector";
  s["ladder"] = ladder_mode;
  s["real_pool"] = real_pool.size();
  s["val_size"] = val_set.size();
  s["rungs"] = rung_summaries;
  rep.summary_json = s.dump();
  append_manifest(out, "train-detector", iso_date(c), rep);
  return rep;
}

RunReport run_evaluate(const PipelineConfig& cfg, const std::string& db_path,
                       const std::string& out_dir) {
  PipelineConfig c = cfg;
  c.finalize();
  RunReport rep;
  fs::path out(out_dir);
  fs::create_directories(out);
  Datastore store(db_path);

  std::deque<Spectrum> storage;  // stable addresses for ConditionGroup views
  auto load_groups = [&](const std::string& data_type) {
    std::vector<ConditionGroup> groups;
    for (const LoadedGroup& g : group_records(store, data_type)) {
      ConditionGroup cg;
      cg.label = g.label;
      for (const SpectrumRecord& rec : g.records) {
        storage.push_back(load_record_spectrum(store, rec, nullptr));
        cg.spectra.push_back(&storage.back());
      }
      groups.push_back(std::move(cg));
    }
    return groups;
  };
  auto real_groups = load_groups("real");
  auto gen_groups = load_groups("synthetic");
  if (real_groups.empty())
    throw DataError("datastore has no real records to evaluate against");

  int t_len = real_groups.front().spectra.front()->length();
  QualityReport qr = quality_report(real_groups, gen_groups, c.min_prominence,
                                    default_min_distance(t_len));
  fs::path gc = out / "table4a_gc.csv";
  write_text_file(gc.string(), gc_report_csv(qr));
  rep.artifacts.push_back(fs::absolute(gc).string());
  fs::path ms = out / "table4b_ms.csv";
  write_text_file(ms.string(), ms_report_csv(qr));
  rep.artifacts.push_back(fs::absolute(ms).string());

  ojson s;
  s["command"] = "evaluate";
  s["real_conditions"] = real_groups.size();
  s["generated_conditions"] = gen_groups.size();

  // Detection quality, only when a trained detector sits in this out dir.
  fs::path det_ck = out / "det.ckpt";
  if (fs::exists(det_ck)) {
    Detector det(c.det, Rng(c.seed).derive_seed("detector-eval-model"));
    NamedParams params;
    det.named_params(params);
    load_checkpoint(det_ck.string(), params);
    auto val_items =
        make_dataset(c.val_per_condition, default_conditions(), c.t_len,
                     Rng(c.seed).derive_seed("evaluate-val"), false);
    std::vector<std::array<int, kSoluteCount>> preds, labels;
    for (const DatasetItem& item : val_items) {
      preds.push_back(det.detect(item.spectrum).decided);
      labels.push_back(item.label.solutes);
    }
    DetectionScores ds = detection_scores(preds, labels);
    std::string csv = "val_size,accuracy";
    for (int idx : kReportOrder) {
      std::string name = kSoluteNames[static_cast<size_t>(idx)];
      csv += "," + name + "_precision," + name + "_recall," + name + "_f1";
    }
    csv += ",avg_f1\n";
    csv += std::to_string(val_items.size()) + "," + scores_csv_cells(ds) + "\n";
    fs::path dp = out / "detection_eval.csv";
    write_text_file(dp.string(), csv);
    rep.artifacts.push_back(fs::absolute(dp).string());
    s["detection_accuracy"] = ds.accuracy;
    s["detection_macro_f1"] = ds.macro_f1;
  }

  write_config_snapshot(c, out, "evaluate", rep);
  rep.summary_json = s.dump();
  append_manifest(out, "evaluate", iso_date(c), rep);
  return rep;
}

RunReport run_export_mesh(const PipelineConfig& cfg, const std::string& db_path,
                          const std::string& out_dir, long long record_id) {
  PipelineConfig c = cfg;
  c.finalize();
  RunReport rep;
  fs::path out(out_dir);
  fs::create_directories(out);
  Datastore store(db_path);

  auto rec = store.get(record_id);
  if (!rec.has_value())
    throw DataError("no record with id " + std::to_string(record_id));
  Spectrum sp = load_record_spectrum(store, *rec, nullptr);
  fs::path p = out / ("mesh_" + std::to_string(record_id) + ".csv");
  export_mesh(sp, p.string());
  rep.artifacts.push_back(fs::absolute(p).string());
  write_config_snapshot(c, out, "export-mesh", rep);
  ojson s;
  s["command"] = "export-mesh";
  s["record"] = record_id;
  s["points"] = sp.scans.size() * static_cast<size_t>(kMzBins);
  rep.summary_json = s.dump();
  append_manifest(out, "export-mesh", iso_date(c), rep);
  return rep;
}

}  // namespace peakgen
