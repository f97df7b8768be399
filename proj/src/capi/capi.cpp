#include "peakgen/peakgen.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "json.hpp"

#include "core/checkpoint.hpp"
#include "core/common.hpp"
#include "core/datastore.hpp"
#include "core/detector.hpp"
#include "core/gan.hpp"
#include "core/metrics.hpp"
#include "core/pipeline.hpp"
#include "core/serialize.hpp"

using ojson = nlohmann::ordered_json;

namespace {

thread_local std::string t_last_error;

template <typename Fn>
peakgen_status guarded(Fn&& fn) {
  try {
    fn();
    return PEAKGEN_OK;
  } catch (const peakgen::ConfigError& e) {
    t_last_error = e.what();
    return PEAKGEN_ERR_CONFIG;
  } catch (const peakgen::DataError& e) {
    t_last_error = e.what();
    return PEAKGEN_ERR_DATA;
  } catch (const peakgen::IoError& e) {
    t_last_error = e.what();
    return PEAKGEN_ERR_IO;
  } catch (const peakgen::MetricError& e) {
    t_last_error = e.what();
    return PEAKGEN_ERR_METRIC;
  } catch (const peakgen::ContractError& e) {
    t_last_error = e.what();
    return PEAKGEN_ERR_CONTRACT;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return PEAKGEN_ERR_UNKNOWN;
  } catch (...) {
    t_last_error = "unknown error";
    return PEAKGEN_ERR_UNKNOWN;
  }
}

peakgen_status fail_contract(const std::string& msg) {
  t_last_error = msg;
  return PEAKGEN_ERR_CONTRACT;
}

char* dup_cstring(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_out_string(char** slot, const std::string& value) {
  if (slot != nullptr) *slot = dup_cstring(value);
}

peakgen::PipelineConfig resolve_config(const char* config_json) {
  if (config_json == nullptr || config_json[0] == '\0') {
    peakgen::PipelineConfig c;
    c.finalize();
    return c;
  }
  return peakgen::config_from_json(config_json);
}

std::string record_to_json(const peakgen::SpectrumRecord& r) {
  ojson j;
  j["id"] = r.id;
  j["data_type"] = r.data_type;
  j["condition"] = r.condition;
  j["solvent"] = r.solvent;
  j["solute"] = r.solute;
  j["date"] = r.date;
  j["file_name"] = r.file_name;
  return j.dump();
}

peakgen::SpectrumRecord record_from_json(const char* text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw peakgen::DataError(std::string("record is not valid JSON: ") +
                             e.what());
  }
  if (!j.is_object()) throw peakgen::DataError("record must be a JSON object");
  peakgen::SpectrumRecord r;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    try {
      if (k == "id") {
        r.id = it.value().get<long long>();
      } else if (k == "data_type") {
        r.data_type = it.value().get<std::string>();
      } else if (k == "condition") {
        r.condition = it.value().get<std::string>();
      } else if (k == "solvent") {
        r.solvent = it.value().get<std::string>();
      } else if (k == "solute") {
        r.solute = it.value().get<std::string>();
      } else if (k == "date") {
        r.date = it.value().get<std::string>();
      } else if (k == "file_name") {
        r.file_name = it.value().get<std::string>();
      } else {
        throw peakgen::DataError("unknown record field '" + k + "'");
      }
    } catch (const nlohmann::json::exception&) {
      throw peakgen::DataError("record field '" + k + "' has the wrong type");
    }
  }
  return r;
}

peakgen::RecordFilter filter_from_json(const char* text) {
  peakgen::RecordFilter f;
  if (text == nullptr || text[0] == '\0') return f;
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw peakgen::DataError(std::string("filter is not valid JSON: ") +
                             e.what());
  }
  if (!j.is_object()) throw peakgen::DataError("filter must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    std::string v;
    try {
      v = it.value().get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw peakgen::DataError("filter field '" + k + "' must be a string");
    }
    if (k == "data_type") {
      f.data_type = v;
    } else if (k == "condition") {
      f.condition = v;
    } else if (k == "solvent") {
      f.solvent = v;
    } else if (k == "solute") {
      f.solute = v;
    } else if (k == "date_from") {
      f.date_from = v;
    } else if (k == "date_to") {
      f.date_to = v;
    } else {
      throw peakgen::DataError("unknown filter field '" + k + "'");
    }
  }
  return f;
}

peakgen::ConditionLabel condition_from_json(const char* text) {
  if (text == nullptr || text[0] == '\0')
    throw peakgen::ConfigError("condition JSON is required");
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw peakgen::ConfigError(std::string("condition is not valid JSON: ") +
                               e.what());
  }
  if (!j.is_object() || !j.contains("solvent") || !j.contains("solutes"))
    throw peakgen::ConfigError(
        "condition must be an object with 'solvent' and 'solutes'");
  std::string solvent;
  std::vector<std::string> solutes;
  std::string interference = "none";
  try {
    solvent = j.at("solvent").get<std::string>();
    solutes = j.at("solutes").get<std::vector<std::string>>();
    if (j.contains("interference"))
      interference = j.at("interference").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw peakgen::ConfigError("condition fields have the wrong types");
  }
  return peakgen::ConditionLabel::make(solvent, solutes, interference);
}

}  // namespace

struct peakgen_store {
  peakgen::Datastore impl;
};

struct peakgen_gan {
  peakgen::PipelineConfig cfg;
  peakgen::Gan impl;
};

struct peakgen_detector {
  peakgen::PipelineConfig cfg;
  peakgen::Detector impl;
};

extern "C" {

const char* peakgen_version(void) { return "1.0.0"; }

const char* peakgen_last_error(void) { return t_last_error.c_str(); }

void peakgen_string_free(char* s) { std::free(s); }

peakgen_status peakgen_run_simulate(const char* config_json,
                                    const char* db_path, const char* out_dir,
                                    char** summary_json) {
  if (db_path == nullptr) return fail_contract("db_path is null");
  if (out_dir == nullptr) return fail_contract("out_dir is null");
  return guarded([&] {
    auto rep = peakgen::run_simulate(resolve_config(config_json), db_path,
                                     out_dir);
    set_out_string(summary_json, rep.summary_json);
  });
}

peakgen_status peakgen_run_eda(const char* config_json, const char* db_path,
                               const char* out_dir, char** summary_json) {
  if (db_path == nullptr) return fail_contract("db_path is null");
  if (out_dir == nullptr) return fail_contract("out_dir is null");
  return guarded([&] {
    auto rep = peakgen::run_eda(resolve_config(config_json), db_path, out_dir);
    set_out_string(summary_json, rep.summary_json);
  });
}

peakgen_status peakgen_run_train_gan(const char* config_json,
                                     const char* db_path, const char* out_dir,
                                     char** summary_json) {
  if (db_path == nullptr) return fail_contract("db_path is null");
  if (out_dir == nullptr) return fail_contract("out_dir is null");
  return guarded([&] {
    auto rep = peakgen::run_train_gan(resolve_config(config_json), db_path,
                                      out_dir);
    set_out_string(summary_json, rep.summary_json);
  });
}

peakgen_status peakgen_run_generate(const char* config_json,
                                    const char* db_path, const char* out_dir,
                                    const char* condition, int n,
                                    char** summary_json) {
  if (db_path == nullptr) return fail_contract("db_path is null");
  if (out_dir == nullptr) return fail_contract("out_dir is null");
  return guarded([&] {
    auto rep = peakgen::run_generate(resolve_config(config_json), db_path,
                                     out_dir,
                                     condition == nullptr ? "" : condition, n);
    set_out_string(summary_json, rep.summary_json);
  });
}

peakgen_status peakgen_run_train_detector(const char* config_json,
                                          const char* db_path,
                                          const char* out_dir, int ladder,
                                          char** summary_json) {
  if (db_path == nullptr) return fail_contract("db_path is null");
  if (out_dir == nullptr) return fail_contract("out_dir is null");
  return guarded([&] {
    auto rep = peakgen::run_train_detector(resolve_config(config_json), db_path,
                                           out_dir, ladder != 0);
    set_out_string(summary_json, rep.summary_json);
  });
}

peakgen_status peakgen_run_evaluate(const char* config_json,
                                    const char* db_path, const char* out_dir,
                                    char** summary_json) {
  if (db_path == nullptr) return fail_contract("db_path is null");
  if (out_dir == nullptr) return fail_contract("out_dir is null");
  return guarded([&] {
    auto rep = peakgen::run_evaluate(resolve_config(config_json), db_path,
                                     out_dir);
    set_out_string(summary_json, rep.summary_json);
  });
}

peakgen_status peakgen_run_export_mesh(const char* config_json,
                                       const char* db_path,
                                       const char* out_dir, long long record_id,
                                       char** summary_json) {
  if (db_path == nullptr) return fail_contract("db_path is null");
  if (out_dir == nullptr) return fail_contract("out_dir is null");
  return guarded([&] {
    auto rep = peakgen::run_export_mesh(resolve_config(config_json), db_path,
                                        out_dir, record_id);
    set_out_string(summary_json, rep.summary_json);
  });
}

peakgen_status peakgen_store_open(const char* path, peakgen_store_t** out) {
  if (path == nullptr) return fail_contract("path is null");
  if (out == nullptr) return fail_contract("out is null");
  return guarded([&] { *out = new peakgen_store{peakgen::Datastore(path)}; });
}

void peakgen_store_close(peakgen_store_t* store) { delete store; }

peakgen_status peakgen_store_insert(peakgen_store_t* store,
                                    const char* record_json,
                                    long long* id_out) {
  if (store == nullptr) return fail_contract("store is null");
  if (record_json == nullptr) return fail_contract("record_json is null");
  return guarded([&] {
    long long id = store->impl.insert(record_from_json(record_json));
    if (id_out != nullptr) *id_out = id;
  });
}

peakgen_status peakgen_store_query(peakgen_store_t* store,
                                   const char* filter_json,
                                   char** records_json) {
  if (store == nullptr) return fail_contract("store is null");
  if (records_json == nullptr) return fail_contract("records_json is null");
  return guarded([&] {
    auto records = store->impl.query(filter_from_json(filter_json));
    std::string out = "[";
    for (size_t i = 0; i < records.size(); ++i) {
      if (i > 0) out += ",";
      out += record_to_json(records[i]);
    }
    out += "]";
    set_out_string(records_json, out);
  });
}

peakgen_status peakgen_store_get(peakgen_store_t* store, long long id,
                                 char** record_json) {
  if (store == nullptr) return fail_contract("store is null");
  if (record_json == nullptr) return fail_contract("record_json is null");
  return guarded([&] {
    auto rec = store->impl.get(id);
    if (!rec.has_value())
      throw peakgen::DataError("no record with id " + std::to_string(id));
    set_out_string(record_json, record_to_json(*rec));
  });
}

peakgen_status peakgen_store_count(peakgen_store_t* store, long long* out) {
  if (store == nullptr) return fail_contract("store is null");
  if (out == nullptr) return fail_contract("out is null");
  *out = static_cast<long long>(store->impl.size());
  return PEAKGEN_OK;
}

peakgen_status peakgen_gan_open(const char* config_json,
                                const char* checkpoint_path,
                                peakgen_gan_t** out) {
  if (checkpoint_path == nullptr) return fail_contract("checkpoint_path is null");
  if (out == nullptr) return fail_contract("out is null");
  return guarded([&] {
    auto cfg = resolve_config(config_json);
    auto handle = std::make_unique<peakgen_gan>(
        peakgen_gan{cfg, peakgen::Gan(cfg.gan, 0)});
    peakgen::NamedParams params;
    handle->impl.named_params(params);
    peakgen::load_checkpoint(checkpoint_path, params);
    *out = handle.release();
  });
}

void peakgen_gan_close(peakgen_gan_t* gan) { delete gan; }

peakgen_status peakgen_gan_generate(peakgen_gan_t* gan,
                                    const char* condition_json, int n,
                                    unsigned long long seed,
                                    char** spectra_json) {
  if (gan == nullptr) return fail_contract("gan is null");
  if (spectra_json == nullptr) return fail_contract("spectra_json is null");
  if (n <= 0) return fail_contract("n must be positive");
  return guarded([&] {
    auto label = condition_from_json(condition_json);
    auto tics = gan->impl.generate(label, n, seed);
    std::string out = "[";
    for (size_t i = 0; i < tics.size(); ++i) {
      if (i > 0) out += ",";
      out += "[";
      for (size_t t = 0; t < tics[i].size(); ++t) {
        if (t > 0) out += ",";
        out += peakgen::format_double(tics[i][t]);
      }
      out += "]";
    }
    out += "]";
    set_out_string(spectra_json, out);
  });
}

peakgen_status peakgen_detector_open(const char* config_json,
                                     const char* checkpoint_path,
                                     peakgen_detector_t** out) {
  if (checkpoint_path == nullptr) return fail_contract("checkpoint_path is null");
  if (out == nullptr) return fail_contract("out is null");
  return guarded([&] {
    auto cfg = resolve_config(config_json);
    auto handle = std::make_unique<peakgen_detector>(
        peakgen_detector{cfg, peakgen::Detector(cfg.det, 0)});
    peakgen::NamedParams params;
    handle->impl.named_params(params);
    peakgen::load_checkpoint(checkpoint_path, params);
    *out = handle.release();
  });
}

void peakgen_detector_close(peakgen_detector_t* det) { delete det; }

peakgen_status peakgen_detector_detect(peakgen_detector_t* det,
                                       const char* spectrum_json,
                                       char** result_json) {
  if (det == nullptr) return fail_contract("detector is null");
  if (spectrum_json == nullptr) return fail_contract("spectrum_json is null");
  if (result_json == nullptr) return fail_contract("result_json is null");
  return guarded([&] {
    peakgen::Spectrum sp = peakgen::spectrum_from_json(spectrum_json, nullptr);
    peakgen::DetectionResult r = det->impl.detect(sp);
    ojson j;
    ojson names = ojson::array();
    for (const char* name : peakgen::kSoluteNames) names.push_back(name);
    j["solute_names"] = names;
    j["posteriors"] = r.posteriors;
    j["decided"] = r.decided;
    j["peak_presence"] = r.peak_presence;
    set_out_string(result_json, j.dump());
  });
}

peakgen_status peakgen_cosine_similarity(const double* a, const double* b,
                                         size_t n, double* out) {
  if (a == nullptr || b == nullptr) return fail_contract("input array is null");
  if (out == nullptr) return fail_contract("out is null");
  return guarded([&] {
    std::vector<double> va(a, a + n), vb(b, b + n);
    *out = peakgen::cosine_similarity(va, vb);
  });
}

peakgen_status peakgen_pearson(const double* a, const double* b, size_t n,
                               double* out) {
  if (a == nullptr || b == nullptr) return fail_contract("input array is null");
  if (out == nullptr) return fail_contract("out is null");
  return guarded([&] {
    std::vector<double> va(a, a + n), vb(b, b + n);
    *out = peakgen::pearson(va, vb);
  });
}

peakgen_status peakgen_peak_count(const double* x, size_t n,
                                  double min_prominence, int min_distance,
                                  int* out) {
  if (x == nullptr) return fail_contract("x is null");
  if (out == nullptr) return fail_contract("out is null");
  return guarded([&] {
    std::vector<double> vx(x, x + n);
    *out = static_cast<int>(
        peakgen::detect_peaks(vx, min_prominence, min_distance).size());
  });
}

}  // extern "C"
