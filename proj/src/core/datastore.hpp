#pragma once

#include <optional>
#include <string>
#include <vector>

#include "common.hpp"

namespace peakgen {

struct SpectrumRecord {
  long long id = 0;
  std::string data_type;  // "real" | "synthetic"
  std::string condition;  // interference tag
  std::string solvent;
  std::string solute;     // comma-joined names
  std::string date;       // ISO-8601, seconds granularity
  std::string file_name;  // relative to the database file's directory
};

// All present predicates must hold (conjunctive); date bounds are inclusive.
struct RecordFilter {
  std::optional<std::string> data_type, condition, solvent, solute;
  std::optional<std::string> date_from, date_to;
};

bool is_iso_datetime(const std::string& s);
std::string now_iso_utc();

// Single-file store: one JSON object per line, appended on insert, with the
// full index rebuilt on open. A torn trailing line (no newline) is dropped.
class Datastore {
 public:
  explicit Datastore(std::string path);

  // Record id is assigned here; the referenced file must already exist.
  long long insert(SpectrumRecord rec);

  std::vector<SpectrumRecord> query(const RecordFilter& filter) const;
  std::optional<SpectrumRecord> get(long long id) const;

  size_t size() const { return records_.size(); }
  const std::string& path() const { return path_; }
  // Resolves a stored file_name against the database directory.
  std::string resolve(const std::string& file_name) const;

  std::string csv() const;

 private:
  std::string path_, dir_;
  std::vector<SpectrumRecord> records_;
  long long next_id_ = 1;
};

}  // namespace peakgen
