#include "datastore.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace peakgen {

namespace fs = std::filesystem;
using nlohmann::json;

bool is_iso_datetime(const std::string& s) {
  // YYYY-MM-DDTHH:MM:SS
  if (s.size() != 19) return false;
  for (size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    switch (i) {
      case 4:
      case 7:
        if (c != '-') return false;
        break;
      case 10:
        if (c != 'T') return false;
        break;
      case 13:
      case 16:
        if (c != ':') return false;
        break;
      default:
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
  }
  const auto field = [&](size_t pos) {
    return 10 * (s[pos] - '0') + (s[pos + 1] - '0');
  };
  const int month = field(5), day = field(8);
  const int hour = field(11), minute = field(14), second = field(17);
  return month >= 1 && month <= 12 && day >= 1 && day <= 31 && hour <= 23 &&
         minute <= 59 && second <= 59;
}

std::string now_iso_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[80];  // generous: %04d fields widen for out-of-range tm values
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  return buf;
}

namespace {

json record_to_json(const SpectrumRecord& r) {
  return json{{"id", r.id},           {"data_type", r.data_type},
              {"condition", r.condition}, {"solvent", r.solvent},
              {"solute", r.solute},   {"date", r.date},
              {"file_name", r.file_name}};
}

SpectrumRecord record_from_json(const json& j) {
  SpectrumRecord r;
  r.id = j.at("id").get<long long>();
  r.data_type = j.at("data_type").get<std::string>();
  r.condition = j.at("condition").get<std::string>();
  r.solvent = j.at("solvent").get<std::string>();
  r.solute = j.at("solute").get<std::string>();
  r.date = j.at("date").get<std::string>();
  r.file_name = j.at("file_name").get<std::string>();
  return r;
}

}  // namespace

Datastore::Datastore(std::string path) : path_(std::move(path)) {
  const fs::path p(path_);
  dir_ = p.has_parent_path() ? p.parent_path().string() : ".";
  if (!fs::exists(path_)) return;  // fresh store

  std::ifstream in(path_, std::ios::binary);
  if (!in) throw IoError("cannot open database: " + path_);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn final append, drop it
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    try {
      records_.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw IoError("corrupt database line in " + path_ + ": " + e.what());
    }
  }
  for (const auto& r : records_) next_id_ = std::max(next_id_, r.id + 1);
}

std::string Datastore::resolve(const std::string& file_name) const {
  const fs::path f(file_name);
  if (f.is_absolute()) return file_name;
  return (fs::path(dir_) / f).string();
}

long long Datastore::insert(SpectrumRecord rec) {
  require(rec.data_type == "real" || rec.data_type == "synthetic",
          "data_type must be 'real' or 'synthetic'");
  require(!rec.file_name.empty(), "record needs a file_name");
  if (rec.date.empty()) rec.date = now_iso_utc();
  require(is_iso_datetime(rec.date), "date must be ISO-8601 seconds: " + rec.date);
  if (!fs::exists(resolve(rec.file_name))) {
    throw DataError("referential integrity: missing file " +
                    resolve(rec.file_name));
  }
  rec.id = next_id_++;

  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to database: " + path_);
  out << record_to_json(rec).dump() << '\n';
  out.flush();
  if (!out) throw IoError("database append failed: " + path_);

  records_.push_back(rec);
  return rec.id;
}

std::vector<SpectrumRecord> Datastore::query(const RecordFilter& f) const {
  if (f.date_from && !is_iso_datetime(*f.date_from)) {
    throw DataError("malformed date_from: " + *f.date_from);
  }
  if (f.date_to && !is_iso_datetime(*f.date_to)) {
    throw DataError("malformed date_to: " + *f.date_to);
  }
  std::vector<SpectrumRecord> out;
  for (const auto& r : records_) {
    if (f.data_type && r.data_type != *f.data_type) continue;
    if (f.condition && r.condition != *f.condition) continue;
    if (f.solvent && r.solvent != *f.solvent) continue;
    if (f.solute && r.solute != *f.solute) continue;
    if (f.date_from && r.date < *f.date_from) continue;
    if (f.date_to && r.date > *f.date_to) continue;
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(),
            [](const SpectrumRecord& a, const SpectrumRecord& b) {
              return a.id < b.id;
            });
  return out;
}

std::optional<SpectrumRecord> Datastore::get(long long id) const {
  for (const auto& r : records_) {
    if (r.id == id) return r;
  }
  return std::nullopt;
}

std::string Datastore::csv() const {
  std::string out = "id,data_type,condition,solvent,solute,date,file_name\n";
  auto rows = records_;
  std::sort(rows.begin(), rows.end(),
            [](const SpectrumRecord& a, const SpectrumRecord& b) {
              return a.id < b.id;
            });
  const auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  for (const auto& r : rows) {
    out += std::to_string(r.id) + "," + quote(r.data_type) + "," +
           quote(r.condition) + "," + quote(r.solvent) + "," +
           quote(r.solute) + "," + quote(r.date) + "," + quote(r.file_name) +
           "\n";
  }
  return out;
}

}  // namespace peakgen
