#include "serialize.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace peakgen {

using nlohmann::json;

namespace {

json condition_to_json(const ConditionLabel& c) {
  json j;
  j["solvent"] = c.solvent_name();
  j["solutes"] = c.solute_names();
  j["interference"] = interference_name(c.interference);
  return j;
}

ConditionLabel condition_from_json(const json& j) {
  std::vector<std::string> solutes;
  for (const auto& s : j.at("solutes")) solutes.push_back(s.get<std::string>());
  std::string interference = "none";
  if (j.contains("interference")) interference = j.at("interference").get<std::string>();
  return ConditionLabel::make(j.at("solvent").get<std::string>(), solutes,
                              interference);
}

}  // namespace

std::string spectrum_to_json(const Spectrum& s, const ConditionLabel* cond) {
  s.validate();
  json j;
  j["tic"] = s.tic;
  json scans = json::array();
  for (const auto& sc : s.scans) {
    scans.push_back({{"t", sc.retention_index}, {"mz", sc.mz}});
  }
  j["scans"] = std::move(scans);
  if (!s.t_minutes.empty()) j["t_minutes"] = s.t_minutes;
  if (cond) j["condition"] = condition_to_json(*cond);
  return j.dump();
}

Spectrum spectrum_from_json(const std::string& text, ConditionLabel* cond_out) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad spectrum JSON: ") + e.what());
  }
  Spectrum s;
  try {
    s.tic = j.at("tic").get<std::vector<double>>();
    if (j.contains("scans")) {
      for (const auto& sc : j.at("scans")) {
        Scan scan;
        scan.retention_index = sc.at("t").get<int>();
        scan.mz = sc.at("mz").get<std::vector<double>>();
        s.scans.push_back(std::move(scan));
      }
    }
    if (j.contains("t_minutes"))
      s.t_minutes = j.at("t_minutes").get<std::vector<double>>();
    if (cond_out) {
      if (j.contains("condition")) {
        *cond_out = condition_from_json(j.at("condition"));
      } else {
        throw DataError("spectrum JSON has no condition field");
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bad spectrum JSON: ") + e.what());
  }
  s.validate();
  return s;
}

void save_spectrum_json(const std::string& path, const Spectrum& s,
                        const ConditionLabel* cond) {
  write_text_file(path, spectrum_to_json(s, cond) + "\n");
}

Spectrum load_spectrum_json(const std::string& path, ConditionLabel* cond_out) {
  return spectrum_from_json(read_text_file(path), cond_out);
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string tic_to_csv(const Spectrum& s) {
  std::string out = "index,intensity\n";
  for (size_t i = 0; i < s.tic.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_double(s.tic[i]);
    out += '\n';
  }
  return out;
}

void save_tic_csv(const std::string& path, const Spectrum& s) {
  write_text_file(path, tic_to_csv(s));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace peakgen
