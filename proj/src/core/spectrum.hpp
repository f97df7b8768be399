#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"

namespace peakgen {

inline constexpr int kSolventCount = 4;
inline constexpr int kSoluteCount = 6;

extern const std::array<const char*, kSolventCount> kSolventNames;   // EtOH MeOH MC THF
extern const std::array<const char*, kSoluteCount> kSoluteNames;     // DMMP DFP 2-CEES 2-CEPS 4-nitrophenol ethylenediamine
extern const std::array<const char*, 7> kInterferenceNames;          // none brick soil grass asphalt kerosene acetone

enum class Interference { None = 0, Brick, Soil, Grass, Asphalt, Kerosene, Acetone };

Interference interference_from_name(const std::string& name);
const char* interference_name(Interference kind);

// Experimental condition: one solvent, one or more solutes, optional
// interfering material.
struct ConditionLabel {
  std::array<int, kSolventCount> solvent{};  // exactly one entry 1
  std::array<int, kSoluteCount> solutes{};   // at least one entry 1
  Interference interference = Interference::None;

  void validate() const;
  int solvent_index() const;
  std::string solvent_name() const;
  std::vector<std::string> solute_names() const;
  // "2-CEES + 2-CEPS + EtOH", with "+ <interference>" appended when present.
  std::string name() const;

  static ConditionLabel make(const std::string& solvent,
                             const std::vector<std::string>& solutes,
                             const std::string& interference = "none");
};

struct Scan {
  int retention_index = 0;
  std::vector<double> mz;
};

// A total-ion chromatogram plus optional per-peak mass scans and an optional
// retention-index -> minutes mapping.
struct Spectrum {
  std::vector<double> tic;
  std::vector<Scan> scans;
  std::vector<double> t_minutes;  // empty or same length as tic

  void validate() const;
  int length() const { return static_cast<int>(tic.size()); }
};

struct Peak {
  int index = 0;
  double height = 0.0;
  double area = 0.0;
  double prominence = 0.0;
};

struct PeakList {
  std::vector<Peak> peaks;
  size_t size() const { return peaks.size(); }
};

// Local maxima whose prominence is at least min_prominence * max(x), thinned
// so surviving peaks are at least min_distance indices apart (taller peaks
// win). Constant or empty-ish signals yield an empty list.
PeakList detect_peaks(const std::vector<double>& x, double min_prominence,
                      int min_distance);

struct PeakStats {
  double total_peak_area = 0.0;
  double mean_intensity = 0.0;
  double std_intensity = 0.0;
};

// Trapezoidal area over each peak's prominence-bounded support; mean and
// (population) standard deviation over the whole signal.
PeakStats peak_stats(const std::vector<double>& x, const PeakList& peaks);

// (x - min) / (max - min); a constant signal maps to all zeros.
std::vector<double> min_max_normalize(const std::vector<double>& x);

inline int default_min_distance(int t) { return (t + 99) / 100; }
inline constexpr double kDefaultMinProminence = 0.05;

}  // namespace peakgen
