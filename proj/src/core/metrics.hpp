#pragma once

#include <array>
#include <string>
#include <vector>

#include "spectrum.hpp"

namespace peakgen {

// a.b / (|a||b|). Throws MetricError on a zero vector.
double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b);

// covariance / (sigma_a * sigma_b). Throws MetricError on constant input.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

// detect_peaks on both signals with identical thresholds.
struct PeakCountPair {
  int n_real = 0;
  int n_gen = 0;
};
PeakCountPair peak_count_match(const std::vector<double>& real_tic,
                               const std::vector<double>& gen_tic,
                               double min_prominence, int min_distance);

// CSV of (t, mz, intensity) triples sorted by (t, mz); t is minutes when the
// spectrum carries a retention-time mapping, otherwise the retention index.
std::string mesh_csv(const Spectrum& s);
void export_mesh(const Spectrum& s, const std::string& path);

struct ClassScores {
  int tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct DetectionScores {
  double accuracy = 0.0;  // exact-set match over records
  std::array<ClassScores, kSoluteCount> per_class{};
  double macro_f1 = 0.0;
};

// Multi-hot predictions vs labels; 0/0 ratios score 0 by convention.
DetectionScores detection_scores(
    const std::vector<std::array<int, kSoluteCount>>& predictions,
    const std::vector<std::array<int, kSoluteCount>>& labels);

struct GcReportRow {
  std::string condition;
  bool absent = false;  // condition missing from the generated set
  double pcc = 0.0, cosine = 0.0;
  int peaks_real = 0, peaks_gen = 0;
};

struct MsReportRow {
  std::string condition;
  bool absent = false;
  double t = 0.0;  // representative retention time (minutes or index)
  double pcc = 0.0, cosine = 0.0;
  int peaks_real = 0, peaks_gen = 0;
};

struct QualityReport {
  std::vector<GcReportRow> gc_rows;
  std::vector<MsReportRow> ms_rows;
};

struct ConditionGroup {
  ConditionLabel label;
  std::vector<const Spectrum*> spectra;
};

// Class-mean TIC comparison per condition plus MS-scan comparison at the
// top-2 peak positions of the class-mean real TIC.
QualityReport quality_report(const std::vector<ConditionGroup>& real_set,
                             const std::vector<ConditionGroup>& gen_set,
                             double min_prominence, int min_distance);

std::string gc_report_csv(const QualityReport& r);
std::string ms_report_csv(const QualityReport& r);

}  // namespace peakgen
