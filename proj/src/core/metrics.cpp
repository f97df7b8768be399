#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "serialize.hpp"

namespace peakgen {

double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b) {
  require(a.size() == b.size() && !a.empty(), "cosine needs equal lengths");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw MetricError("cosine undefined for a zero vector");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size() && a.size() >= 2,
          "pearson needs equal lengths >= 2");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) {
    throw MetricError("pearson undefined for constant input");
  }
  return cov / (std::sqrt(va) * std::sqrt(vb));
}

PeakCountPair peak_count_match(const std::vector<double>& real_tic,
                               const std::vector<double>& gen_tic,
                               double min_prominence, int min_distance) {
  PeakCountPair out;
  out.n_real = static_cast<int>(
      detect_peaks(real_tic, min_prominence, min_distance).size());
  out.n_gen = static_cast<int>(
      detect_peaks(gen_tic, min_prominence, min_distance).size());
  return out;
}

std::string mesh_csv(const Spectrum& s) {
  require(!s.scans.empty(), "mesh export needs scans");
  std::vector<const Scan*> order;
  for (const auto& sc : s.scans) order.push_back(&sc);
  std::sort(order.begin(), order.end(), [](const Scan* a, const Scan* b) {
    return a->retention_index < b->retention_index;
  });
  std::string out = "t,mz,intensity\n";
  for (const Scan* sc : order) {
    const double t = s.t_minutes.empty()
                         ? static_cast<double>(sc->retention_index)
                         : s.t_minutes[sc->retention_index];
    for (size_t b = 0; b < sc->mz.size(); ++b) {
      out += format_double(t);
      out += ',';
      out += std::to_string(b);
      out += ',';
      out += format_double(sc->mz[b]);
      out += '\n';
    }
  }
  return out;
}

void export_mesh(const Spectrum& s, const std::string& path) {
  write_text_file(path, mesh_csv(s));
}

DetectionScores detection_scores(
    const std::vector<std::array<int, kSoluteCount>>& predictions,
    const std::vector<std::array<int, kSoluteCount>>& labels) {
  require(predictions.size() == labels.size(),
          "detection_scores needs equal counts");
  DetectionScores out;
  int exact = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == labels[i]) ++exact;
    for (int c = 0; c < kSoluteCount; ++c) {
      const bool p = predictions[i][c] != 0, y = labels[i][c] != 0;
      if (p && y) ++out.per_class[c].tp;
      if (p && !y) ++out.per_class[c].fp;
      if (!p && y) ++out.per_class[c].fn;
    }
  }
  if (!predictions.empty()) {
    out.accuracy = static_cast<double>(exact) / predictions.size();
  }
  double f1_sum = 0.0;
  for (auto& cs : out.per_class) {
    cs.precision = (cs.tp + cs.fp) ? static_cast<double>(cs.tp) / (cs.tp + cs.fp) : 0.0;
    cs.recall = (cs.tp + cs.fn) ? static_cast<double>(cs.tp) / (cs.tp + cs.fn) : 0.0;
    cs.f1 = (cs.precision + cs.recall > 0.0)
                ? 2.0 * cs.precision * cs.recall / (cs.precision + cs.recall)
                : 0.0;
    f1_sum += cs.f1;
  }
  out.macro_f1 = f1_sum / kSoluteCount;
  return out;
}

namespace {

std::vector<double> mean_tic(const ConditionGroup& g) {
  require(!g.spectra.empty(), "empty condition group");
  std::vector<double> m(g.spectra.front()->tic.size(), 0.0);
  for (const Spectrum* s : g.spectra) {
    require(s->tic.size() == m.size(), "mixed lengths within condition group");
    for (size_t i = 0; i < m.size(); ++i) m[i] += s->tic[i];
  }
  for (double& v : m) v /= g.spectra.size();
  return m;
}

// Class-mean scan near retention index t0: average the nearest scan (within
// tol indices) from each spectrum that has one.
std::vector<double> mean_scan_near(const ConditionGroup& g, int t0, int tol) {
  std::vector<double> acc;
  int count = 0;
  for (const Spectrum* s : g.spectra) {
    const Scan* best = nullptr;
    int best_d = tol + 1;
    for (const auto& sc : s->scans) {
      const int d = std::abs(sc.retention_index - t0);
      if (d < best_d) {
        best_d = d;
        best = &sc;
      }
    }
    if (!best) continue;
    if (acc.empty()) acc.assign(best->mz.size(), 0.0);
    if (best->mz.size() != acc.size()) continue;
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += best->mz[i];
    ++count;
  }
  if (count) {
    for (double& v : acc) v /= count;
  }
  return acc;
}

}  // namespace

QualityReport quality_report(const std::vector<ConditionGroup>& real_set,
                             const std::vector<ConditionGroup>& gen_set,
                             double min_prominence, int min_distance) {
  QualityReport rep;
  std::map<std::string, const ConditionGroup*> gen_by_name;
  for (const auto& g : gen_set) gen_by_name[g.label.name()] = &g;

  for (const auto& rg : real_set) {
    const std::string name = rg.label.name();
    const auto real_mean = mean_tic(rg);
    GcReportRow row;
    row.condition = name;

    const auto it = gen_by_name.find(name);
    if (it == gen_by_name.end()) {
      row.absent = true;
      rep.gc_rows.push_back(row);
      continue;
    }
    const ConditionGroup& gg = *it->second;
    const auto gen_mean = mean_tic(gg);
    row.pcc = pearson(real_mean, gen_mean);
    row.cosine = cosine_similarity(real_mean, gen_mean);
    const auto pc =
        peak_count_match(real_mean, gen_mean, min_prominence, min_distance);
    row.peaks_real = pc.n_real;
    row.peaks_gen = pc.n_gen;
    rep.gc_rows.push_back(row);

    // Representative times: the two tallest peaks of the class-mean real TIC.
    auto peaks = detect_peaks(real_mean, min_prominence, min_distance).peaks;
    std::sort(peaks.begin(), peaks.end(),
              [](const Peak& a, const Peak& b) { return a.height > b.height; });
    if (peaks.size() > 2) peaks.resize(2);
    std::sort(peaks.begin(), peaks.end(),
              [](const Peak& a, const Peak& b) { return a.index < b.index; });
    const int tol = std::max(2, static_cast<int>(real_mean.size()) / 50);
    const Spectrum* timed = rg.spectra.front();
    for (const auto& pk : peaks) {
      MsReportRow ms;
      ms.condition = name;
      ms.t = timed->t_minutes.empty() ? static_cast<double>(pk.index)
                                      : timed->t_minutes[pk.index];
      const auto real_scan = mean_scan_near(rg, pk.index, tol);
      const auto gen_scan = mean_scan_near(gg, pk.index, tol);
      if (real_scan.empty() || gen_scan.empty() ||
          real_scan.size() != gen_scan.size()) {
        ms.absent = true;
        rep.ms_rows.push_back(ms);
        continue;
      }
      try {
        ms.pcc = pearson(real_scan, gen_scan);
        ms.cosine = cosine_similarity(real_scan, gen_scan);
      } catch (const MetricError&) {
        ms.absent = true;
        rep.ms_rows.push_back(ms);
        continue;
      }
      const auto pcs = peak_count_match(real_scan, gen_scan, min_prominence, 1);
      ms.peaks_real = pcs.n_real;
      ms.peaks_gen = pcs.n_gen;
      rep.ms_rows.push_back(ms);
    }
  }
  return rep;
}

std::string gc_report_csv(const QualityReport& r) {
  std::string out = "condition,status,pcc,cosine,peaks_real,peaks_gen\n";
  for (const auto& row : r.gc_rows) {
    out += row.condition;
    out += row.absent ? ",absent,,,," : ",ok," + format_double(row.pcc) + "," +
                                            format_double(row.cosine) + "," +
                                            std::to_string(row.peaks_real) +
                                            "," + std::to_string(row.peaks_gen);
    out += '\n';
  }
  return out;
}

std::string ms_report_csv(const QualityReport& r) {
  std::string out = "condition,status,t,pcc,cosine,peaks_real,peaks_gen\n";
  for (const auto& row : r.ms_rows) {
    out += row.condition;
    if (row.absent) {
      out += ",absent," + format_double(row.t) + ",,,,";
    } else {
      out += ",ok," + format_double(row.t) + "," + format_double(row.pcc) +
             "," + format_double(row.cosine) + "," +
             std::to_string(row.peaks_real) + "," +
             std::to_string(row.peaks_gen);
    }
    out += '\n';
  }
  return out;
}

}  // namespace peakgen
