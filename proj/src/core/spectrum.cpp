#include "spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace peakgen {

const std::array<const char*, kSolventCount> kSolventNames = {
    "EtOH", "MeOH", "MC", "THF"};
const std::array<const char*, kSoluteCount> kSoluteNames = {
    "DMMP", "DFP", "2-CEES", "2-CEPS", "4-nitrophenol", "ethylenediamine"};
const std::array<const char*, 7> kInterferenceNames = {
    "none", "brick", "soil", "grass", "asphalt", "kerosene", "acetone"};

Interference interference_from_name(const std::string& name) {
  for (size_t i = 0; i < kInterferenceNames.size(); ++i) {
    if (name == kInterferenceNames[i]) return static_cast<Interference>(i);
  }
  throw DataError("unknown interference: '" + name + "'");
}

const char* interference_name(Interference kind) {
  return kInterferenceNames[static_cast<size_t>(kind)];
}

void ConditionLabel::validate() const {
  int sv = 0;
  for (int v : solvent) {
    require(v == 0 || v == 1, "solvent vector must be 0/1");
    sv += v;
  }
  require(sv == 1, "condition must have exactly one solvent");
  int su = 0;
  for (int v : solutes) {
    require(v == 0 || v == 1, "solute vector must be 0/1");
    su += v;
  }
  require(su >= 1, "condition must have at least one solute");
}

int ConditionLabel::solvent_index() const {
  for (int i = 0; i < kSolventCount; ++i) {
    if (solvent[i]) return i;
  }
  throw DataError("condition has no solvent set");
}

std::string ConditionLabel::solvent_name() const {
  return kSolventNames[solvent_index()];
}

std::vector<std::string> ConditionLabel::solute_names() const {
  std::vector<std::string> out;
  for (int i = 0; i < kSoluteCount; ++i) {
    if (solutes[i]) out.emplace_back(kSoluteNames[i]);
  }
  return out;
}

std::string ConditionLabel::name() const {
  std::string out;
  for (const auto& s : solute_names()) {
    if (!out.empty()) out += " + ";
    out += s;
  }
  out += " + " + solvent_name();
  if (interference != Interference::None) {
    out += std::string(" + ") + interference_name(interference);
  }
  return out;
}

ConditionLabel ConditionLabel::make(const std::string& solvent,
                                    const std::vector<std::string>& solutes,
                                    const std::string& interference) {
  ConditionLabel c;
  bool found = false;
  for (int i = 0; i < kSolventCount; ++i) {
    if (solvent == kSolventNames[i]) {
      c.solvent[i] = 1;
      found = true;
    }
  }
  if (!found) throw DataError("unknown solvent: '" + solvent + "'");
  for (const auto& s : solutes) {
    bool hit = false;
    for (int i = 0; i < kSoluteCount; ++i) {
      if (s == kSoluteNames[i]) {
        c.solutes[i] = 1;
        hit = true;
      }
    }
    if (!hit) throw DataError("unknown solute: '" + s + "'");
  }
  c.interference = interference_from_name(interference);
  c.validate();
  return c;
}

void Spectrum::validate() const {
  require(!tic.empty(), "spectrum has empty tic");
  for (double v : tic) {
    require(std::isfinite(v), "spectrum tic contains non-finite value");
  }
  if (!t_minutes.empty()) {
    require(t_minutes.size() == tic.size(),
            "t_minutes length must match tic length");
  }
  for (const auto& s : scans) {
    require(s.retention_index >= 0 && s.retention_index < length(),
            "scan retention index out of range");
  }
}

namespace {

// Strict local maxima; flat-topped maxima report the plateau midpoint.
std::vector<int> local_maxima(const std::vector<double>& x) {
  std::vector<int> out;
  const int n = static_cast<int>(x.size());
  int i = 1;
  while (i < n - 1) {
    if (x[i] > x[i - 1]) {
      int ahead = i + 1;
      while (ahead < n - 1 && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) {
        out.push_back((i + ahead - 1) / 2);
        i = ahead;
        continue;
      }
    }
    ++i;
  }
  return out;
}

// Height above the higher of the two bounding minima, where the bounds run to
// the nearest strictly-taller sample on each side (or the signal edge).
double prominence_of(const std::vector<double>& x, int p, int* left_base,
                     int* right_base) {
  const int n = static_cast<int>(x.size());
  int lo = p;
  double left_min = x[p];
  for (int i = p - 1; i >= 0; --i) {
    if (x[i] > x[p]) break;
    if (x[i] < left_min) {
      left_min = x[i];
      lo = i;
    }
  }
  int hi = p;
  double right_min = x[p];
  for (int i = p + 1; i < n; ++i) {
    if (x[i] > x[p]) break;
    if (x[i] < right_min) {
      right_min = x[i];
      hi = i;
    }
  }
  if (left_base) *left_base = lo;
  if (right_base) *right_base = hi;
  return x[p] - std::max(left_min, right_min);
}

}  // namespace

PeakList detect_peaks(const std::vector<double>& x, double min_prominence,
                      int min_distance) {
  require(min_prominence >= 0.0, "min_prominence must be >= 0");
  require(min_distance >= 1, "min_distance must be >= 1");
  PeakList out;
  if (x.size() < 3) return out;
  const double xmax = *std::max_element(x.begin(), x.end());
  if (!(xmax > 0.0)) return out;
  const double threshold = min_prominence * xmax;

  struct Cand {
    int index;
    double height;
    double prom;
    int left_base;
    int right_base;
  };
  std::vector<Cand> cands;
  for (int p : local_maxima(x)) {
    int lb = 0, rb = 0;
    double prom = prominence_of(x, p, &lb, &rb);
    if (prom >= threshold) cands.push_back({p, x[p], prom, lb, rb});
  }

  // Tallest-first thinning: a peak survives if no already-kept peak lies
  // within min_distance. Ties break toward the lower index.
  std::vector<int> order(cands.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (cands[a].height != cands[b].height)
      return cands[a].height > cands[b].height;
    return cands[a].index < cands[b].index;
  });
  std::vector<char> keep(cands.size(), 0);
  std::vector<int> kept_idx;
  for (int oi : order) {
    bool ok = true;
    for (int k : kept_idx) {
      if (std::abs(cands[oi].index - cands[k].index) < min_distance) {
        ok = false;
        break;
      }
    }
    if (ok) {
      keep[oi] = 1;
      kept_idx.push_back(oi);
    }
  }

  for (size_t i = 0; i < cands.size(); ++i) {
    if (!keep[i]) continue;
    Peak pk;
    pk.index = cands[i].index;
    pk.height = cands[i].height;
    pk.prominence = cands[i].prom;
    // Trapezoidal area over the prominence-bounded support, above the higher
    // base level so overlapping tails do not double-count baseline.
    const double base = cands[i].height - cands[i].prom;
    double area = 0.0;
    for (int j = cands[i].left_base; j < cands[i].right_base; ++j) {
      const double a = std::max(x[j] - base, 0.0);
      const double b = std::max(x[j + 1] - base, 0.0);
      area += 0.5 * (a + b);
    }
    pk.area = area;
    out.peaks.push_back(pk);
  }
  std::sort(out.peaks.begin(), out.peaks.end(),
            [](const Peak& a, const Peak& b) { return a.index < b.index; });
  return out;
}

PeakStats peak_stats(const std::vector<double>& x, const PeakList& peaks) {
  PeakStats st;
  for (const auto& p : peaks.peaks) st.total_peak_area += p.area;
  if (x.empty()) return st;
  const double n = static_cast<double>(x.size());
  double sum = 0.0;
  for (double v : x) sum += v;
  st.mean_intensity = sum / n;
  double sq = 0.0;
  for (double v : x) {
    const double d = v - st.mean_intensity;
    sq += d * d;
  }
  st.std_intensity = std::sqrt(sq / n);
  return st;
}

std::vector<double> min_max_normalize(const std::vector<double>& x) {
  if (x.empty()) return {};
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(x.size(), 0.0);
  if (hi > lo) {
    const double inv = 1.0 / (hi - lo);
    for (size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - lo) * inv;
  }
  return out;
}

}  // namespace peakgen
