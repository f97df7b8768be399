#include "simulator.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "serialize.hpp"

namespace peakgen {

namespace {

std::vector<double> fragment_pattern(
    std::initializer_list<std::pair<int, double>> spikes) {
  std::vector<double> f(kMzBins, 0.0);
  for (const auto& [bin, h] : spikes) f[bin] = h;
  return f;
}

std::vector<AgentTemplate> build_templates() {
  std::vector<AgentTemplate> t(kSoluteCount);
  t[0] = {"DMMP",
          {0.16, 0.50},
          {0.010, 0.012},
          {1.00, 0.65},
          fragment_pattern({{12, 1.0}, {30, 0.7}, {45, 0.3}})};
  t[1] = {"DFP",
          {0.26, 0.62},
          {0.011, 0.010},
          {0.90, 0.70},
          fragment_pattern({{8, 0.9}, {36, 1.0}, {50, 0.25}})};
  t[2] = {"2-CEES",
          {0.10, 0.72},
          {0.009, 0.013},
          {1.00, 0.80},
          fragment_pattern({{15, 1.0}, {41, 0.6}, {27, 0.35}})};
  t[3] = {"2-CEPS",
          {0.36, 0.86},
          {0.012, 0.010},
          {0.95, 0.75},
          fragment_pattern({{19, 0.8}, {47, 1.0}, {33, 0.3}})};
  t[4] = {"4-nitrophenol",
          {0.44, 0.80},
          {0.011, 0.012},
          {0.70, 1.00},
          fragment_pattern({{22, 1.0}, {53, 0.8}, {10, 0.25}})};
  t[5] = {"ethylenediamine",
          {0.06, 0.295, 0.57},
          {0.009, 0.011, 0.012},
          {0.85, 1.00, 0.60},
          fragment_pattern({{6, 1.0}, {25, 0.5}, {58, 0.2}})};
  return t;
}

}  // namespace

const std::vector<AgentTemplate>& agent_templates() {
  static const std::vector<AgentTemplate> t = build_templates();
  return t;
}

SolventEffect solvent_effect(int solvent_index) {
  // EtOH is the reference; the others shift retention and rescale response.
  switch (solvent_index) {
    case 0: return {0.0, 1.00};          // EtOH
    case 1: return {+4.0 / 512, 0.85};   // MeOH
    case 2: return {-4.0 / 512, 1.20};   // MC
    case 3: return {+8.0 / 512, 0.75};   // THF
    default: throw DataError("bad solvent index");
  }
}

InterferenceModel InterferenceModel::preset(Interference kind) {
  InterferenceModel m;
  m.kind = kind;
  switch (kind) {
    case Interference::None:
      m.noise_std = 0.004;
      break;
    case Interference::Brick:
      m = {kind, 2, 4, 0.06, 0.004, 0.010};
      break;
    case Interference::Soil:
      m = {kind, 3, 5, 0.08, 0.006, 0.012};
      break;
    case Interference::Grass:
      m = {kind, 2, 4, 0.05, 0.004, 0.010};
      break;
    case Interference::Asphalt:
      m = {kind, 3, 6, 0.10, 0.008, 0.014};
      break;
    case Interference::Kerosene:
      m = {kind, 4, 6, 0.07, 0.010, 0.012};
      break;
    case Interference::Acetone:
      m = {kind, 1, 3, 0.04, 0.003, 0.008};
      break;
  }
  return m;
}

std::string GroundTruth::to_json() const {
  nlohmann::json j;
  j["solute_peaks"] = solute_peaks;
  j["interference_peaks"] = interference_peaks;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : peaks) {
    arr.push_back({{"index", p.index}, {"height", p.height}, {"source", p.source}});
  }
  j["peaks"] = std::move(arr);
  return j.dump();
}

GroundTruth GroundTruth::from_json(const std::string& text) {
  GroundTruth g;
  try {
    auto j = nlohmann::json::parse(text);
    g.solute_peaks = j.at("solute_peaks").get<int>();
    g.interference_peaks = j.at("interference_peaks").get<int>();
    for (const auto& p : j.at("peaks")) {
      g.peaks.push_back({p.at("index").get<int>(), p.at("height").get<double>(),
                         p.at("source").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad ground-truth JSON: ") + e.what());
  }
  return g;
}

std::vector<double> solute_profile(int solute_index, int solvent_index,
                                   int t_len, double jitter_frac) {
  require(solute_index >= 0 && solute_index < kSoluteCount, "bad solute index");
  const auto& tpl = agent_templates()[solute_index];
  const auto eff = solvent_effect(solvent_index);
  std::vector<double> raw(t_len, 0.0);
  for (size_t p = 0; p < tpl.center_frac.size(); ++p) {
    const double c = (tpl.center_frac[p] + eff.shift_frac + jitter_frac) * t_len;
    const double sigma = tpl.width_frac[p] * t_len;
    const double h = tpl.height[p] * eff.scale;
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (int t = 0; t < t_len; ++t) {
      const double d = t - c;
      raw[t] += h * std::exp(-d * d * inv2s2);
    }
  }
  return raw;
}

SimResult simulate_spectrum(const ConditionLabel& label,
                            const InterferenceModel& model, int t_len,
                            uint64_t seed) {
  label.validate();
  require(t_len >= 64, "simulate_spectrum needs T >= 64");
  Rng rng(seed);

  // One run-wide retention jitter, drawn first so the draw count does not
  // depend on how many solutes are active.
  const double jitter =
      rng.uniform(-model.retention_shift, model.retention_shift);

  std::vector<double> raw(t_len, 0.0);
  GroundTruth truth;
  const auto eff = solvent_effect(label.solvent_index());
  for (int si = 0; si < kSoluteCount; ++si) {
    if (!label.solutes[si]) continue;
    const auto profile = solute_profile(si, label.solvent_index(), t_len, jitter);
    for (int t = 0; t < t_len; ++t) raw[t] += profile[t];
    const auto& tpl = agent_templates()[si];
    for (size_t p = 0; p < tpl.center_frac.size(); ++p) {
      GroundTruthPeak gt;
      const double c = (tpl.center_frac[p] + eff.shift_frac + jitter) * t_len;
      gt.index = std::clamp(static_cast<int>(std::lround(c)), 0, t_len - 1);
      gt.height = tpl.height[p] * eff.scale;
      gt.source = tpl.name;
      truth.peaks.push_back(gt);
      ++truth.solute_peaks;
    }
  }

  if (model.extra_peaks_max > 0) {
    const int span = model.extra_peaks_max - model.extra_peaks_min + 1;
    const int n_extra =
        model.extra_peaks_min + static_cast<int>(rng.below(span));
    for (int e = 0; e < n_extra; ++e) {
      const double c = rng.uniform(0.03, 0.97) * t_len;
      const double h = rng.uniform(0.15, 0.45);
      const double sigma = rng.uniform(0.8, 1.3) * 0.010 * t_len;
      const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
      for (int t = 0; t < t_len; ++t) {
        const double d = t - c;
        raw[t] += h * std::exp(-d * d * inv2s2);
      }
      GroundTruthPeak gt;
      gt.index = std::clamp(static_cast<int>(std::lround(c)), 0, t_len - 1);
      gt.height = h;
      gt.source = "interference";
      truth.peaks.push_back(gt);
      ++truth.interference_peaks;
    }
  }

  if (model.baseline_drift > 0.0) {
    const double freq = rng.uniform(0.5, 1.5);
    const double phase = rng.uniform(0.0, 6.283185307179586);
    for (int t = 0; t < t_len; ++t) {
      raw[t] += model.baseline_drift * 0.5 *
                (1.0 + std::sin(6.283185307179586 * freq * t / t_len + phase));
    }
  }

  if (model.noise_std > 0.0) {
    for (int t = 0; t < t_len; ++t) raw[t] += model.noise_std * rng.normal();
  }
  for (double& v : raw) v = std::max(v, 0.0);

  Spectrum s;
  s.tic = min_max_normalize(raw);
  s.t_minutes.resize(t_len);
  for (int t = 0; t < t_len; ++t) s.t_minutes[t] = t * kRunMinutes / t_len;

  // One mass scan per ground-truth peak, from the owning solute's fragment
  // template (interference peaks get a generic random pattern).
  double max_h = 0.0;
  for (const auto& p : truth.peaks) max_h = std::max(max_h, p.height);
  if (max_h <= 0.0) max_h = 1.0;
  for (const auto& p : truth.peaks) {
    Scan scan;
    scan.retention_index = p.index;
    scan.mz.assign(kMzBins, 0.0);
    const double rel = p.height / max_h;
    if (p.source == "interference") {
      const int n_frag = 2 + static_cast<int>(rng.below(2));
      for (int f = 0; f < n_frag; ++f) {
        scan.mz[rng.below(kMzBins)] = rng.uniform(0.3, 0.8) * rel;
      }
    } else {
      for (int si = 0; si < kSoluteCount; ++si) {
        if (agent_templates()[si].name == p.source) {
          for (int b = 0; b < kMzBins; ++b) {
            scan.mz[b] = agent_templates()[si].fragments[b] * rel;
          }
        }
      }
    }
    if (model.noise_std > 0.0) {
      for (double& v : scan.mz) {
        v = std::max(v + 0.5 * model.noise_std * rng.normal(), 0.0);
      }
    }
    s.scans.push_back(std::move(scan));
  }
  std::sort(s.scans.begin(), s.scans.end(),
            [](const Scan& a, const Scan& b) {
              return a.retention_index < b.retention_index;
            });
  s.validate();
  return {std::move(s), std::move(truth)};
}

std::vector<Scan> synthesize_scans(const std::vector<double>& tic,
                                   const ConditionLabel& label, uint64_t seed) {
  Rng rng(seed);
  const int t_len = static_cast<int>(tic.size());
  const auto peaks =
      detect_peaks(tic, kDefaultMinProminence, default_min_distance(t_len));
  const auto eff = solvent_effect(label.solvent_index());
  std::vector<Scan> scans;
  for (const auto& pk : peaks.peaks) {
    // Nearest expected solute peak position wins if within 2% of the axis.
    int best_solute = -1;
    double best_dist = 0.02 * t_len;
    for (int si = 0; si < kSoluteCount; ++si) {
      if (!label.solutes[si]) continue;
      const auto& tpl = agent_templates()[si];
      for (double cf : tpl.center_frac) {
        const double c = (cf + eff.shift_frac) * t_len;
        const double d = std::fabs(c - pk.index);
        if (d < best_dist) {
          best_dist = d;
          best_solute = si;
        }
      }
    }
    Scan scan;
    scan.retention_index = pk.index;
    scan.mz.assign(kMzBins, 0.0);
    if (best_solute >= 0) {
      for (int b = 0; b < kMzBins; ++b) {
        scan.mz[b] = agent_templates()[best_solute].fragments[b] * pk.height;
      }
    } else {
      const int n_frag = 2 + static_cast<int>(rng.below(2));
      for (int f = 0; f < n_frag; ++f) {
        scan.mz[rng.below(kMzBins)] = rng.uniform(0.3, 0.8) * pk.height;
      }
    }
    scans.push_back(std::move(scan));
  }
  return scans;
}

const std::vector<ConditionLabel>& default_conditions() {
  static const std::vector<ConditionLabel> conds = [] {
    std::vector<ConditionLabel> c;
    const auto add = [&](const std::vector<std::string>& solutes,
                         const std::string& solvent) {
      c.push_back(ConditionLabel::make(solvent, solutes));
    };
    add({"4-nitrophenol"}, "EtOH");
    add({"4-nitrophenol"}, "MC");
    add({"4-nitrophenol"}, "MeOH");
    add({"4-nitrophenol"}, "THF");
    add({"ethylenediamine"}, "EtOH");
    add({"ethylenediamine"}, "MC");
    add({"ethylenediamine"}, "MeOH");
    add({"ethylenediamine"}, "THF");
    add({"2-CEES"}, "EtOH");
    add({"2-CEES"}, "MC");
    add({"2-CEES"}, "MeOH");
    add({"2-CEES"}, "THF");
    add({"2-CEES", "2-CEPS"}, "EtOH");
    add({"2-CEES", "2-CEPS", "DFP"}, "MeOH");
    add({"2-CEPS", "DFP", "DMMP"}, "THF");
    add({"2-CEES", "2-CEPS", "DFP", "DMMP"}, "MC");
    return c;
  }();
  return conds;
}

std::vector<Interference> allowed_interference(const ConditionLabel& label) {
  const bool ied = label.solutes[4] || label.solutes[5];
  std::vector<Interference> out;
  for (size_t i = 0; i < kInterferenceNames.size(); ++i) {
    const auto kind = static_cast<Interference>(i);
    if (ied && (kind == Interference::Brick || kind == Interference::Acetone))
      continue;
    out.push_back(kind);
  }
  return out;
}

std::vector<DatasetItem> make_dataset(int n_per_condition,
                                      const std::vector<ConditionLabel>& conditions,
                                      int t_len, uint64_t seed,
                                      bool interference_mix) {
  require(n_per_condition >= 1, "make_dataset needs n >= 1");
  require(!conditions.empty(), "make_dataset needs conditions");
  Rng master(seed);
  std::vector<DatasetItem> out;
  out.reserve(conditions.size() * n_per_condition);
  for (const auto& cond : conditions) {
    const auto allowed = allowed_interference(cond);
    for (int r = 0; r < n_per_condition; ++r) {
      ConditionLabel label = cond;
      if (interference_mix) {
        label.interference = allowed[r % allowed.size()];
      } else if (std::find(allowed.begin(), allowed.end(), label.interference) ==
                 allowed.end()) {
        label.interference = Interference::None;  // excluded high-risk pairing
      }
      const auto model = InterferenceModel::preset(label.interference);
      const uint64_t rec_seed =
          master.derive_seed(label.name() + "#" + std::to_string(r));
      auto sim = simulate_spectrum(label, model, t_len, rec_seed);
      out.push_back({std::move(sim.spectrum), label, std::move(sim.truth)});
    }
  }
  return out;
}

}  // namespace peakgen
