#pragma once

#include <string>
#include <vector>

#include "rng.hpp"
#include "spectrum.hpp"

namespace peakgen {

// One target substance: Gaussian peak positions/widths/heights as fractions
// of the retention axis, plus a fragment template over kMzBins.
struct AgentTemplate {
  std::string name;
  std::vector<double> center_frac;  // in (0,1)
  std::vector<double> width_frac;   // sigma as fraction of T
  std::vector<double> height;       // relative heights
  std::vector<double> fragments;    // length kMzBins, max value 1
};

inline constexpr int kMzBins = 64;

const std::vector<AgentTemplate>& agent_templates();

// Per-solvent retention shift (fraction of T, sign carries direction) and
// height scale factor.
struct SolventEffect {
  double shift_frac;
  double scale;
};
SolventEffect solvent_effect(int solvent_index);

// Interference perturbation amplitudes. Presets follow the named materials;
// `none` keeps a small measurement-noise floor and nothing else.
struct InterferenceModel {
  Interference kind = Interference::None;
  int extra_peaks_min = 0;
  int extra_peaks_max = 0;
  double baseline_drift = 0.0;   // amplitude relative to unit peak height
  double retention_shift = 0.0;  // max |jitter| as fraction of T
  double noise_std = 0.0;        // additive Gaussian sigma

  static InterferenceModel preset(Interference kind);
};

struct GroundTruthPeak {
  int index = 0;        // retention index after solvent shift + jitter
  double height = 0.0;  // pre-normalization height contribution
  std::string source;   // solute name or "interference"
};

struct GroundTruth {
  std::vector<GroundTruthPeak> peaks;
  int solute_peaks = 0;
  int interference_peaks = 0;

  std::string to_json() const;
  static GroundTruth from_json(const std::string& text);
};

struct SimResult {
  Spectrum spectrum;
  GroundTruth truth;
};

inline constexpr double kRunMinutes = 20.0;

// Deterministic noiseless retention profile of one solute in one solvent
// (no jitter). simulate_spectrum sums these, so multi-solute raw signals are
// exact superpositions of the single-solute ones.
std::vector<double> solute_profile(int solute_index, int solvent_index, int t_len,
                                   double jitter_frac = 0.0);

SimResult simulate_spectrum(const ConditionLabel& label,
                            const InterferenceModel& model, int t_len,
                            uint64_t seed);

// Synthesize mass scans for an existing TIC (used for generated spectra):
// detects peaks, then emits each peak's scan from the fragment template of
// the most plausible active solute.
std::vector<Scan> synthesize_scans(const std::vector<double>& tic,
                                   const ConditionLabel& label, uint64_t seed);

struct DatasetItem {
  Spectrum spectrum;
  ConditionLabel label;
  GroundTruth truth;
};

// The 16 solvent/solute combinations used throughout evaluation
// (interference = none).
const std::vector<ConditionLabel>& default_conditions();

// Interference kinds compatible with a label: brick and acetone are excluded
// for conditions containing 4-nitrophenol or ethylenediamine.
std::vector<Interference> allowed_interference(const ConditionLabel& label);

// Stratified dataset: n records per condition, seeded per record so subsets
// are stable. With interference_mix, records cycle through the allowed
// interference kinds (starting at none); otherwise the label's own kind.
std::vector<DatasetItem> make_dataset(int n_per_condition,
                                      const std::vector<ConditionLabel>& conditions,
                                      int t_len, uint64_t seed,
                                      bool interference_mix = false);

}  // namespace peakgen
