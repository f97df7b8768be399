#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "core/simulator.hpp"
#include "core/spectrum.hpp"

using namespace peakgen;

namespace {

InterferenceModel quiet_model() {
  // Everything off: no extra peaks, no drift, no jitter, no noise. This makes
  // the raw signal an exact superposition of solute profiles.
  InterferenceModel m;
  m.kind = Interference::None;
  return m;
}

std::vector<double> normalize_ref(std::vector<double> v) {
  double lo = v[0], hi = v[0];
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  for (double& x : v) x = (x - lo) / span;
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("same label, model, length and seed reproduce the record exactly") {
  const auto label = ConditionLabel::make("MeOH", {"2-CEES", "DMMP"}, "soil");
  const auto model = InterferenceModel::preset(Interference::Soil);
  const auto a = simulate_spectrum(label, model, 256, 99);
  const auto b = simulate_spectrum(label, model, 256, 99);
  CHECK(a.spectrum.tic == b.spectrum.tic);
  CHECK(a.spectrum.t_minutes == b.spectrum.t_minutes);
  REQUIRE(a.spectrum.scans.size() == b.spectrum.scans.size());
  for (size_t i = 0; i < a.spectrum.scans.size(); ++i) {
    CHECK(a.spectrum.scans[i].retention_index ==
          b.spectrum.scans[i].retention_index);
    CHECK(a.spectrum.scans[i].mz == b.spectrum.scans[i].mz);
  }
  CHECK(a.truth.solute_peaks == b.truth.solute_peaks);
  CHECK(a.truth.interference_peaks == b.truth.interference_peaks);

  const auto c = simulate_spectrum(label, model, 256, 100);
  CHECK(a.spectrum.tic != c.spectrum.tic);
}

TEST_CASE("quiet multi-solute signal is the normalized sum of solute profiles") {
  const int t_len = 300;
  const auto label = ConditionLabel::make("THF", {"DFP", "2-CEPS"});
  const auto sim = simulate_spectrum(label, quiet_model(), t_len, 5);

  std::vector<double> expected(t_len, 0.0);
  for (int si : {1, 3}) {  // DFP, 2-CEPS
    const auto prof = solute_profile(si, label.solvent_index(), t_len, 0.0);
    for (int t = 0; t < t_len; ++t) expected[t] += prof[t];
  }
  expected = normalize_ref(expected);
  CHECK(max_abs_diff(sim.spectrum.tic, expected) < 1e-12);
}

TEST_CASE("quiet ground truth lands on shifted template centers") {
  const int t_len = 512;
  for (int si = 0; si < kSoluteCount; ++si) {
    for (int vi = 0; vi < kSolventCount; ++vi) {
      ConditionLabel label;
      label.solvent[vi] = 1;
      label.solutes[si] = 1;
      const auto sim = simulate_spectrum(label, quiet_model(), t_len, 17);
      const auto& tpl = agent_templates()[si];
      const auto eff = solvent_effect(vi);
      REQUIRE(sim.truth.peaks.size() == tpl.center_frac.size());
      CHECK(sim.truth.solute_peaks == static_cast<int>(tpl.center_frac.size()));
      CHECK(sim.truth.interference_peaks == 0);
      for (size_t p = 0; p < tpl.center_frac.size(); ++p) {
        const int want = std::clamp(
            static_cast<int>(
                std::lround((tpl.center_frac[p] + eff.shift_frac) * t_len)),
            0, t_len - 1);
        CHECK(sim.truth.peaks[p].index == want);
        CHECK(sim.truth.peaks[p].height ==
              doctest::Approx(tpl.height[p] * eff.scale).epsilon(1e-12));
        CHECK(sim.truth.peaks[p].source == tpl.name);
      }
    }
  }
}

TEST_CASE("quiet scans copy the owning fragment template scaled by relative height") {
  const int t_len = 256;
  const auto label = ConditionLabel::make("EtOH", {"2-CEES"});
  const auto sim = simulate_spectrum(label, quiet_model(), t_len, 3);
  const auto& tpl = agent_templates()[2];  // 2-CEES
  REQUIRE(sim.spectrum.scans.size() == tpl.center_frac.size());
  const double max_h = *std::max_element(tpl.height.begin(), tpl.height.end());
  // Scans are sorted by retention index; recover which template peak each one
  // belongs to through the ground truth.
  for (const auto& scan : sim.spectrum.scans) {
    double rel = -1.0;
    for (const auto& gt : sim.truth.peaks) {
      if (gt.index == scan.retention_index) {
        rel = gt.height / (max_h * solvent_effect(label.solvent_index()).scale);
      }
    }
    REQUIRE(rel > 0.0);
    REQUIRE(scan.mz.size() == static_cast<size_t>(kMzBins));
    for (int b = 0; b < kMzBins; ++b) {
      CHECK(scan.mz[b] == doctest::Approx(tpl.fragments[b] * rel).epsilon(1e-12));
    }
  }
  for (size_t i = 1; i < sim.spectrum.scans.size(); ++i) {
    CHECK(sim.spectrum.scans[i - 1].retention_index <=
          sim.spectrum.scans[i].retention_index);
  }
}

TEST_CASE("time axis spans a 20 minute run") {
  const auto sim = simulate_spectrum(ConditionLabel::make("MC", {"DMMP"}),
                                     quiet_model(), 200, 1);
  REQUIRE(sim.spectrum.t_minutes.size() == 200);
  CHECK(sim.spectrum.t_minutes[0] == 0.0);
  CHECK(sim.spectrum.t_minutes[1] == doctest::Approx(20.0 / 200).epsilon(1e-15));
  CHECK(sim.spectrum.t_minutes[199] ==
        doctest::Approx(199 * 20.0 / 200).epsilon(1e-15));
}

TEST_CASE("interference adds extra labeled peaks within preset bounds") {
  const auto label = ConditionLabel::make("EtOH", {"2-CEES"}, "asphalt");
  const auto model = InterferenceModel::preset(Interference::Asphalt);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const auto sim = simulate_spectrum(label, model, 256, seed);
    CHECK(sim.truth.interference_peaks >= model.extra_peaks_min);
    CHECK(sim.truth.interference_peaks <= model.extra_peaks_max);
    int counted = 0;
    for (const auto& p : sim.truth.peaks) {
      if (p.source == "interference") ++counted;
    }
    CHECK(counted == sim.truth.interference_peaks);
    CHECK(sim.spectrum.scans.size() == sim.truth.peaks.size());
  }
}

TEST_CASE("noise moves the signal and more noise moves it further") {
  const auto label = ConditionLabel::make("MeOH", {"DFP"});
  const auto clean = simulate_spectrum(label, quiet_model(), 256, 0);
  int monotone = 0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    InterferenceModel lo = quiet_model();
    lo.noise_std = 0.01;
    InterferenceModel hi = quiet_model();
    hi.noise_std = 0.08;
    const auto a = simulate_spectrum(label, lo, 256, seed);
    const auto b = simulate_spectrum(label, hi, 256, seed);
    const double da = max_abs_diff(a.spectrum.tic, clean.spectrum.tic);
    const double db = max_abs_diff(b.spectrum.tic, clean.spectrum.tic);
    CHECK(da > 0.0);
    if (db > da) ++monotone;
  }
  CHECK(monotone >= 15);
}

TEST_CASE("retention jitter shifts every solute peak by the same offset") {
  const auto label = ConditionLabel::make("EtOH", {"2-CEES", "DMMP"});
  InterferenceModel m = quiet_model();
  m.retention_shift = 0.02;
  const int t_len = 1000;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const auto sim = simulate_spectrum(label, m, t_len, seed);
    const auto base = simulate_spectrum(label, quiet_model(), t_len, seed);
    REQUIRE(sim.truth.peaks.size() == base.truth.peaks.size());
    // All peaks move together: the pairwise offsets agree within rounding.
    std::set<int> offsets;
    for (size_t p = 0; p < sim.truth.peaks.size(); ++p) {
      offsets.insert(sim.truth.peaks[p].index - base.truth.peaks[p].index);
    }
    CHECK(*offsets.rbegin() - *offsets.begin() <= 1);
    CHECK(std::abs(*offsets.begin()) <= static_cast<int>(0.02 * t_len) + 1);
  }
}

TEST_CASE("ground truth serializes through JSON unchanged") {
  const auto sim = simulate_spectrum(
      ConditionLabel::make("THF", {"2-CEPS"}, "kerosene"),
      InterferenceModel::preset(Interference::Kerosene), 128, 12);
  const auto back = GroundTruth::from_json(sim.truth.to_json());
  CHECK(back.solute_peaks == sim.truth.solute_peaks);
  CHECK(back.interference_peaks == sim.truth.interference_peaks);
  REQUIRE(back.peaks.size() == sim.truth.peaks.size());
  for (size_t i = 0; i < back.peaks.size(); ++i) {
    CHECK(back.peaks[i].index == sim.truth.peaks[i].index);
    CHECK(back.peaks[i].height ==
          doctest::Approx(sim.truth.peaks[i].height).epsilon(1e-12));
    CHECK(back.peaks[i].source == sim.truth.peaks[i].source);
  }
}

TEST_CASE("simulate rejects a too-short axis") {
  CHECK_THROWS_AS(simulate_spectrum(ConditionLabel::make("EtOH", {"DMMP"}),
                                    quiet_model(), 63, 0),
                  ContractError);
}

TEST_CASE("preset models match their declared kind") {
  for (size_t i = 0; i < kInterferenceNames.size(); ++i) {
    const auto kind = static_cast<Interference>(i);
    const auto m = InterferenceModel::preset(kind);
    CHECK(m.kind == kind);
    CHECK(m.noise_std > 0.0);
    if (kind == Interference::None) {
      CHECK(m.extra_peaks_max == 0);
      CHECK(m.baseline_drift == 0.0);
      CHECK(m.retention_shift == 0.0);
    } else {
      CHECK(m.extra_peaks_max >= m.extra_peaks_min);
      CHECK(m.extra_peaks_max > 0);
    }
  }
}

TEST_CASE("default conditions enumerate the sixteen evaluation mixtures") {
  const auto& conds = default_conditions();
  REQUIRE(conds.size() == 16);
  CHECK(conds[0].name() == "4-nitrophenol + EtOH");
  CHECK(conds[3].name() == "4-nitrophenol + THF");
  CHECK(conds[8].name() == "2-CEES + EtOH");
  CHECK(conds[12].name() == "2-CEES + 2-CEPS + EtOH");
  CHECK(conds[15].name() == "DMMP + DFP + 2-CEES + 2-CEPS + MC");
  std::set<std::string> names;
  for (const auto& c : conds) {
    names.insert(c.name());
    CHECK(c.interference == Interference::None);
  }
  CHECK(names.size() == 16);
}

TEST_CASE("brick and acetone are withheld from the nitro and amine targets") {
  const auto risky = allowed_interference(
      ConditionLabel::make("EtOH", {"4-nitrophenol"}));
  CHECK(risky.size() == kInterferenceNames.size() - 2);
  for (auto k : risky) {
    CHECK(k != Interference::Brick);
    CHECK(k != Interference::Acetone);
  }
  const auto risky2 = allowed_interference(
      ConditionLabel::make("MC", {"ethylenediamine"}));
  CHECK(risky2.size() == kInterferenceNames.size() - 2);

  const auto all = allowed_interference(ConditionLabel::make("EtOH", {"2-CEES"}));
  CHECK(all.size() == kInterferenceNames.size());
  CHECK(all[0] == Interference::None);
}

TEST_CASE("dataset records are stable under a larger per-condition count") {
  const auto conds = std::vector<ConditionLabel>{
      ConditionLabel::make("EtOH", {"2-CEES"}),
      ConditionLabel::make("MeOH", {"DMMP"})};
  const auto small = make_dataset(2, conds, 128, 77);
  const auto big = make_dataset(4, conds, 128, 77);
  REQUIRE(small.size() == 4);
  REQUIRE(big.size() == 8);
  // Records are seeded per (condition, index), so the first two of each
  // condition coincide: big interleaves as c0 x4 then c1 x4.
  CHECK(small[0].spectrum.tic == big[0].spectrum.tic);
  CHECK(small[1].spectrum.tic == big[1].spectrum.tic);
  CHECK(small[2].spectrum.tic == big[4].spectrum.tic);
  CHECK(small[3].spectrum.tic == big[5].spectrum.tic);
}

TEST_CASE("dataset interference mixing cycles the allowed kinds from none") {
  const auto cond = ConditionLabel::make("EtOH", {"2-CEES"});
  const auto allowed = allowed_interference(cond);
  const auto data = make_dataset(static_cast<int>(allowed.size()) + 2, {cond},
                                 128, 5, true);
  for (size_t r = 0; r < data.size(); ++r) {
    CHECK(data[r].label.interference == allowed[r % allowed.size()]);
  }
}

TEST_CASE("dataset drops an incompatible interference back to none") {
  ConditionLabel cond = ConditionLabel::make("EtOH", {"4-nitrophenol"}, "brick");
  const auto data = make_dataset(2, {cond}, 128, 5, false);
  for (const auto& item : data) {
    CHECK(item.label.interference == Interference::None);
  }
}

TEST_CASE("dataset argument contracts") {
  const auto cond = ConditionLabel::make("EtOH", {"2-CEES"});
  CHECK_THROWS_AS(make_dataset(0, {cond}, 128, 1), ContractError);
  CHECK_THROWS_AS(make_dataset(1, {}, 128, 1), ContractError);
}

TEST_CASE("synthesized scans reuse the matching fragment template") {
  const int t_len = 512;
  const auto label = ConditionLabel::make("EtOH", {"2-CEES"});
  std::vector<double> tic(t_len, 0.0);
  const auto prof = solute_profile(2, label.solvent_index(), t_len, 0.0);
  for (int t = 0; t < t_len; ++t) tic[t] = prof[t];
  tic = normalize_ref(tic);

  const auto scans = synthesize_scans(tic, label, 9);
  const auto& tpl = agent_templates()[2];
  REQUIRE(scans.size() == tpl.center_frac.size());
  const auto eff = solvent_effect(label.solvent_index());
  for (const auto& scan : scans) {
    // Each detected peak sits within 2% of a template center, so it adopts
    // that template's fragments scaled by the detected height.
    double best = 1e9;
    for (double cf : tpl.center_frac) {
      best = std::min(best, std::fabs((cf + eff.shift_frac) * t_len -
                                      scan.retention_index));
    }
    CHECK(best < 0.02 * t_len);
    const double h = tic[scan.retention_index];
    REQUIRE(scan.mz.size() == static_cast<size_t>(kMzBins));
    for (int b = 0; b < kMzBins; ++b) {
      CHECK(scan.mz[b] == doctest::Approx(tpl.fragments[b] * h).epsilon(1e-9));
    }
  }
}

TEST_CASE("synthesized scans fall back to a generic pattern off template") {
  const int t_len = 512;
  // One sharp peak far from any 2-CEES center.
  std::vector<double> tic(t_len, 0.0);
  for (int t = 0; t < t_len; ++t) {
    const double d = t - 30.0;
    tic[t] = std::exp(-d * d / 18.0);
  }
  const auto label = ConditionLabel::make("EtOH", {"2-CEES"});
  const auto& tpl = agent_templates()[2];
  const auto eff = solvent_effect(label.solvent_index());
  for (double cf : tpl.center_frac) {
    REQUIRE(std::fabs((cf + eff.shift_frac) * t_len - 30.0) > 0.02 * t_len);
  }
  const auto scans = synthesize_scans(tic, label, 4);
  REQUIRE(scans.size() == 1);
  int nonzero = 0;
  for (double v : scans[0].mz) {
    if (v > 0.0) ++nonzero;
  }
  CHECK(nonzero >= 1);
  CHECK(nonzero <= 3);
}
