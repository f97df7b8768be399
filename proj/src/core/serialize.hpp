#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spectrum.hpp"

namespace peakgen {

// Spectrum JSON: {"tic": [...], "scans": [{"t": int, "mz": [...]}],
// "condition": {"solvent": str, "solutes": [str], "interference": str}}
// with optional "t_minutes". Condition is optional on load (generated
// intermediates may lack it).
std::string spectrum_to_json(const Spectrum& s, const ConditionLabel* cond);
Spectrum spectrum_from_json(const std::string& text, ConditionLabel* cond_out);

void save_spectrum_json(const std::string& path, const Spectrum& s,
                        const ConditionLabel* cond);
Spectrum load_spectrum_json(const std::string& path, ConditionLabel* cond_out);

// Two-column CSV: index,intensity with a header row.
std::string tic_to_csv(const Spectrum& s);
void save_tic_csv(const std::string& path, const Spectrum& s);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Shortest-round-trip decimal rendering used by every CSV writer so repeated
// runs are byte-identical.
std::string format_double(double v);

}  // namespace peakgen
