#pragma once

#include <string>

#include "gan.hpp"

namespace peakgen {

// Binary parameter bundle: magic + format version, then (name, shape, raw
// doubles) per tensor in the order given. Gradients are not persisted.
void save_checkpoint(const std::string& path, const NamedParams& params);

// Loads into an existing parameter list; every name must be present with a
// matching shape, and the file may not contain extras.
void load_checkpoint(const std::string& path, const NamedParams& params);

}  // namespace peakgen
