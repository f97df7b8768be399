#pragma once

#include <functional>
#include <vector>

#include "tensor.hpp"

namespace peakgen {

struct GradCheckResult {
  double max_rel_err = 0.0;
  size_t coords_checked = 0;
};

// Central finite differences against the analytic gradients of a scalar loss.
// `loss(true)` must run forward+backward and accumulate gradients into the
// given parameters (which arrive zeroed); `loss(false)` is forward-only.
// Checks at most `max_coords` coordinates per parameter, deterministically
// sampled with `rng`.
GradCheckResult grad_check(const std::vector<Tensor*>& params,
                           const std::function<double(bool)>& loss, double eps,
                           size_t max_coords, Rng& rng);

}  // namespace peakgen
