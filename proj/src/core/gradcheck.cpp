#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace peakgen {

GradCheckResult grad_check(const std::vector<Tensor*>& params,
                           const std::function<double(bool)>& loss, double eps,
                           size_t max_coords, Rng& rng) {
  for (Tensor* p : params) p->zero_grad();
  loss(true);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (Tensor* p : params) analytic.push_back(p->grad);

  GradCheckResult res;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    std::vector<size_t> coords(p.size());
    for (size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > max_coords) {
      // deterministic Fisher-Yates prefix
      for (size_t i = 0; i < max_coords; ++i) {
        const size_t j = i + rng.below(coords.size() - i);
        std::swap(coords[i], coords[j]);
      }
      coords.resize(max_coords);
    }
    for (size_t c : coords) {
      const double saved = p.data[c];
      p.data[c] = saved + eps;
      const double lp = loss(false);
      p.data[c] = saved - eps;
      const double lm = loss(false);
      p.data[c] = saved;
      const double fd = (lp - lm) / (2.0 * eps);
      const double a = analytic[pi][c];
      const double denom = std::max({std::fabs(a), std::fabs(fd), 1e-4});
      res.max_rel_err = std::max(res.max_rel_err, std::fabs(a - fd) / denom);
      ++res.coords_checked;
    }
  }
  return res;
}

}  // namespace peakgen
