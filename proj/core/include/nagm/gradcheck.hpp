#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nagm/params.hpp"

namespace nagm {

struct BackpropResult {
  double value = 0.0;
  std::map<std::string, Tensor> grads;
};

/// Deterministic scalar-valued computation with analytic gradients.
using LossFn = std::function<BackpropResult(const ParamStore&)>;

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
};

/// Central finite differences against analytic gradients. Every tensor is
/// checked on all coordinates when small, otherwise on a seeded sample of
/// at least `samples_per_tensor` coordinates. Relative error denominators
/// are floored at 1e-8.
GradCheckReport grad_check(const LossFn& f, const ParamStore& params,
                           double eps, std::size_t samples_per_tensor = 32,
                           std::uint64_t seed = 0);

}  // namespace nagm
