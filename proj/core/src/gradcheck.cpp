#include "nagm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace nagm {

GradCheckReport grad_check(const LossFn& f, const ParamStore& params,
                           double eps, std::size_t samples_per_tensor,
                           std::uint64_t seed) {
  if (eps < 1e-6 || eps > 1e-3) {
    throw ConfigError("grad_check: eps must be in [1e-6, 1e-3]");
  }
  BackpropResult base = f(params);
  if (!std::isfinite(base.value)) {
    throw DomainError("grad_check: computation returned a non-finite value");
  }

  std::mt19937_64 rng(seed);
  GradCheckReport report;
  for (const auto& [name, tensor] : params.params()) {
    std::vector<std::size_t> coords;
    if (tensor.size() <= samples_per_tensor) {
      coords.resize(tensor.size());
      for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    } else {
      for (std::size_t i = 0; i < samples_per_tensor; ++i)
        coords.push_back(uniform_index(rng, tensor.size()));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }

    const Tensor* analytic = nullptr;
    auto git = base.grads.find(name);
    if (git != base.grads.end()) analytic = &git->second;

    GradCheckEntry entry;
    entry.name = name;
    ParamStore probe = params;
    for (std::size_t c : coords) {
      double saved = probe.at(name).data[c];
      probe.at(name).data[c] = saved + eps;
      double up = f(probe).value;
      probe.at(name).data[c] = saved - eps;
      double down = f(probe).value;
      probe.at(name).data[c] = saved;
      double fd = (up - down) / (2.0 * eps);
      double a = analytic ? analytic->data[c] : 0.0;
      double denom = std::max({std::fabs(a), std::fabs(fd), 1e-8});
      entry.max_rel_err = std::max(entry.max_rel_err, std::fabs(a - fd) / denom);
      ++entry.checked;
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace nagm
