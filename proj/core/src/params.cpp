#include "nagm/params.hpp"

#include <cmath>

namespace nagm {

void ParamStore::add(const std::string& name, Tensor t) {
  if (params_.count(name)) {
    throw ConfigError("parameter already registered: " + name);
  }
  accum_.emplace(name, Tensor::zeros(t.shape));
  params_.emplace(name, std::move(t));
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParamStore::accumulator(const std::string& name) const {
  auto it = accum_.find(name);
  if (it == accum_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

void ParamStore::adagrad_step(const std::map<std::string, Tensor>& grads,
                              double lr, double eps) {
  if (lr <= 0.0 || eps <= 0.0) {
    throw ConfigError("adagrad_step: lr and eps must be positive");
  }
  for (auto& [name, param] : params_) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    check_same_shape(param, g, "adagrad_step");
    if (!g.all_finite()) {
      throw TrainingError("adagrad_step: non-finite gradient for " + name);
    }
    Tensor& acc = accum_.at(name);
    for (std::size_t i = 0; i < param.size(); ++i) {
      double gi = g.data[i];
      acc.data[i] += gi * gi;
      param.data[i] -= lr * gi / (std::sqrt(acc.data[i]) + eps);
    }
  }
}

Tensor glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t = Tensor::zeros({rows, cols});
  for (double& v : t.data) v = uniform_real(rng, -limit, limit);
  return t;
}

}  // namespace nagm
