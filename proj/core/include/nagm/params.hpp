#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "nagm/tensor.hpp"

namespace nagm {

/// Deterministic helpers on top of mt19937_64; avoids the
/// implementation-defined std distributions.
inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  double u = (rng() >> 11) * 0x1.0p-53;  // [0,1)
  return lo + u * (hi - lo);
}

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  // Rejection sampling keeps the draw unbiased.
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

/// Named trainable tensors plus AdaGrad squared-gradient accumulators.
class ParamStore {
 public:
  void add(const std::string& name, Tensor t);
  bool has(const std::string& name) const { return params_.count(name) > 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  const Tensor& accumulator(const std::string& name) const;

  const std::map<std::string, Tensor>& params() const { return params_; }
  std::map<std::string, Tensor>& mutable_params() { return params_; }

  /// accumulator += g^2; param -= lr * g / (sqrt(accumulator) + eps).
  /// Names missing from `grads` are left untouched.
  void adagrad_step(const std::map<std::string, Tensor>& grads, double lr,
                    double eps);

 private:
  std::map<std::string, Tensor> params_;
  std::map<std::string, Tensor> accum_;
};

/// Glorot-uniform matrix: U(-sqrt(6/(fan_in+fan_out)), +...).
Tensor glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

}  // namespace nagm
