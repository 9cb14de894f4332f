#pragma once

#include <random>

#include "nagm/tensor.hpp"

namespace nagm::test {

inline Tensor random_tensor(std::vector<std::size_t> shape,
                            std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data) {
    v = lo + (rng() >> 11) * 0x1.0p-53 * (hi - lo);
  }
  return t;
}

}  // namespace nagm::test
