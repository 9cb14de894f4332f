#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "nagm/errors.hpp"

namespace nagm {

/// Dense row-major tensor of doubles. Rank 1 (vector) and rank 2 (matrix)
/// cover everything the model needs.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> d);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor vec(std::initializer_list<double> values);
  static Tensor scalar(double v);
  // Row-major values.
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);
  static Tensor identity(std::size_t n);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;

  std::string shape_str() const;
};

/// Throws DimensionError naming both shapes unless they match.
void check_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace nagm
