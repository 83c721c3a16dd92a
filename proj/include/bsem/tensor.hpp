#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsem {

// Dense row-major array of doubles. Rank is 1 or 2 everywhere in this
// codebase; the shape is kept generic so parameter entries can describe
// themselves.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != element_count(shape))
      throw std::invalid_argument("Tensor: data size does not match shape");
  }

  static std::size_t element_count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<std::size_t> s) {
    std::size_t n = element_count(s);
    return Tensor(std::move(s), std::vector<double>(n, 0.0));
  }

  std::size_t size() const { return data.size(); }

  // 2-D accessors; rows()/cols() assume shape {rows, cols}.
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  double* row_ptr(std::size_t r) { return data.data() + r * cols(); }
  const double* row_ptr(std::size_t r) const { return data.data() + r * cols(); }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

}  // namespace bsem
