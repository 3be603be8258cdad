#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "srbrcnn/common.hpp"
#include "srbrcnn/rng.hpp"

namespace srbrcnn {

// Dense row-major tensor of doubles. Rank 1 and 2 are all the model needs.
struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {}

  static Tensor zeros(std::vector<size_t> s) {
    size_t n = 1;
    for (size_t d : s) n *= d;
    return Tensor(std::move(s), std::vector<double>(n, 0.0));
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor uniform(std::vector<size_t> s, std::mt19937_64& rng, double lo, double hi) {
    Tensor t = zeros(std::move(s));
    for (double& v : t.data) v = uniform_in(rng, lo, hi);
    return t;
  }

  size_t size() const { return data.size(); }
  size_t rank() const { return shape.size(); }
  size_t rows() const { return shape.at(0); }
  size_t cols() const { return shape.at(1); }

  double& at(size_t i) { return data[i]; }
  double at(size_t i) const { return data[i]; }
  double& at(size_t r, size_t c) { return data[r * cols() + c]; }
  double at(size_t r, size_t c) const { return data[r * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  void add_scaled(const Tensor& o, double a) {
    for (size_t i = 0; i < data.size(); ++i) data[i] += a * o.data[i];
  }

  double sum_squares() const {
    double s = 0.0;
    for (double v : data) s += v * v;
    return s;
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
    return s + ")";
  }
};

// Stabilized softmax over a rank-1 tensor.
inline Tensor softmax(const Tensor& logits) {
  Tensor out = Tensor::zeros(logits.shape);
  double mx = *std::max_element(logits.data.begin(), logits.data.end());
  double z = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out.data[i] = std::exp(logits.data[i] - mx);
    z += out.data[i];
  }
  for (double& v : out.data) v /= z;
  return out;
}

inline size_t argmax(const Tensor& t) {
  return static_cast<size_t>(std::max_element(t.data.begin(), t.data.end()) - t.data.begin());
}

}  // namespace srbrcnn
