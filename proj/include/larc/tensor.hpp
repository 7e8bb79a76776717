#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace larc {

/// Marker stored in masked relation slots (repeated object indices). Any
/// arithmetic that touches one turns into NaN, which the tape rejects.
inline constexpr double kMasked = std::numeric_limits<double>::quiet_NaN();

/// Dense row-major tensor of rank 0 to 3.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, double fill = 0.0)
      : shape(std::move(s)), data(element_count(shape), fill) {}
  Tensor(std::vector<std::size_t> s, std::vector<double> values)
      : shape(std::move(s)), data(std::move(values)) {}

  static Tensor scalar(double v) { return Tensor({}, std::vector<double>{v}); }
  static Tensor vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
  }

  static std::size_t element_count(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           [](std::size_t a, std::size_t b) { return a * b; });
  }

  std::size_t rank() const { return shape.size(); }
  std::size_t size() const { return data.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * shape[1] + j) * shape[2] + k];
  }

  std::span<double> span() { return data; }
  std::span<const double> span() const { return data; }

  bool operator==(const Tensor&) const = default;
};

/// Number of valid (all-distinct index) slots in an arity-k relation over n objects.
inline std::size_t valid_relation_slots(std::size_t n, int arity) {
  std::size_t count = 1;
  for (int a = 0; a < arity; ++a) {
    if (n < static_cast<std::size_t>(a) + 1) return 0;
    count *= n - static_cast<std::size_t>(a);
  }
  return count;
}

/// Builds an n×n (arity 2) or n×n×n (arity 3) relation tensor with every
/// repeated-index slot set to kMasked and the rest set to `fill`.
Tensor masked_relation(std::size_t n, int arity, double fill = 0.0);

/// True when a relation slot has repeated indices.
inline bool is_masked_slot(std::size_t i, std::size_t j) { return i == j; }
inline bool is_masked_slot(std::size_t i, std::size_t j, std::size_t k) {
  return i == j || i == k || j == k;
}

}  // namespace larc
