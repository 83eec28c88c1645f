#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/QR>

#include "stm/decomp.hpp"
#include "stm/tensor.hpp"

namespace stm::testing {

inline DenseTensor random_tensor(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(element_count(shape));
  for (double& x : v) x = normal(rng);
  return DenseTensor(shape, std::move(v));
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

inline Matrix random_orthonormal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rows, cols, rng));
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

// Tensor of exact multilinear rank `ranks`: random core times random orthonormal factors.
inline DenseTensor low_rank_tensor(const Shape& shape, const Shape& ranks, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  DenseTensor t = random_tensor(ranks, seed ^ 0xabcdefULL);
  for (std::size_t m = 0; m < shape.size(); ++m)
    t = mode_product(t, random_orthonormal(static_cast<Eigen::Index>(shape[m]),
                                           static_cast<Eigen::Index>(ranks[m]), rng),
                     m);
  return t;
}

inline double relative_error(const DenseTensor& a, const DenseTensor& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a.data()[i] - b.data()[i]) * (a.data()[i] - b.data()[i]);
    den += b.data()[i] * b.data()[i];
  }
  return std::sqrt(num / den);
}

// Independent multi-index walk: increments index like an odometer, mode 1 fastest.
inline bool next_index(std::vector<std::size_t>& idx, const Shape& shape) {
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (++idx[k] < shape[k]) return true;
    idx[k] = 0;
  }
  return false;
}

}  // namespace stm::testing
