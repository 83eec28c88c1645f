#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace stm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Shape = std::vector<std::size_t>;

inline constexpr std::size_t kMaxOrder = 8;

/// Dense order-M real tensor. Entries are stored column-major by ascending
/// mode: entry (i_1,...,i_M) (0-based) lives at sum_k i_k * prod_{m<k} I_m.
/// Immutable after construction.
class DenseTensor {
 public:
  DenseTensor() = default;
  DenseTensor(Shape shape, std::vector<double> values);
  explicit DenseTensor(Shape shape);  // zero-filled

  const Shape& shape() const noexcept { return shape_; }
  std::size_t order() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t mode) const { return shape_.at(mode); }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  const double* data() const noexcept { return values_.data(); }

  double operator()(std::span<const std::size_t> index) const;
  std::size_t linear_index(std::span<const std::size_t> index) const;

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

std::size_t element_count(std::span<const std::size_t> shape);

/// m-mode unfolding: rows index mode m, columns run over the remaining modes
/// in ascending order (multi-index with mode m removed).
Matrix matricize(const DenseTensor& t, std::size_t mode);

/// Inverse of matricize.
DenseTensor fold(const Matrix& mat, std::size_t mode, const Shape& shape);

/// t x_m a, i.e. matricize(result, m) == a * matricize(t, m).
DenseTensor mode_product(const DenseTensor& t, const Matrix& a, std::size_t mode);

double inner(const DenseTensor& t, const DenseTensor& s);
double frobenius_norm(const DenseTensor& t);

}  // namespace stm
