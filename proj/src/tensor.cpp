#include "stm/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "stm/error.hpp"
#include "stm/simd.hpp"

namespace stm {
namespace {

std::string shape_str(std::span<const std::size_t> shape) {
  std::string s = "(";
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k) s += ",";
    s += std::to_string(shape[k]);
  }
  return s + ")";
}

void check_mode(std::size_t mode, std::size_t order) {
  if (mode >= order)
    throw Error(ErrorCode::invalid_argument, "mode " + std::to_string(mode + 1) +
                                                 " out of range 1.." + std::to_string(order));
}

// Sizes of the modes before and after `mode`.
std::pair<std::size_t, std::size_t> split(const Shape& shape, std::size_t mode) {
  std::size_t left = 1, right = 1;
  for (std::size_t k = 0; k < mode; ++k) left *= shape[k];
  for (std::size_t k = mode + 1; k < shape.size(); ++k) right *= shape[k];
  return {left, right};
}

}  // namespace

std::size_t element_count(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_.empty()) throw Error(ErrorCode::invalid_argument, "tensor order must be >= 1");
  for (std::size_t k = 0; k < shape_.size(); ++k)
    if (shape_[k] == 0)
      throw Error(ErrorCode::invalid_argument,
                  "mode " + std::to_string(k + 1) + " has size 0 in shape " + shape_str(shape_));
  if (values_.size() != element_count(shape_))
    throw Error(ErrorCode::shape_mismatch,
                "shape " + shape_str(shape_) + " needs " + std::to_string(element_count(shape_)) +
                    " values, got " + std::to_string(values_.size()));
}

DenseTensor::DenseTensor(Shape shape)
    : DenseTensor(shape, std::vector<double>(element_count(shape), 0.0)) {}

std::size_t DenseTensor::linear_index(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size())
    throw Error(ErrorCode::shape_mismatch, "index has wrong number of modes");
  std::size_t lin = 0, stride = 1;
  for (std::size_t k = 0; k < shape_.size(); ++k) {
    if (index[k] >= shape_[k])
      throw Error(ErrorCode::invalid_argument,
                  "index " + std::to_string(index[k] + 1) + " out of range in mode " +
                      std::to_string(k + 1));
    lin += index[k] * stride;
    stride *= shape_[k];
  }
  return lin;
}

double DenseTensor::operator()(std::span<const std::size_t> index) const {
  return values_[linear_index(index)];
}

Matrix matricize(const DenseTensor& t, std::size_t mode) {
  check_mode(mode, t.order());
  const auto [left, right] = split(t.shape(), mode);
  const std::size_t n = t.dim(mode);
  Matrix out(n, left * right);
  const double* x = t.data();
  for (std::size_t r = 0; r < right; ++r)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < left; ++l) out(i, l + left * r) = x[l + left * (i + n * r)];
  return out;
}

DenseTensor fold(const Matrix& mat, std::size_t mode, const Shape& shape) {
  check_mode(mode, shape.size());
  const auto [left, right] = split(shape, mode);
  const std::size_t n = shape[mode];
  if (static_cast<std::size_t>(mat.rows()) != n ||
      static_cast<std::size_t>(mat.cols()) != left * right)
    throw Error(ErrorCode::shape_mismatch,
                "cannot fold a " + std::to_string(mat.rows()) + "x" + std::to_string(mat.cols()) +
                    " matrix along mode " + std::to_string(mode + 1) + " into shape " +
                    shape_str(shape));
  std::vector<double> values(left * n * right);
  for (std::size_t r = 0; r < right; ++r)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < left; ++l) values[l + left * (i + n * r)] = mat(i, l + left * r);
  return DenseTensor(shape, std::move(values));
}

DenseTensor mode_product(const DenseTensor& t, const Matrix& a, std::size_t mode) {
  check_mode(mode, t.order());
  const std::size_t n = t.dim(mode);
  if (static_cast<std::size_t>(a.cols()) != n)
    throw Error(ErrorCode::shape_mismatch,
                "mode product along mode " + std::to_string(mode + 1) + ": matrix has " +
                    std::to_string(a.cols()) + " columns, tensor mode size is " +
                    std::to_string(n));
  const auto [left, right] = split(t.shape(), mode);
  const std::size_t m = static_cast<std::size_t>(a.rows());
  Shape shape = t.shape();
  shape[mode] = m;
  std::vector<double> values(left * m * right);
  using ConstMap = Eigen::Map<const Matrix>;
  using Map = Eigen::Map<Matrix>;
  // Slab r is a (left x n) column-major block; the product is slab * a^T.
  for (std::size_t r = 0; r < right; ++r) {
    ConstMap in(t.data() + left * n * r, static_cast<Eigen::Index>(left),
                static_cast<Eigen::Index>(n));
    Map out(values.data() + left * m * r, static_cast<Eigen::Index>(left),
            static_cast<Eigen::Index>(m));
    out.noalias() = in * a.transpose();
  }
  return DenseTensor(std::move(shape), std::move(values));
}

double inner(const DenseTensor& t, const DenseTensor& s) {
  if (t.shape() != s.shape())
    throw Error(ErrorCode::shape_mismatch,
                "inner product of shapes " + shape_str(t.shape()) + " and " + shape_str(s.shape()));
  return simd::dot(t.values(), s.values());
}

double frobenius_norm(const DenseTensor& t) { return std::sqrt(simd::sum_squares(t.values())); }

}  // namespace stm
