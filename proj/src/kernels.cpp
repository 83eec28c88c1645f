#include "stm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stm/error.hpp"
#include "stm/parallel.hpp"
#include "stm/simd.hpp"

namespace stm {
namespace {

std::span<const double> col(const Matrix& m, Eigen::Index j) {
  return {m.data() + j * m.rows(), static_cast<std::size_t>(m.rows())};
}

std::span<const double> flat(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

void check_g(double g) {
  if (!(g > 0.0) || !std::isfinite(g))
    throw Error(ErrorCode::invalid_argument, "kernel length scale g must be positive");
}

void check_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) throw Error(ErrorCode::shape_mismatch, std::string(what) + ": mode sizes differ");
}

// Lexicographic comparison over a sequence of value blocks. Kernels evaluate
// with the smaller argument first so that K(x, y) and K(y, x) run the exact
// same floating-point operations.
int compare_blocks(std::span<const std::span<const double>> a,
                   std::span<const std::span<const double>> b) {
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
    const std::size_t n = std::min(a[k].size(), b[k].size());
    for (std::size_t i = 0; i < n; ++i)
      if (a[k][i] != b[k][i]) return a[k][i] < b[k][i] ? -1 : 1;
    if (a[k].size() != b[k].size()) return a[k].size() < b[k].size() ? -1 : 1;
  }
  return a.size() == b.size() ? 0 : (a.size() < b.size() ? -1 : 1);
}

std::vector<std::span<const double>> blocks(const std::vector<Matrix>& ms) {
  std::vector<std::span<const double>> out;
  for (const auto& m : ms) out.push_back(flat(m));
  return out;
}

bool reversed(const std::vector<Matrix>& x, const std::vector<Matrix>& y) {
  return compare_blocks(blocks(y), blocks(x)) < 0;
}

double exp_of_distance(double d2, double g) { return std::exp(-std::max(d2, 0.0) / (2.0 * g * g)); }

// <x, y> for Tucker tensors: <G_x, G_y x_1 W_1 ... x_M W_M>, W_m = Ux^T Uy.
double tucker_inner(const TuckerTensor& x, const TuckerTensor& y) {
  DenseTensor t = y.core;
  for (std::size_t m = 0; m < x.order(); ++m)
    t = mode_product(t, x.factors[m].transpose() * y.factors[m], m);
  return inner(x.core, t);
}

double kruskal_inner(const KruskalTensor& x, const KruskalTensor& y) {
  const Vector wx = x.weights.size() ? x.weights : Vector::Ones(static_cast<Eigen::Index>(x.rank()));
  const Vector wy = y.weights.size() ? y.weights : Vector::Ones(static_cast<Eigen::Index>(y.rank()));
  Matrix h = wx * wy.transpose();
  for (std::size_t m = 0; m < x.order(); ++m)
    h.array() *= (x.factors[m].transpose() * y.factors[m]).array();
  return h.sum();
}

double tt_inner(const TTTensor& x, const TTTensor& y) {
  Matrix phi = Matrix::Ones(1, 1);
  for (std::size_t k = 0; k < x.order(); ++k) {
    const DenseTensor& cx = x.cores[k];
    const DenseTensor& cy = y.cores[k];
    const auto rx0 = static_cast<Eigen::Index>(cx.dim(0)), rx1 = static_cast<Eigen::Index>(cx.dim(2));
    const auto ry0 = static_cast<Eigen::Index>(cy.dim(0)), ry1 = static_cast<Eigen::Index>(cy.dim(2));
    const auto n = static_cast<Eigen::Index>(cx.dim(1));
    Matrix next = Matrix::Zero(rx1, ry1);
    for (Eigen::Index i = 0; i < n; ++i) {
      // Slice (:, i, :) of a (r0, n, r1) column-major core.
      Eigen::Map<const Matrix, 0, Eigen::OuterStride<>> sx(cx.data() + i * rx0, rx0, rx1,
                                                          Eigen::OuterStride<>(rx0 * n));
      Eigen::Map<const Matrix, 0, Eigen::OuterStride<>> sy(cy.data() + i * ry0, ry0, ry1,
                                                          Eigen::OuterStride<>(ry0 * n));
      next.noalias() += sx.transpose() * phi * sy;
    }
    phi = std::move(next);
  }
  return phi(0, 0);
}

template <typename T, typename Inner>
double gaussian_from_inner(const T& x, const T& y, double g, Inner inner_fn) {
  const double nx = inner_fn(x, x);
  const double ny = inner_fn(y, y);
  return exp_of_distance((nx + ny) - 2.0 * inner_fn(x, y), g);
}

std::vector<std::span<const double>> tt_blocks(const TTTensor& t) {
  std::vector<std::span<const double>> out;
  for (const auto& c : t.cores) out.push_back(c.values());
  return out;
}

}  // namespace

std::string_view to_string(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::dusk: return "dusk";
    case KernelKind::subspace: return "subspace";
    case KernelKind::wsek: return "wsek";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
  for (KernelKind k : {KernelKind::gaussian, KernelKind::dusk, KernelKind::subspace, KernelKind::wsek})
    if (name == to_string(k)) return k;
  throw Error(ErrorCode::invalid_argument, "unknown kernel '" + std::string(name) +
                                               "' (expected gaussian, dusk, subspace or wsek)");
}

Shape sample_shape(const Sample& s) {
  return std::visit([](const auto& v) { return Shape(v.shape()); }, s);
}

double scalar_kernel(std::span<const double> a, std::span<const double> b, double g) {
  check_g(g);
  if (a.size() != b.size())
    throw Error(ErrorCode::shape_mismatch, "scalar kernel on vectors of different lengths");
  return exp_of_distance(simd::squared_distance(a, b), g);
}

double gaussian_kernel(const DenseTensor& x, const DenseTensor& y, double g) {
  check_g(g);
  check_same_shape(x.shape(), y.shape(), "gaussian kernel");
  return exp_of_distance(simd::squared_distance(x.values(), y.values()), g);
}

double gaussian_kernel(const TuckerTensor& x, const TuckerTensor& y, double g) {
  check_g(g);
  check_same_shape(x.shape(), y.shape(), "gaussian kernel");
  if (&x == &y) return 1.0;
  if (reversed(x.factors, y.factors)) return gaussian_from_inner(y, x, g, tucker_inner);
  return gaussian_from_inner(x, y, g, tucker_inner);
}

double gaussian_kernel(const KruskalTensor& x, const KruskalTensor& y, double g) {
  check_g(g);
  check_same_shape(x.shape(), y.shape(), "gaussian kernel");
  if (&x == &y) return 1.0;
  if (reversed(x.factors, y.factors)) return gaussian_from_inner(y, x, g, kruskal_inner);
  return gaussian_from_inner(x, y, g, kruskal_inner);
}

double gaussian_kernel(const TTTensor& x, const TTTensor& y, double g) {
  check_g(g);
  check_same_shape(x.shape(), y.shape(), "gaussian kernel");
  if (&x == &y) return 1.0;
  if (compare_blocks(tt_blocks(y), tt_blocks(x)) < 0) return gaussian_from_inner(y, x, g, tt_inner);
  return gaussian_from_inner(x, y, g, tt_inner);
}

double dusk_kernel(const KruskalTensor& x, const KruskalTensor& y, double g) {
  check_g(g);
  check_same_shape(x.shape(), y.shape(), "DuSK kernel");
  // CP columns are only defined up to per-term scaling and sign; compare the
  // equilibrated forms.
  const KruskalTensor ex = equilibrate(x), ey = equilibrate(y);
  const KruskalTensor& a = reversed(ex.factors, ey.factors) ? ey : ex;
  const KruskalTensor& b = &a == &ex ? ey : ex;
  const auto ra = static_cast<Eigen::Index>(a.rank());
  const auto rb = static_cast<Eigen::Index>(b.rank());
  Matrix d2 = Matrix::Zero(ra, rb);
  for (std::size_t m = 0; m < a.order(); ++m)
    for (Eigen::Index j = 0; j < rb; ++j)
      for (Eigen::Index i = 0; i < ra; ++i)
        d2(i, j) += simd::squared_distance(col(a.factors[m], i), col(b.factors[m], j));
  const double scale = 1.0 / (2.0 * g * g);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < rb; ++j)
    for (Eigen::Index i = 0; i < ra; ++i) sum += std::exp(-d2(i, j) * scale);
  return sum;
}

double subspace_kernel(const TuckerTensor& x, const TuckerTensor& y, double g) {
  check_g(g);
  check_same_shape(x.shape(), y.shape(), "subspace kernel");
  if (&x == &y) return 1.0;
  const TuckerTensor& a = reversed(x.bases, y.bases) ? y : x;
  const TuckerTensor& b = &a == &x ? y : x;
  double exponent = 0.0;
  for (std::size_t m = 0; m < a.order(); ++m) {
    const Matrix overlap = a.bases[m].transpose() * b.bases[m];
    const double chordal2 = static_cast<double>(a.bases[m].cols() + b.bases[m].cols()) -
                            2.0 * simd::sum_squares(flat(overlap));
    exponent += std::max(chordal2, 0.0);
  }
  return std::exp(-exponent / (2.0 * g * g));
}

double wsek_kernel(const TuckerTensor& x, const TuckerTensor& y, double g) {
  check_g(g);
  check_same_shape(x.shape(), y.shape(), "WSEK kernel");
  if (x.p != y.p)
    throw Error(ErrorCode::invalid_argument, "WSEK inputs carry different weighting powers p");
  const TuckerTensor& a = reversed(x.factors, y.factors) ? y : x;
  const TuckerTensor& b = &a == &x ? y : x;
  const double scale = 1.0 / (2.0 * g * g);
  double value = 1.0;
  for (std::size_t m = 0; m < a.order(); ++m) {
    const Matrix& fa = a.factors[m];
    const Matrix& fb = b.factors[m];
    double sum = 0.0;
    for (Eigen::Index j = 0; j < fb.cols(); ++j)
      for (Eigen::Index i = 0; i < fa.cols(); ++i)
        sum += std::exp(-simd::squared_distance(col(fa, i), col(fb, j)) * scale);
    value *= sum;
  }
  return value;
}

double evaluate_kernel(KernelKind kind, double g, const Sample& x, const Sample& y) {
  auto fail = [&]() -> double {
    throw Error(ErrorCode::invalid_argument,
                "kernel '" + std::string(to_string(kind)) + "' does not accept this sample format");
  };
  if (x.index() != y.index())
    throw Error(ErrorCode::invalid_argument, "kernel arguments have different formats");
  switch (kind) {
    case KernelKind::gaussian:
      return std::visit(
          [&](const auto& a) -> double {
            using T = std::decay_t<decltype(a)>;
            return gaussian_kernel(a, std::get<T>(y), g);
          },
          x);
    case KernelKind::dusk:
      if (const auto* a = std::get_if<KruskalTensor>(&x))
        return dusk_kernel(*a, std::get<KruskalTensor>(y), g);
      if (const auto* a = std::get_if<TuckerTensor>(&x))
        return dusk_kernel(tucker_to_cp(*a), tucker_to_cp(std::get<TuckerTensor>(y)), g);
      if (const auto* a = std::get_if<TTTensor>(&x))
        return dusk_kernel(tt_to_cp(*a), tt_to_cp(std::get<TTTensor>(y)), g);
      return fail();
    case KernelKind::subspace:
      if (const auto* a = std::get_if<TuckerTensor>(&x))
        return subspace_kernel(*a, std::get<TuckerTensor>(y), g);
      return fail();
    case KernelKind::wsek:
      if (const auto* a = std::get_if<TuckerTensor>(&x))
        return wsek_kernel(*a, std::get<TuckerTensor>(y), g);
      return fail();
  }
  return fail();
}

GramMatrix gram_matrix(std::span<const Sample> samples, KernelKind kind, double g,
                       std::size_t threads) {
  check_g(g);
  const std::size_t n = samples.size();
  if (n > 0) {
    const Shape shape = sample_shape(samples[0]);
    for (std::size_t i = 1; i < n; ++i)
      if (samples[i].index() != samples[0].index() || sample_shape(samples[i]) != shape)
        throw Error(ErrorCode::invalid_argument,
                    "Gram matrix needs samples of one format and shape; sample " +
                        std::to_string(i + 1) + " differs");
  }
  GramMatrix out{Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))};
  const bool unit_diagonal = kind == KernelKind::gaussian || kind == KernelKind::subspace;
  // Row-major upper-triangle enumeration: task t covers row i.
  parallel_for(n, threads, [&](std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = i; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      out.values(ii, jj) = (i == j && unit_diagonal) ? 1.0
                                                     : evaluate_kernel(kind, g, samples[i], samples[j]);
    }
  });
  for (Eigen::Index i = 0; i < out.values.rows(); ++i)
    for (Eigen::Index j = i + 1; j < out.values.cols(); ++j) out.values(j, i) = out.values(i, j);
  return out;
}

GramMatrix gram_matrix(std::span<const Sample> samples, const KernelSpec& spec,
                       std::size_t threads) {
  return gram_matrix(samples, spec.kind, spec.g, threads);
}

Matrix cross_kernel(std::span<const Sample> rows, std::span<const Sample> cols, KernelKind kind,
                    double g, std::size_t threads) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          evaluate_kernel(kind, g, rows[i], cols[j]);
  });
  return out;
}

}  // namespace stm
