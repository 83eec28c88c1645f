#include "stm/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "stm/error.hpp"

namespace stm {
namespace {

std::string num(std::size_t v) { return std::to_string(v); }

void check_ranks(const Shape& shape, std::span<const std::size_t> ranks) {
  if (ranks.size() != shape.size())
    throw Error(ErrorCode::rank_error, "expected " + num(shape.size()) + " ranks, got " +
                                           num(ranks.size()));
  for (std::size_t m = 0; m < ranks.size(); ++m)
    if (ranks[m] < 1 || ranks[m] > shape[m])
      throw Error(ErrorCode::rank_error, "rank " + num(ranks[m]) + " for mode " + num(m + 1) +
                                             " must lie in 1.." + num(shape[m]));
}

struct LeftSvd {
  Matrix u;      // rows x rank
  Vector sigma;  // length rank, zero-padded
};

// Leading `rank` left singular vectors. Falls back to a full U when more
// vectors are requested than the thin SVD provides.
LeftSvd leading_left_svd(const Matrix& y, std::size_t rank) {
  const auto r = static_cast<Eigen::Index>(rank);
  const Eigen::Index thin = std::min(y.rows(), y.cols());
  LeftSvd out;
  out.sigma = Vector::Zero(r);
  if (r <= thin) {
    Eigen::BDCSVD<Matrix> svd(y, Eigen::ComputeThinU);
    out.u = svd.matrixU().leftCols(r);
    out.sigma.head(r) = svd.singularValues().head(r);
  } else {
    Eigen::JacobiSVD<Matrix> svd(y, Eigen::ComputeFullU);
    out.u = svd.matrixU().leftCols(r);
    out.sigma.head(thin) = svd.singularValues().head(thin);
  }
  return out;
}

// Sequentially truncated HOSVD of `g`. When `lift` is given, the bases live
// in lift[m]'s column space: the full-size basis is lift[m] * (small basis).
TuckerTensor st_hosvd(DenseTensor g, const std::vector<Matrix>* lift,
                      std::span<const std::size_t> ranks, double p) {
  const std::size_t order = g.order();
  TuckerTensor out;
  out.p = p;
  out.bases.resize(order);
  out.sigmas.resize(order);
  out.factors.resize(order);

  for (std::size_t m = 0; m < order; ++m) {
    LeftSvd svd = leading_left_svd(matricize(g, m), ranks[m]);
    Matrix basis = lift ? Matrix((*lift)[m] * svd.u) : svd.u;
    const Vector signs = fix_column_signs(basis);
    svd.u *= signs.asDiagonal();
    g = mode_product(g, svd.u.transpose(), m);
    out.bases[m] = std::move(basis);
    out.sigmas[m] = std::move(svd.sigma);
  }

  // Weighted factors and the inversely scaled core.
  for (std::size_t m = 0; m < order; ++m) {
    const Vector& s = out.sigmas[m];
    const double floor = kSigmaFloor * s(0);
    Vector weight(s.size()), inverse(s.size());
    for (Eigen::Index r = 0; r < s.size(); ++r) {
      const bool guarded = !(s(r) >= floor) || s(r) <= 0.0;
      weight(r) = guarded ? 1.0 : std::pow(s(r), p);
      inverse(r) = guarded ? 0.0 : 1.0 / weight(r);
    }
    out.factors[m] = out.bases[m] * weight.asDiagonal();
    g = mode_product(g, Matrix(inverse.asDiagonal()), m);
  }
  out.core = std::move(g);
  return out;
}

}  // namespace

Shape TuckerTensor::shape() const {
  Shape s;
  for (const auto& f : factors) s.push_back(static_cast<std::size_t>(f.rows()));
  return s;
}

Shape TuckerTensor::ranks() const {
  Shape s;
  for (const auto& f : factors) s.push_back(static_cast<std::size_t>(f.cols()));
  return s;
}

Shape KruskalTensor::shape() const {
  Shape s;
  for (const auto& f : factors) s.push_back(static_cast<std::size_t>(f.rows()));
  return s;
}

Shape TTTensor::shape() const {
  Shape s;
  for (const auto& c : cores) s.push_back(c.dim(1));
  return s;
}

Shape TTTensor::ranks() const {
  Shape s;
  for (std::size_t m = 0; m + 1 < cores.size(); ++m) s.push_back(cores[m].dim(2));
  return s;
}

Vector fix_column_signs(Matrix& u) {
  Vector signs = Vector::Ones(u.cols());
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const double a = std::abs(u(i, c));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (u.rows() > 0 && u(best, c) < 0.0) {
      u.col(c) = -u.col(c);
      signs(c) = -1.0;
    }
  }
  return signs;
}

TuckerTensor weighted_hosvd(const DenseTensor& t, std::span<const std::size_t> ranks, double p) {
  check_ranks(t.shape(), ranks);
  if (frobenius_norm(t) == 0.0)
    throw Error(ErrorCode::zero_tensor, "weighted HOSVD of an all-zero tensor");
  return st_hosvd(t, nullptr, ranks, p);
}

TuckerTensor weighted_hosvd(const TuckerTensor& t, std::span<const std::size_t> ranks,
                            double p) {
  const Shape shape = t.shape();
  check_ranks(shape, ranks);
  const Shape have = t.ranks();
  bool native = true;
  for (std::size_t m = 0; m < shape.size(); ++m)
    native = native && ranks[m] <= have[m] && have[m] <= shape[m];
  if (!native) return weighted_hosvd(tucker_reconstruct(t), ranks, p);

  std::vector<Matrix> q(shape.size());
  DenseTensor core = t.core;
  for (std::size_t m = 0; m < shape.size(); ++m) {
    Eigen::HouseholderQR<Matrix> qr(t.factors[m]);
    const auto rows = t.factors[m].rows(), cols = t.factors[m].cols();
    q[m] = qr.householderQ() * Matrix::Identity(rows, cols);
    const Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    core = mode_product(core, r, m);
  }
  if (frobenius_norm(core) == 0.0)
    throw Error(ErrorCode::zero_tensor, "weighted HOSVD of an all-zero tensor");
  return st_hosvd(std::move(core), &q, ranks, p);
}

DenseTensor tucker_reconstruct(const TuckerTensor& t) {
  DenseTensor out = t.core;
  for (std::size_t m = 0; m < t.order(); ++m) out = mode_product(out, t.factors[m], m);
  return out;
}

// ---------------------------------------------------------------------------
// CP

namespace {

// Khatri-Rao product of all factors except `skip`, rows ordered like the
// columns of matricize(t, skip).
Matrix khatri_rao_except(const std::vector<Matrix>& a, std::size_t skip) {
  const Eigen::Index rank = a.front().cols();
  Eigen::Index rows = 1;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (k != skip) rows *= a[k].rows();
  Matrix out = Matrix::Ones(rows, rank);
  Eigen::Index stride = 1;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (k == skip) continue;
    const Eigen::Index n = a[k].rows();
    for (Eigen::Index j = 0; j < rows; ++j) out.row(j).array() *= a[k].row((j / stride) % n).array();
    stride *= n;
  }
  return out;
}

Matrix hadamard_gram_except(const std::vector<Matrix>& a, std::size_t skip) {
  const Eigen::Index rank = a.front().cols();
  Matrix v = Matrix::Ones(rank, rank);
  for (std::size_t k = 0; k < a.size(); ++k)
    if (k != skip) v.array() *= (a[k].transpose() * a[k]).array();
  return v;
}

}  // namespace

CpAlsResult cp_als(const DenseTensor& t, std::size_t rank, const CpAlsOptions& opts) {
  if (rank < 1) throw Error(ErrorCode::rank_error, "CP rank must be >= 1");
  const std::size_t order = t.order();
  const auto r = static_cast<Eigen::Index>(rank);
  const double norm_t = frobenius_norm(t);
  if (norm_t == 0.0) throw Error(ErrorCode::zero_tensor, "CP-ALS of an all-zero tensor");

  std::vector<Matrix> unfold(order);
  std::vector<Matrix> a(order);
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t m = 0; m < order; ++m) {
    unfold[m] = matricize(t, m);
    if (rank <= t.dim(m)) {
      a[m] = leading_left_svd(unfold[m], rank).u;
    } else {
      a[m] = Matrix(unfold[m].rows(), r);
      for (Eigen::Index j = 0; j < r; ++j)
        for (Eigen::Index i = 0; i < a[m].rows(); ++i) a[m](i, j) = normal(rng);
      a[m].colwise().normalize();
    }
  }

  CpAlsResult res;
  Vector lambda = Vector::Ones(r);
  const double norm2 = norm_t * norm_t;
  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    std::vector<Matrix> previous = a;
    Vector previous_lambda = lambda;
    double inner_x = 0.0, norm_fit2 = 0.0;
    for (std::size_t m = 0; m < order; ++m) {
      const Matrix v = hadamard_gram_except(a, m);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(v);
      const double top = eig.eigenvalues().maxCoeff();
      if (!(eig.eigenvalues().minCoeff() > 1e-12 * top)) {
        res.degenerate = true;
        a = std::move(previous);
        lambda = previous_lambda;
        break;
      }
      const Matrix mttkrp = unfold[m] * khatri_rao_except(a, m);
      a[m] = v.ldlt().solve(mttkrp.transpose()).transpose();
      if (m + 1 == order) {
        inner_x = (mttkrp.array() * a[m].array()).sum();
        norm_fit2 = (v.array() * (a[m].transpose() * a[m]).array()).sum();
      }
      lambda = a[m].colwise().norm().transpose();
      for (Eigen::Index j = 0; j < r; ++j)
        if (lambda(j) > 0.0) a[m].col(j) /= lambda(j);
    }
    if (res.degenerate) break;
    const double err = std::sqrt(std::max(0.0, norm2 - 2.0 * inner_x + norm_fit2)) / norm_t;
    res.error_history.push_back(err);
    res.iterations = it + 1;
    if (res.error_history.size() >= 2 &&
        std::abs(res.error_history[res.error_history.size() - 2] - err) < opts.tol)
      break;
  }

  KruskalTensor k;
  k.factors = std::move(a);
  k.weights = lambda;
  res.cp = equilibrate(k);
  return res;
}

DenseTensor cp_reconstruct(const KruskalTensor& k) {
  const Shape shape = k.shape();
  if (shape.empty()) throw Error(ErrorCode::invalid_argument, "empty Kruskal tensor");
  const Matrix kr = khatri_rao_except(k.factors, 0);  // prod_{m>0} I_m x R
  const Vector w = k.weights.size() == 0 ? Vector::Ones(static_cast<Eigen::Index>(k.rank()))
                                         : k.weights;
  const Matrix unfolded = k.factors[0] * w.asDiagonal() * kr.transpose();
  return fold(unfolded, 0, shape);
}

KruskalTensor equilibrate(const KruskalTensor& k) {
  const std::size_t order = k.order();
  const Eigen::Index rank = static_cast<Eigen::Index>(k.rank());
  KruskalTensor out;
  out.factors = k.factors;
  out.weights = Vector::Ones(rank);
  for (Eigen::Index j = 0; j < rank; ++j) {
    double total = k.weights.size() == 0 ? 1.0 : k.weights(j);
    for (std::size_t m = 0; m < order; ++m) total *= out.factors[m].col(j).norm();
    if (total == 0.0) {
      for (auto& f : out.factors) f.col(j).setZero();
      continue;
    }
    const double sign = total < 0.0 ? -1.0 : 1.0;
    const double scale = std::pow(std::abs(total), 1.0 / static_cast<double>(order));
    double carried = sign;
    for (std::size_t m = 1; m < order; ++m) {
      Matrix col = out.factors[m].col(j).normalized();
      carried *= fix_column_signs(col)(0);
      out.factors[m].col(j) = col * scale;
    }
    out.factors[0].col(j) = out.factors[0].col(j).normalized() * (carried * scale);
  }
  return out;
}

KruskalTensor tucker_to_cp(const TuckerTensor& t) {
  const std::size_t order = t.order();
  const Shape ranks = t.ranks();
  const std::size_t terms = t.core.size();
  KruskalTensor k;
  k.factors.resize(order);
  for (std::size_t m = 0; m < order; ++m)
    k.factors[m] = Matrix(t.factors[m].rows(), static_cast<Eigen::Index>(terms));
  k.weights = Vector::Ones(static_cast<Eigen::Index>(terms));
  std::vector<std::size_t> idx(order, 0);
  for (std::size_t j = 0; j < terms; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    for (std::size_t m = 0; m < order; ++m)
      k.factors[m].col(col) = t.factors[m].col(static_cast<Eigen::Index>(idx[m]));
    k.factors[0].col(col) *= t.core.data()[j];
    for (std::size_t m = 0; m < order && ++idx[m] == ranks[m]; ++m) idx[m] = 0;
  }
  return equilibrate(k);
}

// ---------------------------------------------------------------------------
// Tensor train

TTTensor tt_svd(const DenseTensor& t, std::span<const std::size_t> ranks,
                std::vector<std::string>* notices) {
  const std::size_t order = t.order();
  if (ranks.size() + 1 != order)
    throw Error(ErrorCode::rank_error, "expected " + num(order - 1) + " TT-ranks, got " +
                                           num(ranks.size()));
  for (std::size_t k = 0; k < ranks.size(); ++k)
    if (ranks[k] < 1)
      throw Error(ErrorCode::rank_error, "TT-rank " + num(k + 1) + " must be >= 1");

  TTTensor out;
  std::vector<double> rest(t.values().begin(), t.values().end());
  std::size_t left_rank = 1;
  std::size_t remaining = t.size();
  for (std::size_t k = 0; k + 1 < order; ++k) {
    const std::size_t n = t.dim(k);
    const auto rows = static_cast<Eigen::Index>(left_rank * n);
    const auto cols = static_cast<Eigen::Index>(remaining / n);
    Eigen::Map<const Matrix> c(rest.data(), rows, cols);
    const std::size_t feasible = static_cast<std::size_t>(std::min(rows, cols));
    std::size_t r = ranks[k];
    if (r > feasible) {
      if (notices)
        notices->push_back("TT-rank " + num(k + 1) + " clipped from " + num(r) + " to " +
                           num(feasible));
      r = feasible;
    }
    Eigen::BDCSVD<Matrix> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto re = static_cast<Eigen::Index>(r);
    Matrix u = svd.matrixU().leftCols(re);
    const Vector signs = fix_column_signs(u);
    const Vector scale = signs.cwiseProduct(svd.singularValues().head(re));
    Matrix next = scale.asDiagonal() * svd.matrixV().leftCols(re).transpose();
    out.cores.emplace_back(Shape{left_rank, n, r}, std::vector<double>(u.data(), u.data() + u.size()));
    rest.assign(next.data(), next.data() + next.size());
    remaining = static_cast<std::size_t>(cols);
    left_rank = r;
  }
  out.cores.emplace_back(Shape{left_rank, t.dim(order - 1), 1}, std::move(rest));
  return out;
}

DenseTensor tt_reconstruct(const TTTensor& t) {
  if (t.cores.empty()) throw Error(ErrorCode::invalid_argument, "empty TT tensor");
  // acc: (prod of processed mode sizes) x R_k
  Matrix acc = Eigen::Map<const Matrix>(t.cores[0].data(), static_cast<Eigen::Index>(t.cores[0].dim(1)),
                                        static_cast<Eigen::Index>(t.cores[0].dim(2)));
  for (std::size_t k = 1; k < t.order(); ++k) {
    const DenseTensor& c = t.cores[k];
    if (c.dim(0) != static_cast<std::size_t>(acc.cols()))
      throw Error(ErrorCode::shape_mismatch, "TT rank chain broken at core " + num(k + 1));
    Eigen::Map<const Matrix> core(c.data(), static_cast<Eigen::Index>(c.dim(0)),
                                  static_cast<Eigen::Index>(c.dim(1) * c.dim(2)));
    Matrix prod = acc * core;  // N x (I_k R_{k+1})
    acc = Eigen::Map<const Matrix>(prod.data(), prod.rows() * static_cast<Eigen::Index>(c.dim(1)),
                                   static_cast<Eigen::Index>(c.dim(2)));
  }
  return DenseTensor(t.shape(), std::vector<double>(acc.data(), acc.data() + acc.size()));
}

KruskalTensor tt_to_cp(const TTTensor& t) {
  const std::size_t order = t.order();
  const Shape shape = t.shape();
  const Shape ranks = t.ranks();
  std::size_t terms = 1;
  for (std::size_t r : ranks) terms *= r;
  KruskalTensor k;
  k.factors.resize(order);
  for (std::size_t m = 0; m < order; ++m)
    k.factors[m] = Matrix(static_cast<Eigen::Index>(shape[m]), static_cast<Eigen::Index>(terms));
  k.weights = Vector::Ones(static_cast<Eigen::Index>(terms));
  std::vector<std::size_t> idx(ranks.size(), 0);
  for (std::size_t j = 0; j < terms; ++j) {
    for (std::size_t m = 0; m < order; ++m) {
      const DenseTensor& c = t.cores[m];
      const std::size_t a = m == 0 ? 0 : idx[m - 1];
      const std::size_t b = m + 1 == order ? 0 : idx[m];
      const std::size_t r0 = c.dim(0), n = c.dim(1);
      for (std::size_t i = 0; i < n; ++i)
        k.factors[m](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            c.data()[a + r0 * (i + n * b)];
    }
    for (std::size_t m = 0; m < idx.size() && ++idx[m] == ranks[m]; ++m) idx[m] = 0;
  }
  return equilibrate(k);
}

}  // namespace stm
