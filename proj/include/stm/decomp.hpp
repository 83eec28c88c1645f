#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stm/tensor.hpp"

namespace stm {

/// Relative floor below which a singular value counts as zero: directions with
/// sigma < kSigmaFloor * sigma_1 get weight 1 (0^0 = 1) and are dropped from
/// the core projection.
inline constexpr double kSigmaFloor = 1e-12;

/// Tucker tensor in weighted-HOSVD form.
///
/// `bases[m]` holds the sign-fixed orthonormal left singular vectors U^(m)
/// (I_m x R_m), `sigmas[m]` the matching singular values and `factors[m]` the
/// weighted factors U^(m) diag(sigma^p). The represented tensor is
/// core x_1 factors[0] ... x_M factors[M-1].
struct TuckerTensor {
  DenseTensor core;
  std::vector<Matrix> factors;
  std::vector<Matrix> bases;
  std::vector<Vector> sigmas;
  double p = 0.0;

  std::size_t order() const noexcept { return factors.size(); }
  Shape shape() const;
  Shape ranks() const;
};

/// CP (Kruskal) tensor: sum_r weights[r] * a_r^(1) o ... o a_r^(M).
struct KruskalTensor {
  std::vector<Matrix> factors;
  Vector weights;

  std::size_t order() const noexcept { return factors.size(); }
  std::size_t rank() const noexcept {
    return factors.empty() ? 0 : static_cast<std::size_t>(factors.front().cols());
  }
  Shape shape() const;
};

/// Tensor train. cores[m] has shape (R_{m-1}, I_m, R_m) with R_0 = R_M = 1.
struct TTTensor {
  std::vector<DenseTensor> cores;

  std::size_t order() const noexcept { return cores.size(); }
  Shape shape() const;
  /// Interior ranks R_1..R_{M-1}.
  Shape ranks() const;
};

/// Default weighting power 1/M.
inline double default_power(std::size_t order) { return 1.0 / static_cast<double>(order); }

/// Flips each column so that its entry of largest magnitude is positive
/// (first such row on ties). Returns the applied signs.
Vector fix_column_signs(Matrix& u);

/// Sequentially truncated, sign-fixed HOSVD with singular-value weighting.
/// Modes are processed in order 1..M; each SVD is taken on the tensor already
/// projected onto the retained bases of the earlier modes.
TuckerTensor weighted_hosvd(const DenseTensor& t, std::span<const std::size_t> ranks, double p);

/// Same decomposition computed without materializing the dense tensor. The
/// input may carry any factors (they are re-orthonormalized first); result
/// matches the dense path up to rounding.
TuckerTensor weighted_hosvd(const TuckerTensor& t, std::span<const std::size_t> ranks, double p);

DenseTensor tucker_reconstruct(const TuckerTensor& t);

struct CpAlsOptions {
  std::size_t max_iters = 500;
  double tol = 1e-10;
  std::uint64_t seed = 0x5eedULL;  // used only when R exceeds a mode size
};

struct CpAlsResult {
  KruskalTensor cp;
  std::size_t iterations = 0;
  /// Relative error ||t - cp|| / ||t|| after each sweep.
  std::vector<double> error_history;
  /// Set when a normal-equation matrix became singular; `cp` is then the last
  /// well-defined iterate.
  bool degenerate = false;

  double relative_error() const { return error_history.empty() ? 1.0 : error_history.back(); }
};

CpAlsResult cp_als(const DenseTensor& t, std::size_t rank, const CpAlsOptions& opts = {});

DenseTensor cp_reconstruct(const KruskalTensor& k);

/// TT-SVD with sign-fixed left singular vectors. Ranks above the feasible
/// maximum of an unfolding are clipped; a notice is appended for each.
TTTensor tt_svd(const DenseTensor& t, std::span<const std::size_t> ranks,
                std::vector<std::string>* notices = nullptr);

DenseTensor tt_reconstruct(const TTTensor& t);

/// Folds weights into the columns, fixes signs of modes 2..M (sign carried by
/// mode 1) and gives every column of a rank-one term the same norm.
KruskalTensor equilibrate(const KruskalTensor& k);

/// One rank-one term per core entry, equilibrated. Zero core entries give
/// zero columns, which are kept.
KruskalTensor tucker_to_cp(const TuckerTensor& t);

/// One rank-one term per interior TT-rank index tuple, equilibrated.
KruskalTensor tt_to_cp(const TTTensor& t);

}  // namespace stm
