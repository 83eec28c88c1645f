#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "stm/decomp.hpp"
#include "stm/tensor.hpp"

namespace stm {

enum class KernelKind { gaussian, dusk, subspace, wsek };

std::string_view to_string(KernelKind kind) noexcept;
KernelKind parse_kernel_kind(std::string_view name);

/// Everything needed to turn a raw sample into a kernel input and evaluate
/// one Gram entry.
struct KernelSpec {
  KernelKind kind = KernelKind::wsek;
  double g = 1.0;                 // length scale, > 0
  Shape ranks;                    // per-mode Tucker ranks
  std::optional<double> p;        // weighting power; 1/M when unset

  double power(std::size_t order) const { return p ? *p : default_power(order); }
};

/// A sample in any supported representation.
using Sample = std::variant<DenseTensor, TuckerTensor, KruskalTensor, TTTensor>;

Shape sample_shape(const Sample& s);

/// exp(-||a - b||^2 / (2 g^2)).
double scalar_kernel(std::span<const double> a, std::span<const double> b, double g);

/// exp(-||x - y||_F^2 / (2 g^2)). Decomposed inputs expand the distance as
/// ||x||^2 + ||y||^2 - 2<x, y> with format-native inner products.
double gaussian_kernel(const DenseTensor& x, const DenseTensor& y, double g);
double gaussian_kernel(const TuckerTensor& x, const TuckerTensor& y, double g);
double gaussian_kernel(const KruskalTensor& x, const KruskalTensor& y, double g);
double gaussian_kernel(const TTTensor& x, const TTTensor& y, double g);

/// sum_{i,j} prod_m kappa(a_i^(m), b_j^(m)). Ranks of x and y may differ.
/// Both inputs are equilibrated first, so weights and per-term scaling of the
/// columns do not matter.
double dusk_kernel(const KruskalTensor& x, const KruskalTensor& y, double g);

/// prod_m exp(-||P_x^(m) - P_y^(m)||_F^2 / (2 g^2)) on the orthonormal bases,
/// with ||P_x - P_y||_F^2 = R_x + R_y - 2 ||U_x^T U_y||_F^2.
double subspace_kernel(const TuckerTensor& x, const TuckerTensor& y, double g);

/// prod_m sum_{i,j} kappa(ubar_{x,i}^(m), ubar_{y,j}^(m)) on the weighted
/// factors. Both inputs must carry the same p.
double wsek_kernel(const TuckerTensor& x, const TuckerTensor& y, double g);

/// Kernel of `kind` on two samples; rejects unsupported representation pairs.
double evaluate_kernel(KernelKind kind, double g, const Sample& x, const Sample& y);

struct GramMatrix {
  Matrix values;  // symmetric n x n
  std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
};

/// Entries i <= j are evaluated (in parallel over pairs) and mirrored. The
/// gaussian and subspace diagonals are exactly 1.
GramMatrix gram_matrix(std::span<const Sample> samples, KernelKind kind, double g,
                       std::size_t threads = 1);
GramMatrix gram_matrix(std::span<const Sample> samples, const KernelSpec& spec,
                       std::size_t threads = 1);

/// K(rows[i], cols[j]).
Matrix cross_kernel(std::span<const Sample> rows, std::span<const Sample> cols, KernelKind kind,
                    double g, std::size_t threads = 1);

}  // namespace stm
