#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "stm/kernels.hpp"

namespace stm {

/// Labeled samples; labels are -1 or +1.
struct TrainingSet {
  std::vector<Sample> samples;
  std::vector<int> labels;
};

struct SmoOptions {
  double tol = 1e-3;                   // stop when the maximal KKT violation drops below
  std::size_t max_updates = 10'000'000;
  bool trace_objective = false;        // record the dual objective after every update
};

/// Trained soft-margin classifier. Decision value for x is
/// sum_i alpha_i y_i K(x_i, x) + bias.
struct SvmModel {
  Vector alphas;
  std::vector<int> labels;
  double bias = 0.0;
  double C = 0.0;
  std::size_t updates = 0;
  /// Dual objective sum(alpha) - 1/2 alpha^T Q alpha at the solution.
  double objective = 0.0;
  /// True when no alpha was strictly inside (0, C) and the bias came from the
  /// midpoint rule.
  bool midpoint_bias = false;
  std::vector<double> objective_trace;

  // Optional: the kernel and training samples, needed by predict(model, x).
  KernelKind kind = KernelKind::wsek;
  double g = 1.0;
  std::shared_ptr<const std::vector<Sample>> samples;
};

/// SMO on a precomputed Gram matrix with maximal-violating-pair selection.
/// Throws on C <= 0, a single class, an asymmetric Gram or non-convergence.
SvmModel train(std::span<const int> labels, const Matrix& gram, double C,
               const SmoOptions& opts = {});

/// As above, and keeps the samples and kernel so predict(model, x) works.
SvmModel train(const TrainingSet& ts, const GramMatrix& gram, const KernelSpec& spec, double C,
               const SmoOptions& opts = {});

/// Bias from the free support vectors, or the midpoint rule when there are
/// none. `gradient_free_decision[i]` is sum_j alpha_j y_j K(x_j, x_i).
double compute_bias(const Vector& alphas, std::span<const int> labels, double C,
                    const Vector& gradient_free_decision, bool* midpoint = nullptr);

/// Dual objective for given alphas.
double dual_objective(const Vector& alphas, std::span<const int> labels, const Matrix& gram);

/// kernel_column[i] = K(x_i, x) over the training samples.
double decision_value(const SvmModel& model, std::span<const double> kernel_column);

/// sign with sign(0) = +1.
inline int label_of(double decision) { return decision >= 0.0 ? 1 : -1; }

int predict(const SvmModel& model, std::span<const double> kernel_column);
int predict(const SvmModel& model, const Sample& x);

/// Maps {0,1} or {-1,1} labels to {-1,+1}; anything else throws.
int normalize_label(int raw);

}  // namespace stm
