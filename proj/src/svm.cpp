#include "stm/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "stm/error.hpp"

namespace stm {
namespace {

constexpr double kTau = 1e-12;

void check_inputs(std::span<const int> labels, const Matrix& gram, double C) {
  if (!(C > 0.0)) throw Error(ErrorCode::invalid_argument, "SVM regularization C must be > 0");
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (gram.rows() != n || gram.cols() != n)
    throw Error(ErrorCode::shape_mismatch, "Gram matrix is " + std::to_string(gram.rows()) + "x" +
                                               std::to_string(gram.cols()) + " for " +
                                               std::to_string(n) + " labels");
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y != 1 && y != -1)
      throw Error(ErrorCode::invalid_argument, "SVM labels must be -1 or +1");
    (y > 0 ? pos : neg) = true;
  }
  if (!pos || !neg) throw Error(ErrorCode::single_class, "training set contains a single class");
  const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorCode::not_symmetric, "Gram matrix is not symmetric");
}

}  // namespace

double dual_objective(const Vector& alphas, std::span<const int> labels, const Matrix& gram) {
  Vector ya(alphas.size());
  for (Eigen::Index i = 0; i < alphas.size(); ++i) ya(i) = alphas(i) * labels[static_cast<std::size_t>(i)];
  return alphas.sum() - 0.5 * ya.dot(gram * ya);
}

double compute_bias(const Vector& alphas, std::span<const int> labels, double C,
                    const Vector& decision_without_bias, bool* midpoint) {
  double sum = 0.0;
  std::size_t free = 0;
  for (Eigen::Index i = 0; i < alphas.size(); ++i) {
    if (alphas(i) > 0.0 && alphas(i) < C) {
      sum += labels[static_cast<std::size_t>(i)] - decision_without_bias(i);
      ++free;
    }
  }
  if (midpoint) *midpoint = free == 0;
  if (free > 0) return sum / static_cast<double>(free);
  double max_neg = -std::numeric_limits<double>::infinity();
  double min_pos = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < alphas.size(); ++i) {
    if (labels[static_cast<std::size_t>(i)] < 0)
      max_neg = std::max(max_neg, decision_without_bias(i));
    else
      min_pos = std::min(min_pos, decision_without_bias(i));
  }
  return -(max_neg + min_pos) / 2.0;
}

SvmModel train(std::span<const int> labels, const Matrix& gram, double C, const SmoOptions& opts) {
  check_inputs(labels, gram, C);
  const auto n = static_cast<Eigen::Index>(labels.size());
  const auto y = [&](Eigen::Index i) { return static_cast<double>(labels[static_cast<std::size_t>(i)]); };

  // Minimize f(a) = 1/2 a^T Q a - e^T a with Q_ij = y_i y_j K_ij.
  Vector alpha = Vector::Zero(n);
  Vector grad = Vector::Constant(n, -1.0);
  SvmModel model;
  model.C = C;
  model.labels.assign(labels.begin(), labels.end());
  if (opts.trace_objective) model.objective_trace.push_back(0.0);

  const auto up = [&](Eigen::Index t) { return y(t) > 0 ? alpha(t) < C : alpha(t) > 0.0; };
  const auto low = [&](Eigen::Index t) { return y(t) > 0 ? alpha(t) > 0.0 : alpha(t) < C; };

  std::size_t updates = 0;
  for (;;) {
    Eigen::Index i = -1, j = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = -y(t) * grad(t);
      if (up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i < 0 || j < 0 || gmax - gmin < opts.tol) break;
    if (updates == opts.max_updates)
      throw Error(ErrorCode::non_convergence,
                  "SMO did not converge within " + std::to_string(opts.max_updates) + " updates");
    ++updates;

    const double kii = gram(i, i), kjj = gram(j, j), kij = gram(i, j);
    const double old_i = alpha(i), old_j = alpha(j);
    double quad = kii + kjj - 2.0 * kij;
    if (quad <= 0.0) quad = kTau;
    if (y(i) != y(j)) {
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) {
          alpha(j) = 0.0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = -diff;
      }
      if (diff > 0.0) {
        if (alpha(i) > C) {
          alpha(i) = C;
          alpha(j) = C - diff;
        }
      } else if (alpha(j) > C) {
        alpha(j) = C;
        alpha(i) = C + diff;
      }
    } else {
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > C) {
        if (alpha(i) > C) {
          alpha(i) = C;
          alpha(j) = sum - C;
        }
      } else if (alpha(j) < 0.0) {
        alpha(j) = 0.0;
        alpha(i) = sum;
      }
      if (sum > C) {
        if (alpha(j) > C) {
          alpha(j) = C;
          alpha(i) = sum - C;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = sum;
      }
    }

    const double di = alpha(i) - old_i, dj = alpha(j) - old_j;
    for (Eigen::Index t = 0; t < n; ++t)
      grad(t) += y(t) * (y(i) * gram(t, i) * di + y(j) * gram(t, j) * dj);
    if (opts.trace_objective) model.objective_trace.push_back(dual_objective(alpha, labels, gram));
  }

  // decision without bias: f_t = sum_s alpha_s y_s K_st = y_t (grad_t + 1)
  Vector f(n);
  for (Eigen::Index t = 0; t < n; ++t) f(t) = y(t) * (grad(t) + 1.0);
  model.alphas = std::move(alpha);
  model.bias = compute_bias(model.alphas, labels, C, f, &model.midpoint_bias);
  model.updates = updates;
  model.objective = dual_objective(model.alphas, labels, gram);
  return model;
}

SvmModel train(const TrainingSet& ts, const GramMatrix& gram, const KernelSpec& spec, double C,
               const SmoOptions& opts) {
  if (ts.samples.size() != ts.labels.size())
    throw Error(ErrorCode::shape_mismatch, "training set has different sample and label counts");
  SvmModel model = train(ts.labels, gram.values, C, opts);
  model.kind = spec.kind;
  model.g = spec.g;
  model.samples = std::make_shared<const std::vector<Sample>>(ts.samples);
  return model;
}

double decision_value(const SvmModel& model, std::span<const double> kernel_column) {
  if (kernel_column.size() != model.labels.size())
    throw Error(ErrorCode::shape_mismatch, "kernel column length does not match the training set");
  double s = model.bias;
  for (std::size_t i = 0; i < kernel_column.size(); ++i) {
    const double a = model.alphas(static_cast<Eigen::Index>(i));
    if (a != 0.0) s += a * model.labels[i] * kernel_column[i];
  }
  return s;
}

int predict(const SvmModel& model, std::span<const double> kernel_column) {
  return label_of(decision_value(model, kernel_column));
}

int predict(const SvmModel& model, const Sample& x) {
  if (!model.samples)
    throw Error(ErrorCode::invalid_argument, "model was trained without samples attached");
  const auto& train_samples = *model.samples;
  if (!train_samples.empty() && sample_shape(train_samples.front()) != sample_shape(x))
    throw Error(ErrorCode::shape_mismatch, "prediction sample shape differs from training samples");
  std::vector<double> column(train_samples.size(), 0.0);
  for (std::size_t i = 0; i < train_samples.size(); ++i)
    if (model.alphas(static_cast<Eigen::Index>(i)) != 0.0)
      column[i] = evaluate_kernel(model.kind, model.g, train_samples[i], x);
  return predict(model, column);
}

int normalize_label(int raw) {
  switch (raw) {
    case 0:
    case -1: return -1;
    case 1: return 1;
    default:
      throw Error(ErrorCode::invalid_argument, "label " + std::to_string(raw) +
                                                   " is not one of -1, 0, 1");
  }
}

}  // namespace stm
