#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "../oracle/qp_oracle.hpp"
#include "stm/error.hpp"
#include "stm/svm.hpp"
#include "support.hpp"

using namespace stm;

namespace {

Matrix train_block(const oracle::Instance& inst) { return inst.gram.topLeftCorner(inst.n, inst.n); }

std::vector<double> column(const oracle::Instance& inst, Eigen::Index point) {
  std::vector<double> c(static_cast<std::size_t>(inst.n));
  for (int i = 0; i < inst.n; ++i) c[static_cast<std::size_t>(i)] = inst.gram(i, point);
  return c;
}

}  // namespace

TEST(Svm, TwoPointAnalytic) {
  const std::vector<int> y{1, -1};
  for (double k : {0.0, 0.3, -0.5}) {
    Matrix gram(2, 2);
    gram << 1.0, k, k, 1.0;
    const SvmModel m = train(y, gram, 100.0, {.tol = 1e-12});
    const double alpha = 1.0 / (1.0 - k);
    EXPECT_NEAR(m.alphas(0), alpha, 1e-9);
    EXPECT_NEAR(m.alphas(1), alpha, 1e-9);
    EXPECT_NEAR(m.bias, 0.0, 1e-9);
    EXPECT_FALSE(m.midpoint_bias);
    EXPECT_NEAR(m.objective, alpha, 1e-9);
  }
}

TEST(Svm, TwoPointCappedByC) {
  const std::vector<int> y{1, -1};
  Matrix gram(2, 2);
  gram << 1.0, 0.0, 0.0, 1.0;
  const SvmModel m = train(y, gram, 0.25);
  EXPECT_EQ(m.alphas(0), 0.25);
  EXPECT_EQ(m.alphas(1), 0.25);
  EXPECT_TRUE(m.midpoint_bias);
  // f = (0.25, -0.25): midpoint of [max_neg, min_pos] = 0
  EXPECT_NEAR(m.bias, 0.0, 1e-15);
}

TEST(Svm, MidpointBiasFormula) {
  const std::vector<int> y{1, 1, -1};
  Matrix gram(3, 3);
  gram << 1.0, 0.9, 0.1, 0.9, 1.0, 0.2, 0.1, 0.2, 1.0;
  const SvmModel m = train(y, gram, 0.01);
  ASSERT_TRUE(m.midpoint_bias);
  Vector f = Vector::Zero(3);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) f(i) += m.alphas(j) * y[static_cast<std::size_t>(j)] * gram(j, i);
  EXPECT_NEAR(m.bias, -(f(2) + std::min(f(0), f(1))) / 2.0, 1e-15);
}

TEST(Svm, ComputeBiasAveragesFreeVectors) {
  Vector alphas(3);
  alphas << 0.5, 0.0, 0.2;
  Vector f(3);
  f << 0.4, 5.0, -0.8;
  bool midpoint = true;
  const std::vector<int> y{1, 1, -1};
  EXPECT_NEAR(compute_bias(alphas, y, 1.0, f, &midpoint), ((1 - 0.4) + (-1 + 0.8)) / 2.0, 1e-15);
  EXPECT_FALSE(midpoint);
}

TEST(Svm, MatchesBruteForceQpOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = oracle::random_instance(rng);
    const Matrix k = train_block(inst);
    const auto ref = oracle::solve_dual(inst.labels, k, inst.C);
    const SvmModel m = train(inst.labels, k, inst.C, {.tol = 1e-9});
    EXPECT_NEAR(m.objective, ref.objective, 1e-6 * std::max(1.0, std::abs(ref.objective)))
        << "trial " << trial;
    EXPECT_NEAR(dual_objective(m.alphas, inst.labels, k), m.objective, 1e-12 * std::max(1.0, m.objective));
  }
}

TEST(Svm, SolutionIsFeasibleAndSatisfiesKkt) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = oracle::random_instance(rng);
    const Matrix k = train_block(inst);
    const double tol = 1e-3;
    const SvmModel m = train(inst.labels, k, inst.C, {.tol = tol});
    double balance = 0.0;
    double up = -1e300, low = 1e300;
    for (int i = 0; i < inst.n; ++i) {
      const double a = m.alphas(i), y = inst.labels[static_cast<std::size_t>(i)];
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, inst.C);
      balance += a * y;
      double grad = -1.0;
      for (int j = 0; j < inst.n; ++j) grad += y * inst.labels[static_cast<std::size_t>(j)] * k(i, j) * m.alphas(j);
      const double v = -y * grad;
      if (y > 0 ? a < inst.C : a > 0) up = std::max(up, v);
      if (y > 0 ? a > 0 : a < inst.C) low = std::min(low, v);
    }
    EXPECT_NEAR(balance, 0.0, 1e-9 * std::max(1.0, inst.C));
    EXPECT_LT(up - low, tol);
  }
}

TEST(Svm, DualObjectiveAscendsMonotonically) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = oracle::random_instance(rng);
    const SvmModel m = train(inst.labels, train_block(inst), inst.C, {.tol = 1e-6, .trace_objective = true});
    ASSERT_EQ(m.objective_trace.size(), m.updates + 1);
    for (std::size_t i = 1; i < m.objective_trace.size(); ++i)
      EXPECT_GE(m.objective_trace[i], m.objective_trace[i - 1] - 1e-12 * std::max(1.0, inst.C));
  }
}

TEST(Svm, PredictionsMatchOracleDecisions) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = oracle::random_instance(rng);
    const Matrix k = train_block(inst);
    const auto ref = oracle::solve_dual(inst.labels, k, inst.C);
    const SvmModel m = train(inst.labels, k, inst.C, {.tol = 1e-10});
    for (Eigen::Index p = 0; p < inst.gram.rows(); ++p) {
      double d = ref.bias;
      for (int i = 0; i < inst.n; ++i) d += ref.alpha(i) * inst.labels[static_cast<std::size_t>(i)] * inst.gram(i, p);
      if (std::abs(d) < 1e-6) continue;
      EXPECT_EQ(predict(m, column(inst, p)), label_of(d)) << "trial " << trial << " point " << p;
    }
  }
}

TEST(Svm, SignOfZeroIsPositive) {
  EXPECT_EQ(label_of(0.0), 1);
  EXPECT_EQ(label_of(-0.0), 1);
  EXPECT_EQ(label_of(-1e-300), -1);
  SvmModel m;
  m.alphas = Vector::Zero(2);
  m.labels = {1, -1};
  const double col[] = {0.3, 0.4};
  EXPECT_EQ(predict(m, col), 1);
}

TEST(Svm, InputErrors) {
  const std::vector<int> y{1, -1};
  const Matrix k = Matrix::Identity(2, 2);
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io_error;  // sentinel: nothing thrown
  };
  EXPECT_EQ(code_of([&] { train(y, k, 0.0); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([&] { train(y, k, -1.0); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([&] { train(std::vector<int>{1, 1}, k, 1.0); }), ErrorCode::single_class);
  EXPECT_EQ(code_of([&] { train(std::vector<int>{1, 0}, k, 1.0); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([&] { train(y, Matrix::Identity(3, 3), 1.0); }), ErrorCode::shape_mismatch);
  Matrix asym = k;
  asym(0, 1) = 0.5;
  EXPECT_EQ(code_of([&] { train(y, asym, 1.0); }), ErrorCode::not_symmetric);
}

TEST(Svm, NonConvergenceIsReported) {
  std::mt19937_64 rng(10);
  oracle::Instance inst;
  do inst = oracle::random_instance(rng);
  while (inst.n < 6);
  try {
    train(inst.labels, train_block(inst), 1000.0, {.tol = 1e-12, .max_updates = 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::non_convergence);
  }
}

TEST(Svm, NormalizeLabel) {
  EXPECT_EQ(normalize_label(0), -1);
  EXPECT_EQ(normalize_label(-1), -1);
  EXPECT_EQ(normalize_label(1), 1);
  EXPECT_THROW(normalize_label(2), Error);
}

TEST(Svm, SamplePredictionMatchesColumnPrediction) {
  std::vector<Sample> samples;
  std::vector<int> labels;
  for (std::uint64_t i = 0; i < 8; ++i) {
    samples.emplace_back(weighted_hosvd(stm::testing::random_tensor({4, 4, 3}, i), Shape{2, 2, 2}, 1.0 / 3.0));
    labels.push_back(i % 2 ? 1 : -1);
  }
  const KernelSpec spec{KernelKind::wsek, 1.0, {2, 2, 2}, std::nullopt};
  const GramMatrix gram = gram_matrix(samples, KernelKind::wsek, 1.0);
  const SvmModel m = train(TrainingSet{samples, labels}, gram, spec, 1.0);
  const Sample probe = weighted_hosvd(stm::testing::random_tensor({4, 4, 3}, 99), Shape{2, 2, 2}, 1.0 / 3.0);
  std::vector<double> col;
  for (const auto& s : samples) col.push_back(evaluate_kernel(KernelKind::wsek, 1.0, s, probe));
  EXPECT_EQ(predict(m, probe), predict(m, col));
  EXPECT_THROW(predict(m, Sample(stm::testing::random_tensor({4, 4, 3}, 1))), Error);
}

TEST(Svm, FreeSupportVectorPredictsOwnLabel) {
  std::mt19937_64 rng(11);
  int seen = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = oracle::random_instance(rng);
    const SvmModel m = train(inst.labels, train_block(inst), inst.C, {.tol = 1e-9});
    for (int i = 0; i < inst.n; ++i) {
      if (!(m.alphas(i) > 1e-9 * inst.C && m.alphas(i) < inst.C * (1 - 1e-9))) continue;
      ++seen;
      EXPECT_EQ(predict(m, column(inst, i)), inst.labels[static_cast<std::size_t>(i)]);
    }
  }
  EXPECT_GT(seen, 0);
}

TEST(Svm, PredictionInvariantToTrainingOrder) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = oracle::random_instance(rng);
    std::vector<int> perm(static_cast<std::size_t>(inst.n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix k(inst.n, inst.n);
    std::vector<int> y;
    for (int a = 0; a < inst.n; ++a) {
      y.push_back(inst.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])]);
      for (int b = 0; b < inst.n; ++b)
        k(a, b) = inst.gram(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]);
    }
    const SvmModel m1 = train(inst.labels, train_block(inst), inst.C, {.tol = 1e-10});
    const SvmModel m2 = train(y, k, inst.C, {.tol = 1e-10});
    for (Eigen::Index p = inst.n; p < inst.gram.rows(); ++p) {
      const auto c1 = column(inst, p);
      std::vector<double> c2;
      for (int a : perm) c2.push_back(inst.gram(a, p));
      const double d1 = decision_value(m1, c1), d2 = decision_value(m2, c2);
      EXPECT_NEAR(d1, d2, 1e-6 * std::max(1.0, inst.C));
      if (std::abs(d1) > 1e-5 * std::max(1.0, inst.C)) EXPECT_EQ(label_of(d1), label_of(d2));
    }
  }
}
