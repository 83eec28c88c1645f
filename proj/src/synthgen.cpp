#include "stm/synthgen.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/QR>

#include "stm/error.hpp"

namespace stm {
namespace {

// Stream roles. Each (role, indices) pair owns one generator, so class
// information draws never depend on the noise level or on other samples.
enum Role : std::uint64_t {
  kInfoShared = 1,     // (class)
  kInfoPerSample = 2,  // (sample)
  kFreqShared = 3,     // (class, mode)
  kFreqPerSample = 4,  // (sample, mode)
  kCoreNoise = 5,      // (sample)
  kLeafNoise = 6,      // (sample, mode)
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t signal_rank(const SynthConfig& cfg) { return std::min(cfg.r_approx, cfg.r_exact); }

std::size_t class_of(const SynthConfig& cfg, std::size_t index) {
  return index < cfg.samples_per_class ? 0 : 1;
}

}  // namespace

std::string_view to_string(Scenario s) noexcept { return s == Scenario::core ? "core" : "leaf"; }

Scenario parse_scenario(std::string_view name) {
  if (name == "core") return Scenario::core;
  if (name == "leaf") return Scenario::leaf;
  throw Error(ErrorCode::invalid_argument, "unknown scenario '" + std::string(name) + "'");
}

std::string_view to_string(FrequencyLaw f) noexcept {
  return f == FrequencyLaw::normal ? "normal" : "uniform";
}

FrequencyLaw parse_frequency_law(std::string_view name) {
  if (name == "normal") return FrequencyLaw::normal;
  if (name == "uniform") return FrequencyLaw::uniform;
  throw Error(ErrorCode::invalid_argument, "unknown frequency law '" + std::string(name) + "'");
}

void SynthConfig::validate() const {
  if (mode_size < 1) throw Error(ErrorCode::invalid_argument, "mode_size must be >= 1");
  if (r_approx < 1 || r_approx > mode_size)
    throw Error(ErrorCode::invalid_argument, "r_approx must lie in 1..mode_size");
  if (r_exact < 1) throw Error(ErrorCode::invalid_argument, "r_exact must be >= 1");
  if (!(noise_variance > 0.0))
    throw Error(ErrorCode::invalid_argument, "noise variance must be > 0");
  if (samples_per_class < 1)
    throw Error(ErrorCode::invalid_argument, "samples_per_class must be >= 1");
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t role, std::uint64_t a,
                          std::uint64_t b) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ role);
  h = splitmix64(h ^ a);
  return splitmix64(h ^ b);
}

int synth_label(const SynthConfig& cfg, std::size_t index) {
  return class_of(cfg, index) == 0 ? -1 : 1;
}

SampleSignal sample_signal(const SynthConfig& cfg, std::size_t index) {
  cfg.validate();
  const std::size_t k = signal_rank(cfg);
  const std::size_t cls = class_of(cfg, index);
  const bool core_scenario = cfg.scenario == Scenario::core;
  std::normal_distribution<double> normal(0.0, 1.0);
  SampleSignal s;

  {
    std::mt19937_64 rng(core_scenario ? stream_seed(cfg.seed, kInfoShared, cls)
                                      : stream_seed(cfg.seed, kInfoPerSample, index));
    normal.reset();  // drop the cached Box-Muller value from any previous stream
    std::vector<double> values(k * k * k);
    for (double& v : values) v = normal(rng);
    s.info = DenseTensor(Shape{k, k, k}, std::move(values));
  }

  const std::size_t n = cfg.mode_size;
  Vector grid(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    grid(static_cast<Eigen::Index>(i)) =
        n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
  const double half_width = std::sqrt(3.0);
  std::uniform_real_distribution<double> uniform(-half_width, half_width);
  for (std::size_t m = 0; m < SynthConfig::order; ++m) {
    std::mt19937_64 rng(core_scenario ? stream_seed(cfg.seed, kFreqPerSample, index, m)
                                      : stream_seed(cfg.seed, kFreqShared, cls, m));
    normal.reset();
    Vector nu(static_cast<Eigen::Index>(k));
    for (Eigen::Index c = 0; c < nu.size(); ++c)
      nu(c) = cfg.frequency_law == FrequencyLaw::normal ? normal(rng) : uniform(rng);
    Matrix cols(static_cast<Eigen::Index>(n), nu.size());
    for (Eigen::Index c = 0; c < nu.size(); ++c)
      cols.col(c) = (std::numbers::pi * nu(c) * grid.array()).cos().matrix();
    s.frequencies.push_back(std::move(nu));
    s.cosine_columns.push_back(std::move(cols));
  }
  return s;
}

std::vector<LabeledSample> generate(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t r = cfg.r_approx;
  const std::size_t k = signal_rank(cfg);
  const double theta = std::sqrt(cfg.noise_variance);
  const std::size_t total = 2 * cfg.samples_per_class;
  std::vector<LabeledSample> out;
  out.reserve(total);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (std::size_t index = 0; index < total; ++index) {
    const SampleSignal signal = sample_signal(cfg, index);

    std::mt19937_64 core_rng(stream_seed(cfg.seed, kCoreNoise, index));
    normal.reset();
    std::vector<double> core(r * r * r);
    for (double& v : core) v = theta * normal(core_rng);
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t b = 0; b < k; ++b)
        for (std::size_t a = 0; a < k; ++a)
          core[a + r * (b + r * c)] += signal.info.data()[a + k * (b + k * c)];

    TuckerTensor raw;
    raw.core = DenseTensor(Shape{r, r, r}, std::move(core));
    for (std::size_t m = 0; m < SynthConfig::order; ++m) {
      std::mt19937_64 leaf_rng(stream_seed(cfg.seed, kLeafNoise, index, m));
      normal.reset();
      Matrix leaf(static_cast<Eigen::Index>(cfg.mode_size), static_cast<Eigen::Index>(r));
      for (Eigen::Index c = 0; c < leaf.cols(); ++c)
        for (Eigen::Index i = 0; i < leaf.rows(); ++i) leaf(i, c) = theta * normal(leaf_rng);
      leaf.leftCols(static_cast<Eigen::Index>(k)) += signal.cosine_columns[m];
      Eigen::HouseholderQR<Matrix> qr(leaf);
      Matrix q = qr.householderQ() * Matrix::Identity(leaf.rows(), leaf.cols());
      raw.factors.push_back(q);
      raw.bases.push_back(std::move(q));
      raw.sigmas.push_back(Vector::Ones(static_cast<Eigen::Index>(r)));
    }
    const Shape ranks(SynthConfig::order, r);
    out.push_back({weighted_hosvd(raw, ranks, 0.0), synth_label(cfg, index)});
  }
  return out;
}

}  // namespace stm
