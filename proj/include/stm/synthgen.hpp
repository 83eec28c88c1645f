#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "stm/decomp.hpp"

namespace stm {

enum class Scenario { core, leaf };
enum class FrequencyLaw { normal, uniform };  // uniform: U(-sqrt3, sqrt3), same mean/variance

std::string_view to_string(Scenario s) noexcept;
Scenario parse_scenario(std::string_view name);
std::string_view to_string(FrequencyLaw f) noexcept;
FrequencyLaw parse_frequency_law(std::string_view name);

/// Order-3 core/leaf benchmark. Class signal sits in the leading
/// min(r_approx, r_exact) block of the core (core scenario) or in cosine
/// columns added to the leaves (leaf scenario).
struct SynthConfig {
  Scenario scenario = Scenario::leaf;
  std::size_t mode_size = 100;
  std::size_t r_exact = 3;
  std::size_t r_approx = 3;
  double noise_variance = 0.01;
  std::size_t samples_per_class = 50;
  std::uint64_t seed = 0;
  FrequencyLaw frequency_law = FrequencyLaw::normal;

  static constexpr std::size_t order = 3;
  void validate() const;
};

struct LabeledSample {
  TuckerTensor tensor;  // HOSVD form (p = 0), orthonormal factors
  int label = 1;        // -1 or +1
};

/// Noise-free signal ingredients of one sample, before noise and QR.
struct SampleSignal {
  DenseTensor info;                       // k x k x k, k = min(r_approx, r_exact)
  std::vector<Vector> frequencies;        // per mode, k frequencies
  std::vector<Matrix> cosine_columns;     // per mode, I x k
};

/// Label of sample `index`: the first samples_per_class samples are -1.
int synth_label(const SynthConfig& cfg, std::size_t index);

SampleSignal sample_signal(const SynthConfig& cfg, std::size_t index);

/// 2 * samples_per_class samples, class -1 first. Deterministic in (cfg, seed).
std::vector<LabeledSample> generate(const SynthConfig& cfg);

/// Seed of an independent random stream, derived by SplitMix64 mixing.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t role, std::uint64_t a,
                          std::uint64_t b = 0);

}  // namespace stm
