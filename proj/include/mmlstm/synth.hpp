#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mmlstm/dataset.hpp"

namespace mmlstm {

// Correlated-modality speaker task. Each identity k has a prototype
// mu_k^s per modality; a genuine sample shares one latent random walk z
// across its modalities:
//   z_1 = 0,  z_t = z_{t-1} + N(0, 0.1)        (0.1 is the step variance)
//   x_t^s = mu_k^s * (1 + alpha * z_t) + N(0, sigma_n^2 I)
// and each frame is independently replaced by pure N(0, I) noise with
// probability p_deg (blur/occlusion stand-in).
struct SynthConfig {
  std::size_t n_classes = 5;
  std::vector<std::size_t> dims = {16, 8};  // per modality
  std::size_t timesteps = 20;
  double noise_sigma = 0.6;   // sigma_n
  double latent_alpha = 0.5;  // alpha
  double degrade_prob = 0.15;
  std::size_t train_per_class = 2000;
  std::size_t test_per_class = 2000;
  std::uint64_t seed = 42;

  void validate() const;
};

// Train/test pools: disjoint sample draws over the same prototypes.
std::pair<SamplePool, SamplePool> synth_generate(const SynthConfig& cfg);

// One aligned sample of arbitrary length from the config's prototype set
// (used by scene generation; `rng` supplies the sample's own draws).
MultimodalSample synth_sample(const SynthConfig& cfg, int identity,
                              std::size_t timesteps, Rng& rng);

// Single-modality track of arbitrary length with its own latent walk.
FeatureSequence synth_track(const SynthConfig& cfg, int identity,
                            std::size_t modality, std::size_t timesteps,
                            Rng& rng);

}  // namespace mmlstm
