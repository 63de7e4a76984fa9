#include "mmlstm/synth.hpp"

#include <cmath>

namespace mmlstm {

namespace {

constexpr std::uint64_t kProtoTag = 0x70726f746fULL;   // "proto"
constexpr std::uint64_t kTrainTag = 0x747261696eULL;   // "train"
constexpr std::uint64_t kTestTag = 0x74657374ULL;      // "test"
constexpr double kLatentStepSigma = 0.31622776601683794;  // sqrt(0.1)

std::vector<std::vector<Vec>> draw_prototypes(const SynthConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, kProtoTag));
  std::vector<std::vector<Vec>> proto(cfg.n_classes);
  for (std::size_t k = 0; k < cfg.n_classes; ++k) {
    for (std::size_t s = 0; s < cfg.dims.size(); ++s) {
      Vec mu(cfg.dims[s]);
      for (std::size_t j = 0; j < mu.len(); ++j) mu[j] = rng.normal();
      proto[k].push_back(std::move(mu));
    }
  }
  return proto;
}

std::string modality_name(std::size_t s) {
  if (s == 0) return "face";
  if (s == 1) return "voice";
  return "m" + std::to_string(s);
}

MultimodalSample draw_sample(const SynthConfig& cfg,
                             const std::vector<std::vector<Vec>>& proto,
                             int identity, std::size_t T, Rng& rng) {
  MultimodalSample smp;
  smp.label = identity;
  smp.is_distractor = false;
  const std::size_t n = cfg.dims.size();
  // the latent walk is shared across the sample's modalities
  std::vector<double> z(T, 0.0);
  for (std::size_t t = 1; t < T; ++t) {
    z[t] = z[t - 1] + rng.normal(0.0, kLatentStepSigma);
  }
  for (std::size_t s = 0; s < n; ++s) {
    FeatureSequence seq;
    seq.modality = modality_name(s);
    seq.identity = identity;
    seq.frames = Mat(T, cfg.dims[s]);
    const Vec& mu = proto[static_cast<std::size_t>(identity)][s];
    for (std::size_t t = 0; t < T; ++t) {
      double* row = seq.frames.row(t).data();
      const double scale = 1.0 + cfg.latent_alpha * z[t];
      for (std::size_t j = 0; j < cfg.dims[s]; ++j) {
        row[j] = mu[j] * scale + rng.normal(0.0, cfg.noise_sigma);
      }
      if (rng.bernoulli(cfg.degrade_prob)) {
        for (std::size_t j = 0; j < cfg.dims[s]; ++j) row[j] = rng.normal();
      }
    }
    smp.seqs.push_back(std::move(seq));
  }
  return smp;
}

SamplePool draw_pool(const SynthConfig& cfg,
                     const std::vector<std::vector<Vec>>& proto,
                     std::size_t per_class, std::uint64_t stream_tag) {
  Rng rng(derive_seed(cfg.seed, stream_tag));
  SamplePool pool;
  pool.n_classes = cfg.n_classes;
  pool.samples.reserve(per_class * cfg.n_classes);
  for (std::size_t k = 0; k < cfg.n_classes; ++k) {
    for (std::size_t i = 0; i < per_class; ++i) {
      pool.samples.push_back(
          draw_sample(cfg, proto, static_cast<int>(k), cfg.timesteps, rng));
    }
  }
  pool.rebuild_index();
  return pool;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_classes < 2) throw config_error("synth: need at least 2 classes");
  if (dims.empty()) throw config_error("synth: need at least 1 modality");
  for (std::size_t d : dims) {
    if (d == 0) throw config_error("synth: zero feature dimension");
  }
  if (timesteps == 0) throw config_error("synth: need at least 1 timestep");
  if (noise_sigma < 0.0) throw config_error("synth: negative noise sigma");
  if (degrade_prob < 0.0 || degrade_prob > 1.0) {
    throw config_error("synth: degrade probability outside [0,1]");
  }
  if (train_per_class == 0 || test_per_class == 0) {
    throw config_error("synth: need at least 1 sample per class");
  }
}

std::pair<SamplePool, SamplePool> synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto proto = draw_prototypes(cfg);
  SamplePool train = draw_pool(cfg, proto, cfg.train_per_class, kTrainTag);
  SamplePool test = draw_pool(cfg, proto, cfg.test_per_class, kTestTag);
  return {std::move(train), std::move(test)};
}

MultimodalSample synth_sample(const SynthConfig& cfg, int identity,
                              std::size_t timesteps, Rng& rng) {
  cfg.validate();
  const auto proto = draw_prototypes(cfg);
  return draw_sample(cfg, proto, identity, timesteps, rng);
}

FeatureSequence synth_track(const SynthConfig& cfg, int identity,
                            std::size_t modality, std::size_t timesteps,
                            Rng& rng) {
  cfg.validate();
  if (modality >= cfg.dims.size()) {
    throw config_error("synth_track: no modality " + std::to_string(modality));
  }
  const auto proto = draw_prototypes(cfg);
  MultimodalSample smp = draw_sample(cfg, proto, identity, timesteps, rng);
  return std::move(smp.seqs[modality]);
}

}  // namespace mmlstm
