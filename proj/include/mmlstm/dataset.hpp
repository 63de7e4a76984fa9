#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mmlstm/mat.hpp"
#include "mmlstm/rng.hpp"

namespace mmlstm {

struct FeatureSequence {
  std::string modality;  // id token, no whitespace
  int identity = -1;
  Mat frames;  // T x d

  std::size_t T() const { return frames.rows; }
  std::size_t dim() const { return frames.cols; }
};

struct MultimodalSample {
  std::vector<FeatureSequence> seqs;  // equal T across modalities
  int label = -1;
  bool is_distractor = false;
};

// Splits source frame j' = floor(j*T/T_target); order-preserving, every
// source frame used, repeat counts differ by at most one.
FeatureSequence duplicate_evenly(const FeatureSequence& seq,
                                 std::size_t T_target);

// A pool of aligned genuine samples plus per-class index.
struct SamplePool {
  std::vector<MultimodalSample> samples;
  std::size_t n_classes = 0;
  std::vector<std::vector<std::size_t>> by_class;

  std::size_t modalities() const {
    return samples.empty() ? 0 : samples[0].seqs.size();
  }
  std::vector<std::size_t> dims() const;
  void rebuild_index();
  void validate() const;  // equal T within samples, finite frames, labels in range
};

// One modality of a pool, viewed as the pool of that modality's sequences.
struct ModalityView {
  const SamplePool* pool = nullptr;
  std::size_t modality = 0;

  const FeatureSequence& seq(std::size_t sample_index) const {
    return pool->samples[sample_index].seqs[modality];
  }
  std::span<const std::size_t> of_class(int identity) const;
};

// Uniform same-identity pairing; unequal lengths are resampled up to the
// longer sequence.
MultimodalSample pair_runtime(const ModalityView& a, const ModalityView& b,
                              int identity, Rng& rng);

// Uniform over cross-identity pairs; label carries the voice (second
// modality) identity.
MultimodalSample make_distractor(const ModalityView& a, const ModalityView& b,
                                 Rng& rng);

// Balanced genuine/distractor evaluation set. Genuine entries are aligned
// pool samples (class-balanced subsample); distractors are fresh ill-pairs.
std::vector<MultimodalSample> build_balanced_pairs(const SamplePool& pool,
                                                   std::size_t genuine,
                                                   std::size_t distractors,
                                                   Rng& rng);

std::vector<const Mat*> frame_ptrs(const MultimodalSample& sample);

// --- MMSEQ v1 file format ----------------------------------------------
// Text header `MMSEQ v1 modality=<id> T=<int> d=<int> identity=<int>\n`
// followed by T*d little-endian real64 values, row-major.
void save_features(const FeatureSequence& seq, const std::string& path);
FeatureSequence load_features(const std::string& path);

// Pool manifest: `MMPOOL v1 n=<modalities> count=<samples>` then one line
// per sample: `<label> <distractor 0|1> <file per modality>...`, paths
// relative to the manifest. Sequence files live in `<stem>_seqs/`.
void save_pool(const SamplePool& pool, const std::string& manifest_path);
SamplePool load_pool(const std::string& manifest_path);

}  // namespace mmlstm
