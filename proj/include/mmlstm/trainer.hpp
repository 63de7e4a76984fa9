#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mmlstm/dataset.hpp"
#include "mmlstm/multimodal.hpp"

namespace mmlstm {

enum class OptimizerKind { SgdMomentum, Adam };
const char* to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& s);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double momentum = 0.9;  // sgd-momentum
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_threshold = 5.0;  // global L2 norm
  std::uint64_t seed = 1;
  std::size_t threads = 0;         // 0 = hardware concurrency
  std::size_t single_modality = 0; // which stream a single-modal model trains on

  void validate() const;
  std::string summary() const;  // echoed into checkpoint manifests
};

// If the global L2 norm exceeds the threshold, scale every entry by
// threshold/norm.
void clip_global(GradSet& g, double threshold);

struct OptState {
  std::size_t step_count = 0;
  std::vector<std::vector<double>> m;  // first moment / velocity
  std::vector<std::vector<double>> v;  // second moment (adam)
};

// One optimizer step; shared tensors appear once in `refs`, so they receive
// exactly one update.
void apply_step(std::vector<TensorRef>& refs, const GradSet& g,
                const TrainConfig& cfg, OptState& state);

// A trainable model: either the single-modal or the multimodal cell.
struct Model {
  std::variant<LstmParams, MultimodalParams> cell;
  std::uint64_t init_seed = 0;
  std::string config_echo;  // last training config, stored in checkpoints

  bool is_multimodal() const {
    return std::holds_alternative<MultimodalParams>(cell);
  }
  LstmParams& single() { return std::get<LstmParams>(cell); }
  const LstmParams& single() const { return std::get<LstmParams>(cell); }
  MultimodalParams& multi() { return std::get<MultimodalParams>(cell); }
  const MultimodalParams& multi() const {
    return std::get<MultimodalParams>(cell);
  }
  std::size_t n_classes() const;
  std::vector<TensorRef> refs();
  std::vector<TensorView> views() const;
  std::size_t param_count() const;
};

Model make_single_model(std::size_t d_x, std::size_t d_h, std::size_t n_classes,
                        std::uint64_t seed);
Model make_multimodal_model(SharingVariant variant,
                            std::span<const std::size_t> d_x, std::size_t d_h,
                            std::size_t n_classes, std::uint64_t seed);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double heldout_accuracy = 0.0;
};
using EpochCallback = std::function<void(const EpochRecord&)>;

// Minibatch training: identity-balanced shuffled batches, runtime pairing
// for multimodal models, mean CE over modalities and timesteps, global
// clipping, one optimizer step per batch. Distractors are never used.
// Writes `epoch= loss= acc=` lines to metrics_path when non-empty.
std::vector<EpochRecord> train(Model& model, const SamplePool& train_pool,
                               const SamplePool* heldout,
                               const TrainConfig& cfg,
                               const std::string& metrics_path = {},
                               const EpochCallback& on_epoch = {});

// Held-out accuracy of the model: last-step argmax for single-modal,
// all-stream probability averaging for multimodal (no rejection).
double pool_accuracy(Model& model, const SamplePool& pool,
                     std::size_t single_modality = 0);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central-difference probe of every parameter entry against the analytic
// gradient. Entries above `subsample_above` parameters are spot-checked on
// a deterministic subsample. `corrupt_largest_by` perturbs the largest
// analytic entry by that relative amount first (self-test hook).
GradCheckResult grad_check(Model& model, const MultimodalSample& sample,
                           std::span<const int> labels,
                           std::span<const double> loss_weights,
                           double eps = 1e-5, double corrupt_largest_by = 0.0,
                           std::size_t subsample_above = 10000);

// Random small-config sweep used by the gradcheck command and the
// acceptance gate. kind: "single", "full", "half" or "none". Multimodal
// kinds use n = 2 except the last config, which uses n = 3.
GradCheckResult grad_check_random(const std::string& kind,
                                  std::size_t n_configs, std::uint64_t seed,
                                  double eps = 1e-5,
                                  double corrupt_largest_by = 0.0);

}  // namespace mmlstm
