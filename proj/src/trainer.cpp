#include "mmlstm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

namespace mmlstm {

const char* to_string(OptimizerKind k) {
  return k == OptimizerKind::Adam ? "adam" : "sgd-momentum";
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "sgd-momentum" || s == "sgd") return OptimizerKind::SgdMomentum;
  throw config_error("unknown optimizer '" + s + "'");
}

void TrainConfig::validate() const {
  if (epochs == 0) throw config_error("train: epochs must be positive");
  if (batch_size == 0) throw config_error("train: batch size must be positive");
  if (learning_rate < 0.0) throw config_error("train: negative learning rate");
  if (clip_threshold <= 0.0) {
    throw config_error("train: clip threshold must be positive");
  }
}

std::string TrainConfig::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "optimizer=%s lr=%g epochs=%zu batch=%zu clip=%g seed=%llu",
                to_string(optimizer), learning_rate, epochs, batch_size,
                clip_threshold, static_cast<unsigned long long>(seed));
  return buf;
}

void clip_global(GradSet& g, double threshold) {
  if (threshold <= 0.0) throw config_error("clip_global: threshold must be > 0");
  const double norm = g.l2_norm();
  if (norm > threshold) g.scale(threshold / norm);
}

void apply_step(std::vector<TensorRef>& refs, const GradSet& g,
                const TrainConfig& cfg, OptState& state) {
  if (g.slots.size() != refs.size()) {
    throw shape_error("apply_step: grad has " + std::to_string(g.slots.size()) +
                      " slots, params have " + std::to_string(refs.size()));
  }
  if (state.m.empty()) {
    state.m.resize(refs.size());
    state.v.resize(refs.size());
    for (std::size_t i = 0; i < refs.size(); ++i) {
      state.m[i].assign(refs[i].size(), 0.0);
      state.v[i].assign(refs[i].size(), 0.0);
    }
  }
  ++state.step_count;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& slot = g.slots[i];
    if (slot.name != refs[i].name || slot.g.size() != refs[i].size()) {
      throw shape_error("apply_step: slot '" + slot.name +
                        "' does not match parameter '" + refs[i].name + "'");
    }
    double* p = refs[i].data;
    auto& m = state.m[i];
    if (cfg.optimizer == OptimizerKind::SgdMomentum) {
      for (std::size_t j = 0; j < slot.g.size(); ++j) {
        m[j] = cfg.momentum * m[j] + slot.g[j];
        p[j] -= cfg.learning_rate * m[j];
      }
    } else {
      auto& v = state.v[i];
      const double bc1 =
          1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count));
      const double bc2 =
          1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count));
      for (std::size_t j = 0; j < slot.g.size(); ++j) {
        m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * slot.g[j];
        v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * slot.g[j] * slot.g[j];
        const double mhat = m[j] / bc1;
        const double vhat = v[j] / bc2;
        p[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
      }
    }
  }
}

std::size_t Model::n_classes() const {
  return is_multimodal() ? multi().n_classes : single().n_classes;
}

std::vector<TensorRef> Model::refs() {
  return is_multimodal() ? tensor_refs(multi()) : tensor_refs(single());
}

std::vector<TensorView> Model::views() const {
  return is_multimodal() ? tensor_views(multi()) : tensor_views(single());
}

std::size_t Model::param_count() const {
  std::size_t n = 0;
  for (const auto& v : views()) n += v.size();
  return n;
}

Model make_single_model(std::size_t d_x, std::size_t d_h, std::size_t n_classes,
                        std::uint64_t seed) {
  Rng rng(seed);
  Model m;
  m.cell = make_lstm(d_x, d_h, n_classes, rng);
  m.init_seed = seed;
  return m;
}

Model make_multimodal_model(SharingVariant variant,
                            std::span<const std::size_t> d_x, std::size_t d_h,
                            std::size_t n_classes, std::uint64_t seed) {
  Rng rng(seed);
  Model m;
  m.cell = build_multimodal(variant, d_x, d_h, n_classes, rng);
  m.init_seed = seed;
  return m;
}

namespace {

// (loss, grad) of one multimodal sample under shared per-timestep labels
double sample_loss_grad(MultimodalParams& p, const MultimodalSample& smp,
                        GradSet* grad_out) {
  const auto xs = frame_ptrs(smp);
  const MultimodalTrace trace = mm_forward(p, xs);
  const std::size_t T = trace.T();
  const std::vector<int> labels(T, smp.label);
  const std::vector<double> weights(
      T, 1.0 / static_cast<double>(p.n * T));
  const double loss = mm_loss(trace, labels, weights);
  if (grad_out) *grad_out = mm_backward(p, trace, labels, weights);
  return loss;
}

double sample_loss_grad_single(LstmParams& p, const FeatureSequence& seq,
                               int label, GradSet* grad_out) {
  const ForwardTrace trace = forward(p, seq.frames);
  const std::size_t T = trace.T();
  const std::vector<int> labels(T, label);
  const std::vector<double> weights(T, 1.0 / static_cast<double>(T));
  const double loss = sequence_loss(trace.y, labels, weights);
  if (grad_out) *grad_out = backward(p, trace, labels, weights);
  return loss;
}

// Deterministic chunked parallelism: the batch is split into a fixed number
// of chunks (independent of the thread count), each chunk accumulates its
// own gradient serially, and chunks are reduced in index order. The result
// is bit-identical for any thread count.
constexpr std::size_t kGradChunks = 8;

struct ChunkResult {
  GradSet grad;
  double loss = 0.0;
};

template <typename WorkFn>
void run_chunks(std::size_t n_items, std::size_t threads, WorkFn&& work) {
  const std::size_t chunks = std::min(n_items, kGradChunks);
  if (chunks == 0) return;
  const std::size_t use_threads = std::max<std::size_t>(
      1, std::min({threads == 0 ? std::size_t{1} : threads, chunks}));
  auto chunk_bounds = [&](std::size_t c) {
    const std::size_t lo = c * n_items / chunks;
    const std::size_t hi = (c + 1) * n_items / chunks;
    return std::pair{lo, hi};
  };
  if (use_threads == 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      const auto [lo, hi] = chunk_bounds(c);
      work(c, lo, hi);
    }
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(use_threads);
  for (std::size_t w = 0; w < use_threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < chunks; c += use_threads) {
        const auto [lo, hi] = chunk_bounds(c);
        work(c, lo, hi);
      }
    });
  }
  for (auto& t : pool) t.join();
}

std::size_t resolve_threads(std::size_t cfg_threads) {
  if (cfg_threads != 0) return cfg_threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : std::min<unsigned>(hw, kGradChunks);
}

}  // namespace

double pool_accuracy(Model& model, const SamplePool& pool,
                     std::size_t single_modality) {
  if (pool.samples.empty()) return 0.0;
  std::size_t correct = 0;
  if (model.is_multimodal()) {
    MultimodalParams& p = model.multi();
    for (const auto& smp : pool.samples) {
      const MultimodalTrace trace = mm_forward(p, frame_ptrs(smp));
      Vec mean(p.n_classes);
      for (const auto& stream : trace.y) {
        for (const Vec& probs : stream) {
          for (std::size_t k = 0; k < mean.len(); ++k) mean[k] += probs[k];
        }
      }
      correct += argmax(mean) == static_cast<std::size_t>(smp.label);
    }
  } else {
    LstmParams& p = model.single();
    for (const auto& smp : pool.samples) {
      correct += predict_last(p, smp.seqs[single_modality].frames) ==
                 static_cast<std::size_t>(smp.label);
    }
  }
  return static_cast<double>(correct) / pool.samples.size();
}

std::vector<EpochRecord> train(Model& model, const SamplePool& train_pool,
                               const SamplePool* heldout,
                               const TrainConfig& cfg,
                               const std::string& metrics_path,
                               const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_pool.samples.empty()) throw data_error("train: empty pool");
  train_pool.validate();

  // reject dimension mismatches before the first step
  const auto dims = train_pool.dims();
  if (model.is_multimodal()) {
    const MultimodalParams& p = model.multi();
    if (p.n != dims.size()) {
      throw shape_error("train: model has " + std::to_string(p.n) +
                        " modalities, pool has " + std::to_string(dims.size()));
    }
    for (std::size_t s = 0; s < p.n; ++s) {
      if (p.d_x[s] != dims[s]) {
        throw shape_error("train: modality " + std::to_string(s) +
                          " dim mismatch: model " + std::to_string(p.d_x[s]) +
                          ", pool " + std::to_string(dims[s]));
      }
    }
    if (p.n_classes < train_pool.n_classes) {
      throw shape_error("train: model has " + std::to_string(p.n_classes) +
                        " classes, pool needs " +
                        std::to_string(train_pool.n_classes));
    }
  } else {
    const LstmParams& p = model.single();
    if (cfg.single_modality >= dims.size()) {
      throw shape_error("train: pool has no modality " +
                        std::to_string(cfg.single_modality));
    }
    if (p.d_x != dims[cfg.single_modality]) {
      throw shape_error("train: modality dim mismatch: model " +
                        std::to_string(p.d_x) + ", pool " +
                        std::to_string(dims[cfg.single_modality]));
    }
    if (p.n_classes < train_pool.n_classes) {
      throw shape_error("train: model has " + std::to_string(p.n_classes) +
                        " classes, pool needs " +
                        std::to_string(train_pool.n_classes));
    }
  }

  std::ofstream metrics;
  if (!metrics_path.empty()) {
    metrics.open(metrics_path, std::ios::trunc);
    if (!metrics) throw data_error("cannot write " + metrics_path);
  }

  Rng rng_schedule(derive_seed(cfg.seed, 0x736368ULL));  // "sch"
  Rng rng_pairing(derive_seed(cfg.seed, 0x706172ULL));   // "par"
  const std::size_t threads = resolve_threads(cfg.threads);
  const std::size_t n_samples = train_pool.samples.size();
  std::vector<TensorRef> refs = model.refs();
  OptState opt_state;
  std::vector<EpochRecord> history;
  const ModalityView faces{&train_pool, 0};
  const ModalityView voices{&train_pool,
                            train_pool.modalities() > 1 ? std::size_t{1} : 0};

  // balanced order: per-class shuffles interleaved round-robin
  std::vector<std::size_t> order(n_samples);
  auto reshuffle = [&] {
    std::vector<std::vector<std::size_t>> per_class = train_pool.by_class;
    for (auto& list : per_class) {
      for (std::size_t i = list.size(); i > 1; --i) {
        std::swap(list[i - 1], list[rng_schedule.below(i)]);
      }
    }
    std::size_t filled = 0, cls = 0;
    std::vector<std::size_t> cursor(per_class.size(), 0);
    while (filled < n_samples) {
      const auto k = cls % per_class.size();
      if (cursor[k] < per_class[k].size()) order[filled++] = per_class[k][cursor[k]++];
      ++cls;
    }
  };

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    reshuffle();
    double epoch_loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < n_samples; start += cfg.batch_size) {
      const std::size_t batch = std::min(cfg.batch_size, n_samples - start);

      // pairing draws happen serially so threading cannot affect the stream
      std::vector<MultimodalSample> paired;
      if (model.is_multimodal()) {
        paired.reserve(batch);
        for (std::size_t b = 0; b < batch; ++b) {
          const int identity = train_pool.samples[order[start + b]].label;
          paired.push_back(pair_runtime(faces, voices, identity, rng_pairing));
        }
      }

      std::vector<ChunkResult> results(std::min(batch, kGradChunks));
      run_chunks(batch, threads, [&](std::size_t c, std::size_t lo, std::size_t hi) {
        GradSet local = GradSet::zeros_like(refs);
        for (std::size_t b = lo; b < hi; ++b) {
          GradSet g;
          double loss;
          if (model.is_multimodal()) {
            loss = sample_loss_grad(model.multi(), paired[b], &g);
          } else {
            const auto& smp = train_pool.samples[order[start + b]];
            loss = sample_loss_grad_single(
                model.single(), smp.seqs[cfg.single_modality], smp.label, &g);
          }
          results[c].loss += loss;
          local.add(g);
        }
        results[c].grad = std::move(local);
      });

      GradSet total = std::move(results[0].grad);
      double batch_loss = results[0].loss;
      for (std::size_t c = 1; c < results.size(); ++c) {
        total.add(results[c].grad);
        batch_loss += results[c].loss;
      }
      total.scale(1.0 / static_cast<double>(batch));
      clip_global(total, cfg.clip_threshold);
      apply_step(refs, total, cfg, opt_state);

      if (!std::isfinite(batch_loss)) {
        throw numeric_error("train: non-finite loss at epoch " +
                            std::to_string(epoch));
      }
      epoch_loss_sum += batch_loss;
      seen += batch;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = epoch_loss_sum / static_cast<double>(seen);
    rec.heldout_accuracy =
        heldout ? pool_accuracy(model, *heldout, cfg.single_modality) : 0.0;
    history.push_back(rec);
    if (metrics.is_open()) {
      char line[128];
      std::snprintf(line, sizeof line, "epoch=%zu loss=%.17g acc=%.6f\n",
                    rec.epoch, rec.loss, rec.heldout_accuracy);
      metrics << line;
    }
    if (on_epoch) on_epoch(rec);
  }
  model.config_echo = cfg.summary();
  return history;
}

// --- gradient checking -------------------------------------------------------

namespace {

double model_loss(Model& model, const MultimodalSample& sample,
                  std::span<const int> labels,
                  std::span<const double> loss_weights,
                  std::size_t single_modality) {
  if (model.is_multimodal()) {
    const MultimodalTrace trace = mm_forward(model.multi(), frame_ptrs(sample));
    return mm_loss(trace, labels, loss_weights);
  }
  const ForwardTrace trace =
      forward(model.single(), sample.seqs[single_modality].frames);
  return sequence_loss(trace.y, labels, loss_weights);
}

GradSet model_grad(Model& model, const MultimodalSample& sample,
                   std::span<const int> labels,
                   std::span<const double> loss_weights,
                   std::size_t single_modality) {
  if (model.is_multimodal()) {
    const MultimodalTrace trace = mm_forward(model.multi(), frame_ptrs(sample));
    return mm_backward(model.multi(), trace, labels, loss_weights);
  }
  const ForwardTrace trace =
      forward(model.single(), sample.seqs[single_modality].frames);
  return backward(model.single(), trace, labels, loss_weights);
}

// |a-n| relative to the pair's scale, floored so near-zero pairs are judged
// on absolute error
double rel_error(double analytic, double numeric) {
  const double denom =
      std::max(1e-2, std::abs(analytic) + std::abs(numeric));
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

GradCheckResult grad_check(Model& model, const MultimodalSample& sample,
                           std::span<const int> labels,
                           std::span<const double> loss_weights, double eps,
                           double corrupt_largest_by,
                           std::size_t subsample_above) {
  GradSet analytic = model_grad(model, sample, labels, loss_weights, 0);

  if (corrupt_largest_by != 0.0) {
    double* worst = nullptr;
    double best_mag = -1.0;
    for (auto& slot : analytic.slots) {
      for (auto& g : slot.g) {
        if (std::abs(g) > best_mag) {
          best_mag = std::abs(g);
          worst = &g;
        }
      }
    }
    if (worst) *worst *= 1.0 + corrupt_largest_by;
  }

  std::vector<TensorRef> refs = model.refs();
  const std::size_t total = model.param_count();
  // deterministic subsample stride when the model is large
  std::size_t stride = 1;
  if (total > subsample_above) stride = total / (subsample_above / 20);

  GradCheckResult result;
  std::size_t flat = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    double* data = refs[i].data;
    for (std::size_t j = 0; j < refs[i].size(); ++j, ++flat) {
      if (stride > 1 && flat % stride != 0) continue;
      const double saved = data[j];
      data[j] = saved + eps;
      const double up = model_loss(model, sample, labels, loss_weights, 0);
      data[j] = saved - eps;
      const double down = model_loss(model, sample, labels, loss_weights, 0);
      data[j] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = rel_error(analytic.slots[i].g[j], numeric);
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_tensor = refs[i].name;
        result.worst_index = j;
        result.analytic = analytic.slots[i].g[j];
        result.numeric = numeric;
      }
    }
  }
  return result;
}

GradCheckResult grad_check_random(const std::string& kind,
                                  std::size_t n_configs, std::uint64_t seed,
                                  double eps, double corrupt_largest_by) {
  Rng rng(seed);
  GradCheckResult worst;
  for (std::size_t cfg_idx = 0; cfg_idx < n_configs; ++cfg_idx) {
    const std::size_t d_h = 1 + rng.below(8);
    const std::size_t T = 1 + rng.below(5);
    const std::size_t K = 2 + rng.below(3);
    const std::size_t n =
        (kind != "single" && cfg_idx + 1 == n_configs && n_configs > 1) ? 3 : 2;

    std::vector<std::size_t> d_x(n);
    for (auto& d : d_x) d = 1 + rng.below(6);

    Model model;
    if (kind == "single") {
      model = make_single_model(d_x[0], d_h, K, rng.next_u64());
    } else {
      model = make_multimodal_model(parse_variant(kind),
                                    std::span<const std::size_t>(d_x), d_h, K,
                                    rng.next_u64());
    }

    MultimodalSample sample;
    sample.label = static_cast<int>(rng.below(K));
    const std::size_t modalities = kind == "single" ? 1 : n;
    for (std::size_t s = 0; s < modalities; ++s) {
      FeatureSequence seq;
      seq.identity = sample.label;
      seq.frames = Mat(T, d_x[s]);
      for (auto& v : seq.frames.data) v = rng.normal();
      sample.seqs.push_back(std::move(seq));
    }

    std::vector<int> labels(T);
    for (auto& l : labels) l = static_cast<int>(rng.below(K));
    std::vector<double> weights(T);
    for (auto& w : weights) w = rng.uniform(0.2, 1.0);

    const GradCheckResult r =
        grad_check(model, sample, labels, weights, eps, corrupt_largest_by);
    if (r.max_rel_error > worst.max_rel_error) worst = r;
  }
  return worst;
}

}  // namespace mmlstm
