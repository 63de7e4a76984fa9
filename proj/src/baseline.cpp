#include "mmlstm/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mmlstm {

LinearClassifier make_linear(std::size_t d, std::size_t n_classes, Rng& rng) {
  if (d == 0 || n_classes == 0) {
    throw config_error("make_linear: dimensions must be positive");
  }
  LinearClassifier c;
  c.w = random_uniform_mat(n_classes, d, 1.0 / std::sqrt(double(d)), rng);
  c.b = Vec(n_classes);
  return c;
}

Vec frame_probs(const LinearClassifier& c, std::span<const double> frame) {
  if (frame.size() != c.dim()) {
    throw shape_error("frame_probs: classifier is " + shape_str(c.w) +
                      " but frame has length " + std::to_string(frame.size()));
  }
  Vec z(c.n_classes());
  for (std::size_t k = 0; k < c.n_classes(); ++k) {
    const double* wr = c.w.data.data() + k * c.w.cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < frame.size(); ++j) acc += wr[j] * frame[j];
    z[k] = acc + c.b[k];
  }
  return softmax(z);
}

std::size_t frame_average_baseline(const LinearClassifier& c, const Mat& frames) {
  if (frames.rows == 0) throw shape_error("frame_average_baseline: empty sequence");
  Vec mean(c.n_classes());
  for (std::size_t t = 0; t < frames.rows; ++t) {
    const Vec p = frame_probs(c, frames.row(t));
    for (std::size_t k = 0; k < mean.len(); ++k) mean[k] += p[k];
  }
  for (std::size_t k = 0; k < mean.len(); ++k) {
    mean[k] /= static_cast<double>(frames.rows);
  }
  return argmax(mean);
}

double train_linear(LinearClassifier& c, const SamplePool& pool,
                    std::size_t modality, const LinearTrainConfig& cfg) {
  if (pool.samples.empty()) throw data_error("train_linear: empty pool");
  if (modality >= pool.modalities()) {
    throw config_error("train_linear: pool has no modality " +
                       std::to_string(modality));
  }
  // flatten to (sample, t) frame references
  struct FrameRef {
    std::size_t sample;
    std::size_t t;
  };
  std::vector<FrameRef> frames;
  for (std::size_t i = 0; i < pool.samples.size(); ++i) {
    const auto& seq = pool.samples[i].seqs[modality];
    for (std::size_t t = 0; t < seq.T(); ++t) frames.push_back({i, t});
  }
  Rng rng(cfg.seed);
  const std::size_t K = c.n_classes();
  Mat gw(K, c.dim());
  Vec gb(K);
  double epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates shuffle
    for (std::size_t i = frames.size(); i > 1; --i) {
      std::swap(frames[i - 1], frames[rng.below(i)]);
    }
    epoch_loss = 0.0;
    std::size_t done = 0;
    while (done < frames.size()) {
      const std::size_t batch = std::min(cfg.batch_size, frames.size() - done);
      std::fill(gw.data.begin(), gw.data.end(), 0.0);
      std::fill(gb.data.begin(), gb.data.end(), 0.0);
      for (std::size_t b = 0; b < batch; ++b) {
        const FrameRef fr = frames[done + b];
        const auto& smp = pool.samples[fr.sample];
        const auto row = smp.seqs[modality].frames.row(fr.t);
        const Vec p = frame_probs(c, row);
        const auto label = static_cast<std::size_t>(smp.label);
        epoch_loss += cross_entropy(p, label);
        for (std::size_t k = 0; k < K; ++k) {
          const double dz = p[k] - (k == label ? 1.0 : 0.0);
          gb[k] += dz;
          double* gwr = gw.data.data() + k * gw.cols;
          for (std::size_t j = 0; j < row.size(); ++j) gwr[j] += dz * row[j];
        }
      }
      const double step = cfg.learning_rate / static_cast<double>(batch);
      for (std::size_t idx = 0; idx < gw.data.size(); ++idx) {
        c.w.data[idx] -= step * gw.data[idx];
      }
      for (std::size_t k = 0; k < K; ++k) c.b[k] -= step * gb[k];
      done += batch;
    }
    epoch_loss /= static_cast<double>(frames.size());
  }
  return epoch_loss;
}

double frame_accuracy(const LinearClassifier& c, const SamplePool& pool,
                      std::size_t modality) {
  std::size_t correct = 0, total = 0;
  for (const auto& smp : pool.samples) {
    const auto& seq = smp.seqs[modality];
    for (std::size_t t = 0; t < seq.T(); ++t) {
      const Vec p = frame_probs(c, seq.frames.row(t));
      correct += argmax(p) == static_cast<std::size_t>(smp.label);
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / total;
}

double sequence_accuracy(const LinearClassifier& c, const SamplePool& pool,
                         std::size_t modality) {
  std::size_t correct = 0;
  for (const auto& smp : pool.samples) {
    correct += frame_average_baseline(c, smp.seqs[modality].frames) ==
               static_cast<std::size_t>(smp.label);
  }
  return pool.samples.empty()
             ? 0.0
             : static_cast<double>(correct) / pool.samples.size();
}

}  // namespace mmlstm
