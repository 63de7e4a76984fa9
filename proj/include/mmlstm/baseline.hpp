#pragma once

#include "mmlstm/dataset.hpp"
#include "mmlstm/gradients.hpp"
#include "mmlstm/rng.hpp"

namespace mmlstm {

// Per-frame linear softmax classifier; sequence decisions average the
// per-frame probabilities.
struct LinearClassifier {
  Mat w;  // K x d
  Vec b;  // K
  std::size_t dim() const { return w.cols; }
  std::size_t n_classes() const { return w.rows; }
};

LinearClassifier make_linear(std::size_t d, std::size_t n_classes, Rng& rng);

Vec frame_probs(const LinearClassifier& c, std::span<const double> frame);

// argmax of the mean over t of softmax(W x_t + b), ties to smallest index
std::size_t frame_average_baseline(const LinearClassifier& c, const Mat& frames);

struct LinearTrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 256;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;
};

// Minibatch softmax regression over individual frames, each labeled with
// its sequence identity. Returns the final epoch's mean loss.
double train_linear(LinearClassifier& c, const SamplePool& pool,
                    std::size_t modality, const LinearTrainConfig& cfg);

// Fraction of individual frames classified correctly (calibration metric).
double frame_accuracy(const LinearClassifier& c, const SamplePool& pool,
                      std::size_t modality);

// Fraction of sequences classified correctly by probability averaging.
double sequence_accuracy(const LinearClassifier& c, const SamplePool& pool,
                         std::size_t modality);

}  // namespace mmlstm
