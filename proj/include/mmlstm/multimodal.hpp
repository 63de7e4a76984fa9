#pragma once

#include <span>
#include <string>
#include <vector>

#include "mmlstm/lstm.hpp"

namespace mmlstm {

// Cross-modal weight sharing schemes:
//   Full — W_hg/W_hi/W_hf/W_ho and W_y shared by every modality
//   Half — W_h* shared, one W_y per modality
//   None — independent cells, nothing shared
enum class SharingVariant { Full, Half, None };

const char* to_string(SharingVariant v);
SharingVariant parse_variant(const std::string& s);

// Per-modality input transform; never shared across modalities.
struct ModalityInputWeights {
  Mat w_xg, w_xi, w_xf, w_xo;  // d_h x d_x^s
  Vec b_g, b_i, b_f, b_o;      // d_h
};

struct RecurrentWeights {
  Mat w_hg, w_hi, w_hf, w_ho;  // d_h x d_h
};

struct MultimodalParams {
  SharingVariant variant = SharingVariant::Full;
  std::size_t n = 0;  // modality count
  std::size_t d_h = 0;
  std::size_t n_classes = 0;
  std::vector<std::size_t> d_x;  // per modality

  std::vector<ModalityInputWeights> input;  // n entries
  std::vector<RecurrentWeights> hidden;     // 1 entry (Full/Half) or n (None)
  std::vector<Mat> w_y;                     // 1 entry (Full) or n (Half/None)

  std::size_t hidden_copies() const { return hidden.size(); }
  std::size_t output_copies() const { return w_y.size(); }

  // Variant-resolved views for modality s; under Full/Half every s resolves
  // to the same storage.
  RecurrentWeights& hidden_for(std::size_t s);
  const RecurrentWeights& hidden_for(std::size_t s) const;
  Mat& w_y_for(std::size_t s);
  const Mat& w_y_for(std::size_t s) const;
};

MultimodalParams build_multimodal(SharingVariant variant,
                                  std::span<const std::size_t> d_x,
                                  std::size_t d_h, std::size_t n_classes,
                                  Rng& rng);

std::size_t param_count(const MultimodalParams& p);
std::vector<TensorRef> tensor_refs(MultimodalParams& p);
std::vector<TensorView> tensor_views(const MultimodalParams& p);

struct MultimodalTrace {
  std::vector<Mat> inputs;                   // per modality, T x d_x^s
  std::vector<std::vector<CellStep>> steps;  // [modality][t]
  std::vector<std::vector<Vec>> y;           // [modality][t]
  std::size_t T() const { return steps.empty() ? 0 : steps[0].size(); }
};

// Gates per the sharing scheme; each modality keeps its own memory line
// (C is never shared), coupling flows only through the shared weights.
MultimodalTrace mm_forward(const MultimodalParams& p,
                           std::span<const Mat* const> xs);

// One label stream supervises every modality's output: gradient of
// sum_s sum_t loss_weights[t] * CE(y_t^s, labels[t]). Shared tensors
// accumulate contributions from all modalities.
GradSet mm_backward(const MultimodalParams& p, const MultimodalTrace& trace,
                    std::span<const int> labels,
                    std::span<const double> loss_weights);

double mm_loss(const MultimodalTrace& trace, std::span<const int> labels,
               std::span<const double> loss_weights);

// proposals[s][t] = argmax y_t^s, ties toward the smallest index
std::vector<std::vector<int>> mm_predict(const MultimodalParams& p,
                                         std::span<const Mat* const> xs);

}  // namespace mmlstm
