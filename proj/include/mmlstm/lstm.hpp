#pragma once

#include <span>
#include <vector>

#include "mmlstm/gradients.hpp"
#include "mmlstm/mat.hpp"
#include "mmlstm/rng.hpp"

namespace mmlstm {

// Weight init recorded in checkpoint manifests.
inline constexpr const char* kInitDescription =
    "uniform(-1/sqrt(dh),1/sqrt(dh)); biases 0; forget bias +1";

struct LstmParams {
  std::size_t d_x = 0;
  std::size_t d_h = 0;
  std::size_t n_classes = 0;

  Mat w_xg, w_xi, w_xf, w_xo;  // d_h x d_x
  Mat w_hg, w_hi, w_hf, w_ho;  // d_h x d_h
  Vec b_g, b_i, b_f, b_o;      // d_h
  Mat w_y;                     // n_classes x d_h
};

LstmParams make_lstm(std::size_t d_x, std::size_t d_h, std::size_t n_classes,
                     Rng& rng);

std::size_t param_count(const LstmParams& p);
std::vector<TensorRef> tensor_refs(LstmParams& p);
std::vector<TensorView> tensor_views(const LstmParams& p);

// Per-timestep activations kept for BPTT.
struct CellStep {
  Vec g, i, f, o, c, h;
};

// Non-owning bundle so the single-modal and multimodal cells share one step
// kernel (and therefore identical arithmetic).
struct CellWeights {
  const Mat *w_xg, *w_xi, *w_xf, *w_xo;
  const Mat *w_hg, *w_hi, *w_hf, *w_ho;
  const Vec *b_g, *b_i, *b_f, *b_o;
};
CellWeights weights_of(const LstmParams& p);

CellStep cell_step(const CellWeights& w, std::span<const double> x,
                   const Vec& h_prev, const Vec& c_prev);
CellStep cell_step(const LstmParams& p, const Vec& x, const Vec& h_prev,
                   const Vec& c_prev);

struct ForwardTrace {
  Mat inputs;                   // T x d_x
  std::vector<CellStep> steps;  // T entries
  std::vector<Vec> y;           // T probability vectors
  std::size_t T() const { return steps.size(); }
};

// h_0 = C_0 = 0; y_t = softmax(W_y h_t) at every step.
ForwardTrace forward(const LstmParams& p, const Mat& inputs);

// Gradient of sum_t loss_weights[t] * CE(y_t, labels[t]); slots match
// tensor_refs(p).
GradSet backward(const LstmParams& p, const ForwardTrace& trace,
                 std::span<const int> labels,
                 std::span<const double> loss_weights);

double sequence_loss(const std::vector<Vec>& probs, std::span<const int> labels,
                     std::span<const double> loss_weights);

// argmax of y_T, ties toward the smallest class index
std::size_t predict_last(const LstmParams& p, const Mat& inputs);

// --- internal kernels shared with the multimodal cell -----------------------

// Mutable accumulation targets for one modality's BPTT pass. Shared tensors
// point several passes at the same storage.
struct CellGradRefs {
  double *w_xg, *w_xi, *w_xf, *w_xo;
  double *w_hg, *w_hi, *w_hf, *w_ho;
  double *b_g, *b_i, *b_f, *b_o;
  double* w_y;
};

// Runs one modality's full backward pass, accumulating (+=) into `out`.
void cell_backward_pass(const CellWeights& w, const Mat& w_y, const Mat& inputs,
                        const std::vector<CellStep>& steps,
                        const std::vector<Vec>& probs,
                        std::span<const int> labels,
                        std::span<const double> loss_weights, CellGradRefs out);

}  // namespace mmlstm
