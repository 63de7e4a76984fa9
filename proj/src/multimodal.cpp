#include "mmlstm/multimodal.hpp"

#include <cmath>

namespace mmlstm {

const char* to_string(SharingVariant v) {
  switch (v) {
    case SharingVariant::Full: return "full";
    case SharingVariant::Half: return "half";
    case SharingVariant::None: return "none";
  }
  return "?";
}

SharingVariant parse_variant(const std::string& s) {
  if (s == "full") return SharingVariant::Full;
  if (s == "half") return SharingVariant::Half;
  if (s == "none") return SharingVariant::None;
  throw config_error("unknown sharing variant '" + s +
                     "' (expected full, half or none)");
}

RecurrentWeights& MultimodalParams::hidden_for(std::size_t s) {
  return hidden[hidden.size() == 1 ? 0 : s];
}
const RecurrentWeights& MultimodalParams::hidden_for(std::size_t s) const {
  return hidden[hidden.size() == 1 ? 0 : s];
}
Mat& MultimodalParams::w_y_for(std::size_t s) {
  return w_y[w_y.size() == 1 ? 0 : s];
}
const Mat& MultimodalParams::w_y_for(std::size_t s) const {
  return w_y[w_y.size() == 1 ? 0 : s];
}

MultimodalParams build_multimodal(SharingVariant variant,
                                  std::span<const std::size_t> d_x,
                                  std::size_t d_h, std::size_t n_classes,
                                  Rng& rng) {
  if (d_x.empty()) throw config_error("build_multimodal: need n >= 1 modalities");
  if (d_h == 0 || n_classes == 0) {
    throw config_error("build_multimodal: dimensions must be positive");
  }
  for (std::size_t d : d_x) {
    if (d == 0) throw config_error("build_multimodal: zero input dimension");
  }

  const double r = 1.0 / std::sqrt(static_cast<double>(d_h));
  MultimodalParams p;
  p.variant = variant;
  p.n = d_x.size();
  p.d_h = d_h;
  p.n_classes = n_classes;
  p.d_x.assign(d_x.begin(), d_x.end());

  // Draw order matches make_lstm so Full with n = 1 reproduces the
  // single-modal cell from the same seed.
  const std::size_t output_copies = variant == SharingVariant::Full ? 1 : p.n;
  if (variant == SharingVariant::None) {
    for (std::size_t s = 0; s < p.n; ++s) {
      ModalityInputWeights in;
      in.w_xg = random_uniform_mat(d_h, d_x[s], r, rng);
      in.w_xi = random_uniform_mat(d_h, d_x[s], r, rng);
      in.w_xf = random_uniform_mat(d_h, d_x[s], r, rng);
      in.w_xo = random_uniform_mat(d_h, d_x[s], r, rng);
      in.b_g = Vec(d_h);
      in.b_i = Vec(d_h);
      in.b_f = Vec(d_h, 1.0);
      in.b_o = Vec(d_h);
      p.input.push_back(std::move(in));
      RecurrentWeights rec;
      rec.w_hg = random_uniform_mat(d_h, d_h, r, rng);
      rec.w_hi = random_uniform_mat(d_h, d_h, r, rng);
      rec.w_hf = random_uniform_mat(d_h, d_h, r, rng);
      rec.w_ho = random_uniform_mat(d_h, d_h, r, rng);
      p.hidden.push_back(std::move(rec));
      p.w_y.push_back(random_uniform_mat(n_classes, d_h, r, rng));
    }
  } else {
    for (std::size_t s = 0; s < p.n; ++s) {
      ModalityInputWeights in;
      in.w_xg = random_uniform_mat(d_h, d_x[s], r, rng);
      in.w_xi = random_uniform_mat(d_h, d_x[s], r, rng);
      in.w_xf = random_uniform_mat(d_h, d_x[s], r, rng);
      in.w_xo = random_uniform_mat(d_h, d_x[s], r, rng);
      in.b_g = Vec(d_h);
      in.b_i = Vec(d_h);
      in.b_f = Vec(d_h, 1.0);
      in.b_o = Vec(d_h);
      p.input.push_back(std::move(in));
    }
    RecurrentWeights rec;
    rec.w_hg = random_uniform_mat(d_h, d_h, r, rng);
    rec.w_hi = random_uniform_mat(d_h, d_h, r, rng);
    rec.w_hf = random_uniform_mat(d_h, d_h, r, rng);
    rec.w_ho = random_uniform_mat(d_h, d_h, r, rng);
    p.hidden.push_back(std::move(rec));
    for (std::size_t u = 0; u < output_copies; ++u) {
      p.w_y.push_back(random_uniform_mat(n_classes, d_h, r, rng));
    }
  }
  return p;
}

std::size_t param_count(const MultimodalParams& p) {
  std::size_t n = 0;
  for (const auto& v : tensor_views(p)) n += v.size();
  return n;
}

std::vector<TensorRef> tensor_refs(MultimodalParams& p) {
  std::vector<TensorRef> refs;
  auto mat = [&](std::string name, Mat& m) {
    refs.push_back({std::move(name), m.data.data(), m.rows, m.cols});
  };
  auto vec = [&](std::string name, Vec& v) {
    refs.push_back({std::move(name), v.data.data(), v.len(), 1});
  };
  for (std::size_t s = 0; s < p.n; ++s) {
    const std::string suf = "." + std::to_string(s);
    auto& in = p.input[s];
    mat("w_xg" + suf, in.w_xg);
    mat("w_xi" + suf, in.w_xi);
    mat("w_xf" + suf, in.w_xf);
    mat("w_xo" + suf, in.w_xo);
    vec("b_g" + suf, in.b_g);
    vec("b_i" + suf, in.b_i);
    vec("b_f" + suf, in.b_f);
    vec("b_o" + suf, in.b_o);
  }
  for (std::size_t r = 0; r < p.hidden.size(); ++r) {
    const std::string suf = "." + std::to_string(r);
    mat("w_hg" + suf, p.hidden[r].w_hg);
    mat("w_hi" + suf, p.hidden[r].w_hi);
    mat("w_hf" + suf, p.hidden[r].w_hf);
    mat("w_ho" + suf, p.hidden[r].w_ho);
  }
  for (std::size_t u = 0; u < p.w_y.size(); ++u) {
    mat("w_y." + std::to_string(u), p.w_y[u]);
  }
  return refs;
}

std::vector<TensorView> tensor_views(const MultimodalParams& p) {
  return as_views(tensor_refs(const_cast<MultimodalParams&>(p)));
}

namespace {

void check_inputs(const MultimodalParams& p, std::span<const Mat* const> xs) {
  if (xs.size() != p.n) {
    throw shape_error("multimodal: model has " + std::to_string(p.n) +
                      " modalities but got " + std::to_string(xs.size()) +
                      " input streams");
  }
  const std::size_t T = xs.empty() ? 0 : xs[0]->rows;
  if (T == 0) throw shape_error("multimodal: empty sequence (T = 0)");
  for (std::size_t s = 0; s < p.n; ++s) {
    if (xs[s]->rows != T) {
      throw shape_error("multimodal: modality " + std::to_string(s) + " has T = " +
                        std::to_string(xs[s]->rows) + ", expected " +
                        std::to_string(T) + " (resample first)");
    }
    if (xs[s]->cols != p.d_x[s]) {
      throw shape_error("multimodal: modality " + std::to_string(s) + " is " +
                        shape_str(*xs[s]) + " but the cell expects d_x = " +
                        std::to_string(p.d_x[s]));
    }
  }
}

CellWeights weights_for(const MultimodalParams& p, std::size_t s) {
  const auto& in = p.input[s];
  const auto& rec = p.hidden_for(s);
  return {&in.w_xg, &in.w_xi, &in.w_xf, &in.w_xo, &rec.w_hg, &rec.w_hi,
          &rec.w_hf, &rec.w_ho, &in.b_g, &in.b_i,  &in.b_f,  &in.b_o};
}

}  // namespace

MultimodalTrace mm_forward(const MultimodalParams& p,
                           std::span<const Mat* const> xs) {
  check_inputs(p, xs);
  const std::size_t T = xs[0]->rows;
  MultimodalTrace trace;
  trace.inputs.reserve(p.n);
  trace.steps.resize(p.n);
  trace.y.resize(p.n);
  const Vec no_bias(p.n_classes);
  for (std::size_t s = 0; s < p.n; ++s) {
    trace.inputs.push_back(*xs[s]);
    const CellWeights w = weights_for(p, s);
    const Mat& w_y = p.w_y_for(s);
    Vec h(p.d_h), c(p.d_h);
    trace.steps[s].reserve(T);
    trace.y[s].reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
      CellStep step = cell_step(w, xs[s]->row(t), h, c);
      h = step.h;
      c = step.c;
      trace.y[s].push_back(softmax(affine(w_y, step.h, no_bias)));
      trace.steps[s].push_back(std::move(step));
    }
  }
  return trace;
}

GradSet mm_backward(const MultimodalParams& p, const MultimodalTrace& trace,
                    std::span<const int> labels,
                    std::span<const double> loss_weights) {
  const std::size_t T = trace.T();
  if (trace.steps.size() != p.n) {
    throw shape_error("mm_backward: trace has " +
                      std::to_string(trace.steps.size()) +
                      " modalities, model has " + std::to_string(p.n));
  }
  if (labels.size() != T || loss_weights.size() != T) {
    throw shape_error("mm_backward: trace has T = " + std::to_string(T) +
                      " but got " + std::to_string(labels.size()) +
                      " labels and " + std::to_string(loss_weights.size()) +
                      " weights");
  }
  GradSet gs = GradSet::zeros_like(tensor_refs(const_cast<MultimodalParams&>(p)));
  auto slot = [&](const std::string& base, std::size_t idx) {
    return gs.by_name(base + "." + std::to_string(idx)).g.data();
  };
  for (std::size_t s = 0; s < p.n; ++s) {
    const std::size_t hc = p.hidden.size() == 1 ? 0 : s;
    const std::size_t oc = p.w_y.size() == 1 ? 0 : s;
    CellGradRefs out{slot("w_xg", s),  slot("w_xi", s),  slot("w_xf", s),
                     slot("w_xo", s),  slot("w_hg", hc), slot("w_hi", hc),
                     slot("w_hf", hc), slot("w_ho", hc), slot("b_g", s),
                     slot("b_i", s),   slot("b_f", s),   slot("b_o", s),
                     slot("w_y", oc)};
    cell_backward_pass(weights_for(p, s), p.w_y_for(s), trace.inputs[s],
                       trace.steps[s], trace.y[s], labels, loss_weights, out);
  }
  return gs;
}

double mm_loss(const MultimodalTrace& trace, std::span<const int> labels,
               std::span<const double> loss_weights) {
  double loss = 0.0;
  for (const auto& stream : trace.y) {
    loss += sequence_loss(stream, labels, loss_weights);
  }
  return loss;
}

std::vector<std::vector<int>> mm_predict(const MultimodalParams& p,
                                         std::span<const Mat* const> xs) {
  const MultimodalTrace trace = mm_forward(p, xs);
  std::vector<std::vector<int>> proposals(p.n);
  for (std::size_t s = 0; s < p.n; ++s) {
    proposals[s].reserve(trace.y[s].size());
    for (const Vec& probs : trace.y[s]) {
      proposals[s].push_back(static_cast<int>(argmax(probs)));
    }
  }
  return proposals;
}

}  // namespace mmlstm
