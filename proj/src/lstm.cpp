#include "mmlstm/lstm.hpp"

#include <cmath>

namespace mmlstm {

LstmParams make_lstm(std::size_t d_x, std::size_t d_h, std::size_t n_classes,
                     Rng& rng) {
  if (d_x == 0 || d_h == 0 || n_classes == 0) {
    throw config_error("make_lstm: dimensions must be positive");
  }
  const double r = 1.0 / std::sqrt(static_cast<double>(d_h));
  LstmParams p;
  p.d_x = d_x;
  p.d_h = d_h;
  p.n_classes = n_classes;
  p.w_xg = random_uniform_mat(d_h, d_x, r, rng);
  p.w_xi = random_uniform_mat(d_h, d_x, r, rng);
  p.w_xf = random_uniform_mat(d_h, d_x, r, rng);
  p.w_xo = random_uniform_mat(d_h, d_x, r, rng);
  p.w_hg = random_uniform_mat(d_h, d_h, r, rng);
  p.w_hi = random_uniform_mat(d_h, d_h, r, rng);
  p.w_hf = random_uniform_mat(d_h, d_h, r, rng);
  p.w_ho = random_uniform_mat(d_h, d_h, r, rng);
  p.b_g = Vec(d_h);
  p.b_i = Vec(d_h);
  p.b_f = Vec(d_h, 1.0);
  p.b_o = Vec(d_h);
  p.w_y = random_uniform_mat(n_classes, d_h, r, rng);
  return p;
}

std::size_t param_count(const LstmParams& p) {
  std::size_t n = 0;
  for (const auto& v : tensor_views(p)) n += v.size();
  return n;
}

std::vector<TensorRef> tensor_refs(LstmParams& p) {
  std::vector<TensorRef> refs;
  auto mat = [&](const char* name, Mat& m) {
    refs.push_back({name, m.data.data(), m.rows, m.cols});
  };
  auto vec = [&](const char* name, Vec& v) {
    refs.push_back({name, v.data.data(), v.len(), 1});
  };
  mat("w_xg", p.w_xg);
  mat("w_xi", p.w_xi);
  mat("w_xf", p.w_xf);
  mat("w_xo", p.w_xo);
  vec("b_g", p.b_g);
  vec("b_i", p.b_i);
  vec("b_f", p.b_f);
  vec("b_o", p.b_o);
  mat("w_hg", p.w_hg);
  mat("w_hi", p.w_hi);
  mat("w_hf", p.w_hf);
  mat("w_ho", p.w_ho);
  mat("w_y", p.w_y);
  return refs;
}

std::vector<TensorView> tensor_views(const LstmParams& p) {
  return as_views(tensor_refs(const_cast<LstmParams&>(p)));
}

CellWeights weights_of(const LstmParams& p) {
  return {&p.w_xg, &p.w_xi, &p.w_xf, &p.w_xo, &p.w_hg, &p.w_hi,
          &p.w_hf, &p.w_ho, &p.b_g,  &p.b_i,  &p.b_f,  &p.b_o};
}

CellStep cell_step(const CellWeights& w, std::span<const double> x,
                   const Vec& h_prev, const Vec& c_prev) {
  CellStep s;
  s.g = tanh(gate_preact(*w.w_xg, x, *w.w_hg, h_prev, *w.b_g));
  s.i = sigmoid(gate_preact(*w.w_xi, x, *w.w_hi, h_prev, *w.b_i));
  s.f = sigmoid(gate_preact(*w.w_xf, x, *w.w_hf, h_prev, *w.b_f));
  s.o = sigmoid(gate_preact(*w.w_xo, x, *w.w_ho, h_prev, *w.b_o));
  const std::size_t d_h = s.g.len();
  s.c = Vec(d_h);
  s.h = Vec(d_h);
  for (std::size_t j = 0; j < d_h; ++j) {
    s.c[j] = s.f[j] * c_prev[j] + s.i[j] * s.g[j];
    s.h[j] = s.o[j] * std::tanh(s.c[j]);
  }
  return s;
}

CellStep cell_step(const LstmParams& p, const Vec& x, const Vec& h_prev,
                   const Vec& c_prev) {
  if (x.len() != p.d_x || h_prev.len() != p.d_h || c_prev.len() != p.d_h) {
    throw shape_error("cell_step: expected x[" + std::to_string(p.d_x) +
                      "] h[" + std::to_string(p.d_h) + "] C[" +
                      std::to_string(p.d_h) + "], got x[" +
                      std::to_string(x.len()) + "] h[" +
                      std::to_string(h_prev.len()) + "] C[" +
                      std::to_string(c_prev.len()) + "]");
  }
  return cell_step(weights_of(p), x.span(), h_prev, c_prev);
}

ForwardTrace forward(const LstmParams& p, const Mat& inputs) {
  if (inputs.rows == 0) throw shape_error("forward: empty sequence (T = 0)");
  if (inputs.cols != p.d_x) {
    throw shape_error("forward: inputs are " + shape_str(inputs) +
                      " but the cell expects d_x = " + std::to_string(p.d_x));
  }
  const CellWeights w = weights_of(p);
  ForwardTrace trace;
  trace.inputs = inputs;
  trace.steps.reserve(inputs.rows);
  trace.y.reserve(inputs.rows);
  Vec h(p.d_h), c(p.d_h);
  const Vec no_bias(p.n_classes);
  for (std::size_t t = 0; t < inputs.rows; ++t) {
    CellStep s = cell_step(w, inputs.row(t), h, c);
    h = s.h;
    c = s.c;
    trace.y.push_back(softmax(affine(p.w_y, s.h, no_bias)));
    trace.steps.push_back(std::move(s));
  }
  return trace;
}

double sequence_loss(const std::vector<Vec>& probs, std::span<const int> labels,
                     std::span<const double> loss_weights) {
  if (labels.size() != probs.size() || loss_weights.size() != probs.size()) {
    throw shape_error("sequence_loss: got " + std::to_string(probs.size()) +
                      " outputs, " + std::to_string(labels.size()) +
                      " labels, " + std::to_string(loss_weights.size()) +
                      " weights");
  }
  double loss = 0.0;
  for (std::size_t t = 0; t < probs.size(); ++t) {
    loss += loss_weights[t] *
            cross_entropy(probs[t], static_cast<std::size_t>(labels[t]));
  }
  return loss;
}

void cell_backward_pass(const CellWeights& w, const Mat& w_y, const Mat& inputs,
                        const std::vector<CellStep>& steps,
                        const std::vector<Vec>& probs,
                        std::span<const int> labels,
                        std::span<const double> loss_weights, CellGradRefs out) {
  const std::size_t T = steps.size();
  const std::size_t d_h = w.b_g->len();
  const std::size_t K = w_y.rows;

  Vec dh_carry(d_h), dc_carry(d_h);
  Vec dz(K);
  Vec da_g(d_h), da_i(d_h), da_f(d_h), da_o(d_h);
  const Vec zeros(d_h);

  for (std::size_t ti = T; ti-- > 0;) {
    const CellStep& s = steps[ti];
    const Vec& h_prev = ti > 0 ? steps[ti - 1].h : zeros;
    const Vec& c_prev = ti > 0 ? steps[ti - 1].c : zeros;
    const double wt = loss_weights[ti];
    const std::size_t label = static_cast<std::size_t>(labels[ti]);

    // softmax + cross-entropy
    for (std::size_t k = 0; k < K; ++k) {
      dz[k] = wt * (probs[ti][k] - (k == label ? 1.0 : 0.0));
    }
    add_outer(out.w_y, dz, s.h.span());

    Vec dh = dh_carry;
    add_mat_t_vec(w_y, dz, dh);

    for (std::size_t j = 0; j < d_h; ++j) {
      const double tc = std::tanh(s.c[j]);
      const double d_o = dh[j] * tc;
      da_o[j] = d_o * s.o[j] * (1.0 - s.o[j]);
      const double dc = dc_carry[j] + dh[j] * s.o[j] * (1.0 - tc * tc);
      const double d_f = dc * c_prev[j];
      da_f[j] = d_f * s.f[j] * (1.0 - s.f[j]);
      const double d_i = dc * s.g[j];
      da_i[j] = d_i * s.i[j] * (1.0 - s.i[j]);
      const double d_g = dc * s.i[j];
      da_g[j] = d_g * (1.0 - s.g[j] * s.g[j]);
      dc_carry[j] = dc * s.f[j];
    }

    const std::span<const double> x_t = inputs.row(ti);
    add_outer(out.w_xg, da_g, x_t);
    add_outer(out.w_xi, da_i, x_t);
    add_outer(out.w_xf, da_f, x_t);
    add_outer(out.w_xo, da_o, x_t);
    for (std::size_t j = 0; j < d_h; ++j) {
      out.b_g[j] += da_g[j];
      out.b_i[j] += da_i[j];
      out.b_f[j] += da_f[j];
      out.b_o[j] += da_o[j];
    }
    add_outer(out.w_hg, da_g, h_prev.span());
    add_outer(out.w_hi, da_i, h_prev.span());
    add_outer(out.w_hf, da_f, h_prev.span());
    add_outer(out.w_ho, da_o, h_prev.span());

    for (std::size_t j = 0; j < d_h; ++j) dh_carry[j] = 0.0;
    add_mat_t_vec(*w.w_hg, da_g, dh_carry);
    add_mat_t_vec(*w.w_hi, da_i, dh_carry);
    add_mat_t_vec(*w.w_hf, da_f, dh_carry);
    add_mat_t_vec(*w.w_ho, da_o, dh_carry);
  }
}

GradSet backward(const LstmParams& p, const ForwardTrace& trace,
                 std::span<const int> labels,
                 std::span<const double> loss_weights) {
  const std::size_t T = trace.T();
  if (labels.size() != T || loss_weights.size() != T) {
    throw shape_error("backward: trace has T = " + std::to_string(T) +
                      " but got " + std::to_string(labels.size()) +
                      " labels and " + std::to_string(loss_weights.size()) +
                      " weights");
  }
  GradSet gs = GradSet::zeros_like(tensor_refs(const_cast<LstmParams&>(p)));
  auto slot = [&](const char* name) { return gs.by_name(name).g.data(); };
  CellGradRefs out{slot("w_xg"), slot("w_xi"), slot("w_xf"), slot("w_xo"),
                   slot("w_hg"), slot("w_hi"), slot("w_hf"), slot("w_ho"),
                   slot("b_g"),  slot("b_i"),  slot("b_f"),  slot("b_o"),
                   slot("w_y")};
  cell_backward_pass(weights_of(p), p.w_y, trace.inputs, trace.steps, trace.y,
                     labels, loss_weights, out);
  return gs;
}

std::size_t predict_last(const LstmParams& p, const Mat& inputs) {
  const ForwardTrace trace = forward(p, inputs);
  return argmax(trace.y.back());
}

}  // namespace mmlstm
