#include "mmlstm/mat.hpp"

#include <algorithm>
#include <cmath>

namespace mmlstm {

std::string shape_str(const Mat& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

Vec affine(const Mat& w, const Vec& x, const Vec& b) {
  if (w.cols != x.len() || w.rows != b.len()) {
    throw shape_error("affine: W is " + shape_str(w) + " but x has length " +
                      std::to_string(x.len()) + " and b has length " +
                      std::to_string(b.len()));
  }
  Vec out(w.rows);
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = w.data.data() + r * w.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * x[c];
    out[r] = acc + b[r];
  }
  return out;
}

Vec gate_preact(const Mat& wx, std::span<const double> x, const Mat& wh,
                const Vec& h, const Vec& b) {
  if (wx.cols != x.size() || wh.cols != h.len() || wx.rows != wh.rows ||
      wx.rows != b.len()) {
    throw shape_error("gate_preact: Wx " + shape_str(wx) + " x[" +
                      std::to_string(x.size()) + "] Wh " + shape_str(wh) +
                      " h[" + std::to_string(h.len()) + "] b[" +
                      std::to_string(b.len()) + "]");
  }
  Vec out(wx.rows);
  for (std::size_t r = 0; r < wx.rows; ++r) {
    const double* xr = wx.data.data() + r * wx.cols;
    const double* hr = wh.data.data() + r * wh.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < wx.cols; ++c) acc += xr[c] * x[c];
    for (std::size_t c = 0; c < wh.cols; ++c) acc += hr[c] * h[c];
    out[r] = acc + b[r];
  }
  return out;
}

void add_mat_t_vec(const Mat& w, const Vec& v, Vec& y) {
  if (w.rows != v.len() || w.cols != y.len()) {
    throw shape_error("add_mat_t_vec: W is " + shape_str(w) + " but v has length " +
                      std::to_string(v.len()) + " and y has length " +
                      std::to_string(y.len()));
  }
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = w.data.data() + r * w.cols;
    const double vr = v[r];
    for (std::size_t c = 0; c < w.cols; ++c) y[c] += wr[c] * vr;
  }
}

void add_outer(double* w, const Vec& a, std::span<const double> b) {
  for (std::size_t r = 0; r < a.len(); ++r) {
    double* wr = w + r * b.size();
    const double ar = a[r];
    for (std::size_t c = 0; c < b.size(); ++c) wr[c] += ar * b[c];
  }
}

double sigmoid(double x) {
  // branch on sign so exp never overflows
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec sigmoid(const Vec& x) {
  Vec out(x.len());
  for (std::size_t i = 0; i < x.len(); ++i) out[i] = sigmoid(x[i]);
  return out;
}

Vec tanh(const Vec& x) {
  Vec out(x.len());
  for (std::size_t i = 0; i < x.len(); ++i) out[i] = std::tanh(x[i]);
  return out;
}

Vec softmax(const Vec& z) {
  if (z.len() == 0) throw shape_error("softmax: empty input");
  double zmax = z[0];
  for (std::size_t i = 1; i < z.len(); ++i) zmax = std::max(zmax, z[i]);
  Vec out(z.len());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.len(); ++i) {
    out[i] = std::exp(z[i] - zmax);
    sum += out[i];
  }
  for (std::size_t i = 0; i < z.len(); ++i) out[i] /= sum;
  return out;
}

double cross_entropy(const Vec& p, std::size_t label) {
  if (label >= p.len()) {
    throw shape_error("cross_entropy: label " + std::to_string(label) +
                      " out of range for " + std::to_string(p.len()) +
                      " classes");
  }
  constexpr double kFloor = 1e-12;
  return -std::log(std::max(p[label], kFloor));
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

std::size_t argmax(const Vec& v) { return argmax(v.span()); }

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace mmlstm
