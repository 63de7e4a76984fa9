#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmlstm {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// dimension mismatches between operands
struct shape_error : error {
  using error::error;
};

// invalid user-supplied configuration
struct config_error : error {
  using error::error;
};

// malformed or inconsistent input files
struct data_error : error {
  using error::error;
};

// numerical failures (non-finite loss, failed gradient check)
struct numeric_error : error {
  using error::error;
};

struct Vec {
  std::vector<double> data;

  Vec() = default;
  explicit Vec(std::size_t n, double fill = 0.0) : data(n, fill) {}
  Vec(std::initializer_list<double> init) : data(init) {}

  std::size_t len() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  std::span<const double> span() const { return {data.data(), data.size()}; }
};

// Dense row-major matrix of real64.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  std::size_t size() const { return data.size(); }
};

std::string shape_str(const Mat& m);

// out[r] = sum_c w[r,c] * x[c] + b[r]
Vec affine(const Mat& w, const Vec& x, const Vec& b);

// Fused gate preactivation: out[r] = wx.row(r)*x + wh.row(r)*h + b[r].
// Both LSTM cell types route through this so their arithmetic is identical.
Vec gate_preact(const Mat& wx, std::span<const double> x, const Mat& wh,
                const Vec& h, const Vec& b);

// y += w^T * v
void add_mat_t_vec(const Mat& w, const Vec& v, Vec& y);

// w[r,c] += a[r] * b[c]
void add_outer(double* w, const Vec& a, std::span<const double> b);

double sigmoid(double x);
Vec sigmoid(const Vec& x);
Vec tanh(const Vec& x);
Vec softmax(const Vec& z);
double cross_entropy(const Vec& p, std::size_t label);

// argmax with ties broken toward the smallest index
std::size_t argmax(const Vec& v);
std::size_t argmax(std::span<const double> v);

bool all_finite(std::span<const double> v);

}  // namespace mmlstm
