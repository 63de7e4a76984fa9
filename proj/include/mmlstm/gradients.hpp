#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mmlstm/mat.hpp"

namespace mmlstm {

// Mutable view of one parameter tensor (vectors have cols == 1).
struct TensorRef {
  std::string name;
  double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
};

struct TensorView {
  std::string name;
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
};

// One gradient array per parameter tensor, same shapes, same order.
struct GradSet {
  struct Slot {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> g;
  };
  std::vector<Slot> slots;

  static GradSet zeros_like(const std::vector<TensorRef>& refs);

  void add(const GradSet& other);
  void scale(double factor);
  double l2_norm() const;
  std::size_t total_size() const;
  Slot& by_name(const std::string& name);
};

std::vector<TensorView> as_views(const std::vector<TensorRef>& refs);

}  // namespace mmlstm
