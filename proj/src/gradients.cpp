#include "mmlstm/gradients.hpp"

#include <cmath>

namespace mmlstm {

GradSet GradSet::zeros_like(const std::vector<TensorRef>& refs) {
  GradSet gs;
  gs.slots.reserve(refs.size());
  for (const auto& r : refs) {
    gs.slots.push_back({r.name, r.rows, r.cols, std::vector<double>(r.size(), 0.0)});
  }
  return gs;
}

void GradSet::add(const GradSet& other) {
  if (other.slots.size() != slots.size()) {
    throw shape_error("GradSet::add: slot count mismatch");
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    auto& a = slots[i];
    const auto& b = other.slots[i];
    if (a.g.size() != b.g.size()) {
      throw shape_error("GradSet::add: size mismatch in " + a.name);
    }
    for (std::size_t j = 0; j < a.g.size(); ++j) a.g[j] += b.g[j];
  }
}

void GradSet::scale(double factor) {
  for (auto& s : slots) {
    for (auto& v : s.g) v *= factor;
  }
}

double GradSet::l2_norm() const {
  double sq = 0.0;
  for (const auto& s : slots) {
    for (double v : s.g) sq += v * v;
  }
  return std::sqrt(sq);
}

std::size_t GradSet::total_size() const {
  std::size_t n = 0;
  for (const auto& s : slots) n += s.g.size();
  return n;
}

GradSet::Slot& GradSet::by_name(const std::string& name) {
  for (auto& s : slots) {
    if (s.name == name) return s;
  }
  throw shape_error("GradSet: no slot named " + name);
}

std::vector<TensorView> as_views(const std::vector<TensorRef>& refs) {
  std::vector<TensorView> out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.push_back({r.name, r.data, r.rows, r.cols});
  return out;
}

}  // namespace mmlstm
