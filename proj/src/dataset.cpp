#include "mmlstm/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mmlstm {

FeatureSequence duplicate_evenly(const FeatureSequence& seq,
                                 std::size_t T_target) {
  const std::size_t T = seq.T();
  if (T == 0) throw shape_error("duplicate_evenly: empty sequence");
  if (T_target < T) {
    throw shape_error("duplicate_evenly: T_target " + std::to_string(T_target) +
                      " < T " + std::to_string(T));
  }
  FeatureSequence out;
  out.modality = seq.modality;
  out.identity = seq.identity;
  out.frames = Mat(T_target, seq.dim());
  for (std::size_t j = 0; j < T_target; ++j) {
    const std::size_t src = j * T / T_target;
    std::copy_n(seq.frames.row(src).data(), seq.dim(), out.frames.row(j).data());
  }
  return out;
}

std::vector<std::size_t> SamplePool::dims() const {
  std::vector<std::size_t> d;
  if (samples.empty()) return d;
  for (const auto& s : samples[0].seqs) d.push_back(s.dim());
  return d;
}

void SamplePool::rebuild_index() {
  by_class.assign(n_classes, {});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int label = samples[i].label;
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
      throw data_error("pool: sample " + std::to_string(i) + " has label " +
                       std::to_string(label) + " outside [0, " +
                       std::to_string(n_classes) + ")");
    }
    by_class[static_cast<std::size_t>(label)].push_back(i);
  }
}

void SamplePool::validate() const {
  const std::size_t n = modalities();
  const std::vector<std::size_t> d = dims();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& smp = samples[i];
    if (smp.seqs.size() != n) {
      throw data_error("pool: sample " + std::to_string(i) +
                       " has inconsistent modality count");
    }
    const std::size_t T = smp.seqs[0].T();
    for (std::size_t s = 0; s < n; ++s) {
      if (smp.seqs[s].T() != T || smp.seqs[s].dim() != d[s]) {
        throw data_error("pool: sample " + std::to_string(i) + " modality " +
                         std::to_string(s) + " has inconsistent shape");
      }
      if (!all_finite(smp.seqs[s].frames.data)) {
        throw data_error("pool: sample " + std::to_string(i) + " modality " +
                         std::to_string(s) + " contains non-finite values");
      }
    }
  }
}

std::span<const std::size_t> ModalityView::of_class(int identity) const {
  if (identity < 0 ||
      static_cast<std::size_t>(identity) >= pool->by_class.size()) {
    throw data_error("pool: identity " + std::to_string(identity) +
                     " out of range");
  }
  const auto& list = pool->by_class[static_cast<std::size_t>(identity)];
  return {list.data(), list.size()};
}

namespace {

// Align two drawn sequences to a common length before pairing.
void align_lengths(FeatureSequence& a, FeatureSequence& b) {
  if (a.T() == b.T()) return;
  const std::size_t T = std::max(a.T(), b.T());
  if (a.T() < T) a = duplicate_evenly(a, T);
  if (b.T() < T) b = duplicate_evenly(b, T);
}

}  // namespace

MultimodalSample pair_runtime(const ModalityView& a, const ModalityView& b,
                              int identity, Rng& rng) {
  const auto ia = a.of_class(identity);
  const auto ib = b.of_class(identity);
  if (ia.empty() || ib.empty()) {
    throw data_error("pair_runtime: no sequences of identity " +
                     std::to_string(identity));
  }
  MultimodalSample out;
  out.seqs.push_back(a.seq(ia[rng.below(ia.size())]));
  out.seqs.push_back(b.seq(ib[rng.below(ib.size())]));
  align_lengths(out.seqs[0], out.seqs[1]);
  out.label = identity;
  out.is_distractor = false;
  return out;
}

MultimodalSample make_distractor(const ModalityView& a, const ModalityView& b,
                                 Rng& rng) {
  if (a.pool->samples.empty() || b.pool->samples.empty()) {
    throw data_error("make_distractor: empty pool");
  }
  // a valid cross pair exists unless both pools hold one identical identity
  std::size_t classes_a = 0, classes_b = 0;
  int only_a = -1, only_b = -1;
  for (std::size_t k = 0; k < a.pool->by_class.size(); ++k) {
    if (!a.pool->by_class[k].empty()) ++classes_a, only_a = static_cast<int>(k);
  }
  for (std::size_t k = 0; k < b.pool->by_class.size(); ++k) {
    if (!b.pool->by_class[k].empty()) ++classes_b, only_b = static_cast<int>(k);
  }
  if (classes_a == 1 && classes_b == 1 && only_a == only_b) {
    throw data_error("make_distractor: pools hold a single identity");
  }
  // rejection sampling keeps the distribution uniform over valid cross pairs
  const std::size_t na = a.pool->samples.size();
  const std::size_t nb = b.pool->samples.size();
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const std::size_t i = rng.below(na);
    const std::size_t j = rng.below(nb);
    const FeatureSequence& fa = a.seq(i);
    const FeatureSequence& fb = b.seq(j);
    if (fa.identity == fb.identity) continue;
    MultimodalSample out;
    out.seqs.push_back(fa);
    out.seqs.push_back(fb);
    align_lengths(out.seqs[0], out.seqs[1]);
    out.label = fb.identity;  // the speaking identity
    out.is_distractor = true;
    return out;
  }
  throw data_error("make_distractor: failed to draw a cross-identity pair");
}

std::vector<MultimodalSample> build_balanced_pairs(const SamplePool& pool,
                                                   std::size_t genuine,
                                                   std::size_t distractors,
                                                   Rng& rng) {
  if (pool.samples.empty()) throw data_error("build_balanced_pairs: empty pool");
  std::vector<MultimodalSample> out;
  out.reserve(genuine + distractors);
  // class-balanced genuine subsample, without replacement per class
  std::vector<std::vector<std::size_t>> remaining = pool.by_class;
  std::size_t cls = 0;
  for (std::size_t k = 0; k < genuine; ++k) {
    bool added = false;
    for (std::size_t tries = 0; tries < pool.n_classes && !added; ++tries) {
      auto& list = remaining[cls];
      cls = (cls + 1) % pool.n_classes;
      if (!list.empty()) {
        const std::size_t pick = rng.below(list.size());
        out.push_back(pool.samples[list[pick]]);
        list[pick] = list.back();
        list.pop_back();
        added = true;
      }
    }
    if (!added) {
      throw data_error("build_balanced_pairs: pool has only " +
                       std::to_string(k) + " samples, need " +
                       std::to_string(genuine) + " genuine");
    }
  }
  const ModalityView faces{&pool, 0};
  const ModalityView voices{&pool, pool.modalities() > 1 ? std::size_t{1} : 0};
  for (std::size_t k = 0; k < distractors; ++k) {
    out.push_back(make_distractor(faces, voices, rng));
  }
  return out;
}

std::vector<const Mat*> frame_ptrs(const MultimodalSample& sample) {
  std::vector<const Mat*> ptrs;
  ptrs.reserve(sample.seqs.size());
  for (const auto& s : sample.seqs) ptrs.push_back(&s.frames);
  return ptrs;
}

// --- file I/O ---------------------------------------------------------------

namespace {

void write_f64_le(std::ostream& os, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64_le(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

// `key=value` field out of a header line
std::string header_field(const std::string& line, const std::string& key,
                         const std::string& path) {
  const std::string token = key + "=";
  const auto pos = line.find(token);
  if (pos == std::string::npos) {
    throw data_error(path + ": header missing field '" + key + "'");
  }
  const auto start = pos + token.size();
  auto end = line.find(' ', start);
  if (end == std::string::npos) end = line.size();
  return line.substr(start, end - start);
}

long parse_long(const std::string& s, const std::string& what,
                const std::string& path) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw data_error(path + ": bad " + what + " '" + s + "'");
  }
}

}  // namespace

void save_features(const FeatureSequence& seq, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw data_error("cannot write " + path);
  os << "MMSEQ v1 modality=" << seq.modality << " T=" << seq.T()
     << " d=" << seq.dim() << " identity=" << seq.identity << "\n";
  for (double v : seq.frames.data) write_f64_le(os, v);
  if (!os) throw data_error("short write to " + path);
}

FeatureSequence load_features(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw data_error("cannot open " + path);
  std::string header;
  if (!std::getline(is, header) || header.rfind("MMSEQ v1 ", 0) != 0) {
    throw data_error(path + ": not an MMSEQ v1 file");
  }
  FeatureSequence seq;
  seq.modality = header_field(header, "modality", path);
  const long T = parse_long(header_field(header, "T", path), "T", path);
  const long d = parse_long(header_field(header, "d", path), "d", path);
  seq.identity = static_cast<int>(
      parse_long(header_field(header, "identity", path), "identity", path));
  if (T <= 0 || d <= 0) {
    throw data_error(path + ": non-positive dimensions in header");
  }
  seq.frames = Mat(static_cast<std::size_t>(T), static_cast<std::size_t>(d));
  for (std::size_t idx = 0; idx < seq.frames.data.size(); ++idx) {
    const double v = read_f64_le(is);
    if (!is) {
      throw data_error(path + ": truncated blob, expected " +
                       std::to_string(seq.frames.data.size() * 8) +
                       " bytes, failed at value " + std::to_string(idx));
    }
    if (!std::isfinite(v)) {
      throw data_error(path + ": non-finite value at frame " +
                       std::to_string(idx / seq.dim()) + ", column " +
                       std::to_string(idx % seq.dim()));
    }
    seq.frames.data[idx] = v;
  }
  return seq;
}

void save_pool(const SamplePool& pool, const std::string& manifest_path) {
  namespace fs = std::filesystem;
  const fs::path manifest(manifest_path);
  const fs::path dir = manifest.parent_path();
  const std::string stem = manifest.stem().string();
  const fs::path seq_dir = dir / (stem + "_seqs");
  fs::create_directories(seq_dir);

  std::ofstream os(manifest_path, std::ios::trunc);
  if (!os) throw data_error("cannot write " + manifest_path);
  os << "MMPOOL v1 n=" << pool.modalities() << " count=" << pool.samples.size()
     << "\n";
  char name[64];
  for (std::size_t i = 0; i < pool.samples.size(); ++i) {
    const auto& smp = pool.samples[i];
    os << smp.label << ' ' << (smp.is_distractor ? 1 : 0);
    for (std::size_t s = 0; s < smp.seqs.size(); ++s) {
      std::snprintf(name, sizeof name, "s%06zu_m%zu.mmseq", i, s);
      save_features(smp.seqs[s], (seq_dir / name).string());
      os << ' ' << (stem + "_seqs") << '/' << name;
    }
    os << "\n";
  }
  if (!os) throw data_error("short write to " + manifest_path);
}

SamplePool load_pool(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  std::ifstream is(manifest_path);
  if (!is) throw data_error("cannot open " + manifest_path);
  std::string header;
  if (!std::getline(is, header) || header.rfind("MMPOOL v1 ", 0) != 0) {
    throw data_error(manifest_path + ": not an MMPOOL v1 manifest");
  }
  const long n = parse_long(header_field(header, "n", manifest_path), "n",
                            manifest_path);
  const long count = parse_long(header_field(header, "count", manifest_path),
                                "count", manifest_path);
  if (n <= 0 || count < 0) {
    throw data_error(manifest_path + ": bad pool header");
  }
  const fs::path dir = fs::path(manifest_path).parent_path();

  SamplePool pool;
  pool.samples.reserve(static_cast<std::size_t>(count));
  std::string line;
  int max_label = -1;
  for (long i = 0; i < count; ++i) {
    if (!std::getline(is, line)) {
      throw data_error(manifest_path + ": manifest truncated at sample " +
                       std::to_string(i));
    }
    std::istringstream ls(line);
    MultimodalSample smp;
    int distractor = 0;
    if (!(ls >> smp.label >> distractor)) {
      throw data_error(manifest_path + ": bad sample line " + std::to_string(i));
    }
    smp.is_distractor = distractor != 0;
    std::string rel;
    for (long s = 0; s < n; ++s) {
      if (!(ls >> rel)) {
        throw data_error(manifest_path + ": sample " + std::to_string(i) +
                         " lists too few files");
      }
      smp.seqs.push_back(load_features((dir / rel).string()));
    }
    max_label = std::max(max_label, smp.label);
    pool.samples.push_back(std::move(smp));
  }
  pool.n_classes = static_cast<std::size_t>(max_label + 1);
  pool.rebuild_index();
  pool.validate();
  return pool;
}

}  // namespace mmlstm
