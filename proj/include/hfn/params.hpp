/// Named parameter storage, the Adam optimizer with decoupled weight
/// decay, and the versioned binary checkpoint container.
#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "hfn/core.hpp"
#include "hfn/io.hpp"

namespace hfn {

class ParamStore {
 public:
  int add(const std::string& name, Mat value, bool frozen = false) {
    check_contract(index_.find(name) == index_.end(), "duplicate parameter name: " + name);
    int id = static_cast<int>(entries_.size());
    entries_.push_back({name, std::move(value), frozen});
    index_[name] = id;
    return id;
  }

  int count() const { return static_cast<int>(entries_.size()); }

  Mat& value(int id) { return entries_[static_cast<size_t>(id)].value; }
  const Mat& value(int id) const { return entries_[static_cast<size_t>(id)].value; }
  Mat& value(const std::string& name) { return value(id_of(name)); }
  const Mat& value(const std::string& name) const { return entries_[static_cast<size_t>(id_of(name))].value; }

  const std::string& name(int id) const { return entries_[static_cast<size_t>(id)].name; }
  bool frozen(int id) const { return entries_[static_cast<size_t>(id)].frozen; }

  int id_of(const std::string& name) const {
    auto it = index_.find(name);
    check_contract(it != index_.end(), "unknown parameter: " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return index_.find(name) != index_.end(); }

  size_t scalar_count(bool trainable_only = false) const {
    size_t n = 0;
    for (const auto& e : entries_)
      if (!trainable_only || !e.frozen) n += e.value.size();
    return n;
  }

  uint64_t content_hash() const {
    uint64_t h = 1469598103934665603ull;
    for (const auto& e : entries_) {
      h = fnv1a64(e.name, h);
      h = hash_mat(e.value, h);
    }
    return h;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
  }

 private:
  struct Entry {
    std::string name;
    Mat value;
    bool frozen;
  };
  std::vector<Entry> entries_;
  std::map<std::string, int> index_;
};

// Adam with weight decay decoupled from the moment estimates:
//   m = b1 m + (1-b1) g;  v = b2 v + (1-b2) g²
//   p -= lr (m̂ / (√v̂ + eps) + wd p)
// Decay touches only trainable, non-frozen parameters.
class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double weight_decay = 0.0, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

  void step(ParamStore& store, const std::vector<const Mat*>& grads) {
    check_contract(static_cast<int>(grads.size()) == store.count(),
                   "optimizer step: gradient count mismatch");
    if (m_.empty()) {
      m_.resize(grads.size());
      v_.resize(grads.size());
      for (int i = 0; i < store.count(); ++i) {
        m_[static_cast<size_t>(i)] = Mat(store.value(i).rows, store.value(i).cols);
        v_[static_cast<size_t>(i)] = Mat(store.value(i).rows, store.value(i).cols);
      }
    }
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    for (int i = 0; i < store.count(); ++i) {
      if (store.frozen(i)) continue;
      const Mat* g = grads[static_cast<size_t>(i)];
      if (!g) continue;
      Mat& p = store.value(i);
      Mat& m = m_[static_cast<size_t>(i)];
      Mat& v = v_[static_cast<size_t>(i)];
      for (size_t k = 0; k < p.a.size(); ++k) {
        double gk = g->a[k];
        m.a[k] = beta1_ * m.a[k] + (1.0 - beta1_) * gk;
        v.a[k] = beta2_ * v.a[k] + (1.0 - beta2_) * gk * gk;
        double mhat = m.a[k] / bc1;
        double vhat = v.a[k] / bc2;
        p.a[k] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + wd_ * p.a[k]);
      }
    }
  }

  int64_t steps_taken() const { return t_; }

 private:
  double lr_, wd_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
};

// Checkpoint container: magic, version, config hash, named tensors.
inline void save_checkpoint(const std::string& path, const ParamStore& store,
                            const std::string& config_hash) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail_io("cannot open checkpoint for write: " + path);
  detail::write_bytes(os, "HFNCKPT1", 8);
  detail::write_pod<uint32_t>(os, 1u);
  detail::write_string(os, config_hash);
  detail::write_pod<uint32_t>(os, static_cast<uint32_t>(store.count()));
  for (int i = 0; i < store.count(); ++i) {
    const Mat& m = store.value(i);
    detail::write_string(os, store.name(i));
    detail::write_pod<uint8_t>(os, store.frozen(i) ? 1 : 0);
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(m.rows));
    detail::write_pod<uint32_t>(os, static_cast<uint32_t>(m.cols));
    detail::write_bytes(os, m.a.data(), m.a.size() * sizeof(double));
  }
}

struct Checkpoint {
  std::string config_hash;
  std::vector<std::string> names;
  std::vector<Mat> values;
  std::vector<bool> frozen;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail_io("cannot open checkpoint: " + path);
  detail::expect_magic(is, "HFNCKPT1", path);
  uint32_t version = detail::read_pod<uint32_t>(is, path);
  if (version != 1) fail_io("unsupported checkpoint version in " + path);
  Checkpoint ck;
  ck.config_hash = detail::read_string(is, path);
  uint32_t count = detail::read_pod<uint32_t>(is, path);
  for (uint32_t i = 0; i < count; ++i) {
    ck.names.push_back(detail::read_string(is, path));
    ck.frozen.push_back(detail::read_pod<uint8_t>(is, path) != 0);
    int rows = static_cast<int>(detail::read_pod<uint32_t>(is, path));
    int cols = static_cast<int>(detail::read_pod<uint32_t>(is, path));
    Mat m(rows, cols);
    if (!m.a.empty()) detail::read_bytes(is, m.a.data(), m.a.size() * sizeof(double), path);
    ck.values.push_back(std::move(m));
  }
  return ck;
}

// Restores checkpoint values into a store built with the same layout.
inline void restore_params(ParamStore& store, const Checkpoint& ck) {
  check_contract(static_cast<int>(ck.names.size()) == store.count(),
                 "checkpoint restore: parameter count mismatch");
  for (size_t i = 0; i < ck.names.size(); ++i) {
    int id = store.id_of(ck.names[i]);
    Mat& dst = store.value(id);
    check_contract(dst.same_shape(ck.values[i]),
                   "checkpoint restore: shape mismatch for " + ck.names[i]);
    dst = ck.values[i];
  }
}

}  // namespace hfn
