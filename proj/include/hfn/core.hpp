/// Core numeric and utility primitives shared by every hfn module:
/// a dense row-major matrix, a portable deterministic RNG, hashing,
/// and the error taxonomy used across the library.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace hfn {

enum class ErrorKind { io, validation, contract, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_io(const std::string& msg) { throw Error(ErrorKind::io, msg); }
[[noreturn]] inline void fail_validation(const std::string& msg) { throw Error(ErrorKind::validation, msg); }
[[noreturn]] inline void fail_contract(const std::string& msg) { throw Error(ErrorKind::contract, msg); }
[[noreturn]] inline void fail_numeric(const std::string& msg) { throw Error(ErrorKind::numeric, msg); }

inline void check_contract(bool ok, const std::string& msg) {
  if (!ok) fail_contract(msg);
}

// Dense row-major matrix of doubles. Everything trainable in this
// library is 2-d; higher-rank frozen features use Tensor below.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  size_t size() const { return a.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  static Mat row_vector(std::vector<double> v) {
    Mat m;
    m.rows = 1;
    m.cols = static_cast<int>(v.size());
    m.a = std::move(v);
    return m;
  }
  static Mat col_vector(std::vector<double> v) {
    Mat m;
    m.rows = static_cast<int>(v.size());
    m.cols = 1;
    m.a = std::move(v);
    return m;
  }
  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

// c += a * b
inline void gemm_acc(const Mat& a, const Mat& b, Mat& c) {
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = &a.a[static_cast<size_t>(i) * a.cols];
    double* ci = &c.a[static_cast<size_t>(i) * c.cols];
    for (int k = 0; k < a.cols; ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = &b.a[static_cast<size_t>(k) * b.cols];
      for (int j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
    }
  }
}

inline Mat matmul(const Mat& a, const Mat& b) {
  check_contract(a.cols == b.rows, "matmul: inner dimensions disagree");
  Mat c(a.rows, b.cols);
  gemm_acc(a, b, c);
  return c;
}

// c += a * b^T
inline void gemm_nt_acc(const Mat& a, const Mat& b, Mat& c) {
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = &a.a[static_cast<size_t>(i) * a.cols];
    for (int j = 0; j < b.rows; ++j) {
      const double* bj = &b.a[static_cast<size_t>(j) * b.cols];
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
      c(i, j) += s;
    }
  }
}

// c += a^T * b
inline void gemm_tn_acc(const Mat& a, const Mat& b, Mat& c) {
  for (int k = 0; k < a.rows; ++k) {
    const double* ak = &a.a[static_cast<size_t>(k) * a.cols];
    const double* bk = &b.a[static_cast<size_t>(k) * b.cols];
    for (int i = 0; i < a.cols; ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      double* ci = &c.a[static_cast<size_t>(i) * c.cols];
      for (int j = 0; j < b.cols; ++j) ci[j] += aki * bk[j];
    }
  }
}

// Rank-N tensor of doubles for frozen feature pipelines.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    data.assign(n, 0.0);
  }
  size_t size() const { return data.size(); }
};

inline uint64_t fnv1a64(const void* bytes, size_t n, uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s, uint64_t h = 1469598103934665603ull) {
  return fnv1a64(s.data(), s.size(), h);
}

inline std::string hash_hex(uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic RNG with identical output on every platform. All
// randomness in the library flows from a master seed; child streams
// are derived as splitmix64(master ^ fnv1a64(label)).
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  static Rng derive(uint64_t master, const std::string& label) {
    uint64_t s = master ^ fnv1a64(label);
    splitmix64(s);
    return Rng(s);
  }

  uint64_t next_u64() { return splitmix64(state_); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  uint64_t uniform_int(uint64_t n) {
    check_contract(n > 0, "uniform_int: empty range");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  uint64_t state() const { return state_; }
  void set_state(uint64_t s) { state_ = s; have_spare_ = false; }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline Mat random_normal_mat(int r, int c, Rng& rng, double stddev) {
  Mat m(r, c);
  for (double& x : m.a) x = rng.normal(0.0, stddev);
  return m;
}

// Xavier/Glorot uniform, the init used for all projection weights.
inline Mat glorot_mat(int r, int c, Rng& rng) {
  double lim = std::sqrt(6.0 / (r + c));
  Mat m(r, c);
  for (double& x : m.a) x = rng.uniform(-lim, lim);
  return m;
}

inline bool all_finite(const Mat& m) {
  for (double x : m.a)
    if (!std::isfinite(x)) return false;
  return true;
}

inline uint64_t hash_mat(const Mat& m, uint64_t h = 1469598103934665603ull) {
  h = fnv1a64(&m.rows, sizeof(m.rows), h);
  h = fnv1a64(&m.cols, sizeof(m.cols), h);
  if (!m.a.empty()) h = fnv1a64(m.a.data(), m.a.size() * sizeof(double), h);
  return h;
}

}  // namespace hfn
