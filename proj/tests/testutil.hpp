// Shared test helpers: finite-difference gradient checking and the
// independent oracles the suites compare against. Everything here is
// deliberately written as plain loops, separate from the library's
// implementation paths.
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hfn/core.hpp"
#include "hfn/params.hpp"

namespace testutil {

inline double rel_err(double a, double b, double floor = 1e-7) {
  double denom = std::max({std::fabs(a), std::fabs(b), floor});
  return std::fabs(a - b) / denom;
}

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int checked = 0;
};

// Central finite differences over every trainable scalar in the store.
// `loss` must recompute the forward pass from the store's current
// values; `ad_grads` are the reverse-mode gradients aligned to the
// store, captured at the unperturbed point.
inline GradCheckReport check_gradients(hfn::ParamStore& store,
                                       const std::vector<const hfn::Mat*>& ad_grads,
                                       const std::function<double()>& loss, double step = 1e-5,
                                       double floor = 1e-6) {
  GradCheckReport rep;
  for (int p = 0; p < store.count(); ++p) {
    if (store.frozen(p)) continue;
    const hfn::Mat* g = ad_grads[static_cast<size_t>(p)];
    hfn::Mat& value = store.value(p);
    for (size_t i = 0; i < value.a.size(); ++i) {
      double saved = value.a[i];
      value.a[i] = saved + step;
      double up = loss();
      value.a[i] = saved - step;
      double down = loss();
      value.a[i] = saved;
      double fd = (up - down) / (2.0 * step);
      double ad = g ? g->a[i] : 0.0;
      double err = rel_err(ad, fd, floor);
      ++rep.checked;
      if (err > rep.max_rel_err) {
        rep.max_rel_err = err;
        rep.worst_param = store.name(p) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return rep;
}

// Same check for a single free matrix (op-level tests).
inline double check_mat_gradient(hfn::Mat& x, const hfn::Mat& ad_grad,
                                 const std::function<double()>& loss, double step = 1e-5,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (size_t i = 0; i < x.a.size(); ++i) {
    double saved = x.a[i];
    x.a[i] = saved + step;
    double up = loss();
    x.a[i] = saved - step;
    double down = loss();
    x.a[i] = saved;
    double fd = (up - down) / (2.0 * step);
    worst = std::max(worst, rel_err(ad_grad.a[i], fd, floor));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Naive O(L²) multi-head attention oracle: explicit loops computing
// logits, a stable softmax, and the weighted value sum.

inline hfn::Mat attention_oracle(const hfn::Mat& q_seq, const hfn::Mat& kv_seq,
                                 const hfn::Mat& wq, const hfn::Mat& wk, const hfn::Mat& wv,
                                 int n_heads, const std::vector<uint8_t>& key_mask = {}) {
  const int L = q_seq.rows;
  const int Lk = kv_seq.rows;
  const int d = wq.cols;
  const int dk = d / n_heads;
  auto project = [](const hfn::Mat& x, const hfn::Mat& w) {
    hfn::Mat out(x.rows, w.cols);
    for (int i = 0; i < x.rows; ++i)
      for (int j = 0; j < w.cols; ++j) {
        double s = 0.0;
        for (int t = 0; t < x.cols; ++t) s += x(i, t) * w(t, j);
        out(i, j) = s;
      }
    return out;
  };
  hfn::Mat q = project(q_seq, wq);
  hfn::Mat k = project(kv_seq, wk);
  hfn::Mat v = project(kv_seq, wv);
  hfn::Mat out(L, d);
  for (int h = 0; h < n_heads; ++h) {
    int c0 = h * dk;
    for (int i = 0; i < L; ++i) {
      std::vector<double> logits(static_cast<size_t>(Lk));
      double mx = -1e300;
      for (int j = 0; j < Lk; ++j) {
        bool masked = !key_mask.empty() && key_mask[static_cast<size_t>(j)];
        if (masked) {
          logits[static_cast<size_t>(j)] = -1e300;
          continue;
        }
        double s = 0.0;
        for (int t = 0; t < dk; ++t) s += q(i, c0 + t) * k(j, c0 + t);
        s /= std::sqrt(static_cast<double>(dk));
        logits[static_cast<size_t>(j)] = s;
        mx = std::max(mx, s);
      }
      double z = 0.0;
      std::vector<double> p(static_cast<size_t>(Lk), 0.0);
      for (int j = 0; j < Lk; ++j) {
        bool masked = !key_mask.empty() && key_mask[static_cast<size_t>(j)];
        if (masked) continue;
        p[static_cast<size_t>(j)] = std::exp(logits[static_cast<size_t>(j)] - mx);
        z += p[static_cast<size_t>(j)];
      }
      for (int j = 0; j < Lk; ++j) p[static_cast<size_t>(j)] /= z;
      for (int t = 0; t < dk; ++t) {
        double s = 0.0;
        for (int j = 0; j < Lk; ++j) s += p[static_cast<size_t>(j)] * v(j, c0 + t);
        out(i, c0 + t) = s;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Independent confusion-matrix metrics oracle.

struct OracleMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> precision, recall, f1;
};

inline OracleMetrics metrics_oracle(const std::vector<int>& preds, const std::vector<int>& truth,
                                    int n_classes) {
  OracleMetrics m;
  m.precision.assign(static_cast<size_t>(n_classes), 0.0);
  m.recall.assign(static_cast<size_t>(n_classes), 0.0);
  m.f1.assign(static_cast<size_t>(n_classes), 0.0);
  int correct = 0;
  for (size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == truth[i]) ++correct;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
  for (int c = 0; c < n_classes; ++c) {
    int tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
      if (preds[i] == c && truth[i] == c) ++tp;
      if (preds[i] == c && truth[i] != c) ++fp;
      if (preds[i] != c && truth[i] == c) ++fn;
    }
    double prec = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    double rec = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    double f = prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    m.precision[static_cast<size_t>(c)] = prec;
    m.recall[static_cast<size_t>(c)] = rec;
    m.f1[static_cast<size_t>(c)] = f;
    m.macro_f1 += f;
  }
  m.macro_f1 /= n_classes;
  return m;
}

// ---------------------------------------------------------------------------
// Direct mel filter-bank oracle: naive DFT of one Hann-windowed frame
// followed by triangular filters, independent of hfn::signal.

inline std::vector<double> mel_energies_oracle(const std::vector<float>& samples, int sr,
                                               int n_fft, int n_mels) {
  std::vector<double> window(static_cast<size_t>(n_fft));
  for (int i = 0; i < n_fft; ++i)
    window[static_cast<size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (n_fft - 1));
  int n_bins = n_fft / 2 + 1;
  std::vector<double> power(static_cast<size_t>(n_bins), 0.0);
  for (int b = 0; b < n_bins; ++b) {
    double re = 0.0, im = 0.0;
    for (int t = 0; t < n_fft; ++t) {
      double s = (t < static_cast<int>(samples.size()) ? samples[static_cast<size_t>(t)] : 0.0f) *
                 window[static_cast<size_t>(t)];
      double ang = -2.0 * M_PI * b * t / n_fft;
      re += s * std::cos(ang);
      im += s * std::sin(ang);
    }
    power[static_cast<size_t>(b)] = re * re + im * im;
  }
  auto hz2mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto mel2hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  double lo = hz2mel(0.0), hi = hz2mel(sr / 2.0);
  std::vector<double> out(static_cast<size_t>(n_mels), 0.0);
  for (int m = 0; m < n_mels; ++m) {
    double f_lo = mel2hz(lo + (hi - lo) * m / (n_mels + 1));
    double f_mid = mel2hz(lo + (hi - lo) * (m + 1) / (n_mels + 1));
    double f_hi = mel2hz(lo + (hi - lo) * (m + 2) / (n_mels + 1));
    for (int b = 0; b < n_bins; ++b) {
      double f = static_cast<double>(b) * sr / n_fft;
      double w = 0.0;
      if (f > f_lo && f < f_mid)
        w = (f - f_lo) / (f_mid - f_lo);
      else if (f >= f_mid && f < f_hi)
        w = (f_hi - f) / (f_hi - f_mid);
      out[static_cast<size_t>(m)] += w * power[static_cast<size_t>(b)];
    }
  }
  return out;
}

inline hfn::Mat random_mat(int r, int c, hfn::Rng& rng, double scale = 1.0) {
  hfn::Mat m(r, c);
  for (double& v : m.a) v = rng.uniform(-scale, scale);
  return m;
}

}  // namespace testutil
