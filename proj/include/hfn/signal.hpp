/// Minimal audio DSP: radix-2 FFT, Hann-windowed STFT power spectra,
/// and a triangular mel filter bank with log compression.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "hfn/core.hpp"

namespace hfn::signal {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 Cooley-Tukey, size must be a power of two.
inline void fft(std::vector<std::complex<double>>& x) {
  const size_t n = x.size();
  check_contract(is_pow2(static_cast<int>(n)), "fft: size must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * M_PI / static_cast<double>(len);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = x[i + k];
        std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

struct StftParams {
  int n_fft = 256;
  int hop = 128;

  int n_bins() const { return n_fft / 2 + 1; }
  int n_frames(int n_samples) const {
    if (n_samples < n_fft) return n_samples > 0 ? 1 : 0;
    return (n_samples - n_fft) / hop + 1;
  }
};

// Power spectrogram, frames × (n_fft/2 + 1). Short signals are
// zero-padded to one frame.
inline Mat stft_power(const float* samples, int n, const StftParams& p = {}) {
  check_contract(is_pow2(p.n_fft), "stft: n_fft must be a power of two");
  int frames = p.n_frames(n);
  Mat out(frames, p.n_bins());
  std::vector<double> window(static_cast<size_t>(p.n_fft));
  for (int i = 0; i < p.n_fft; ++i)
    window[static_cast<size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (p.n_fft - 1));
  std::vector<std::complex<double>> buf(static_cast<size_t>(p.n_fft));
  for (int f = 0; f < frames; ++f) {
    int start = f * p.hop;
    for (int i = 0; i < p.n_fft; ++i) {
      int idx = start + i;
      double s = idx < n ? static_cast<double>(samples[idx]) : 0.0;
      buf[static_cast<size_t>(i)] = s * window[static_cast<size_t>(i)];
    }
    fft(buf);
    for (int b = 0; b < p.n_bins(); ++b) out(f, b) = std::norm(buf[static_cast<size_t>(b)]);
  }
  return out;
}

inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Triangular mel filters as an (n_mels × n_bins) weight matrix.
inline Mat mel_filter_bank(int n_mels, int n_fft, int sr) {
  int n_bins = n_fft / 2 + 1;
  double mel_lo = hz_to_mel(0.0);
  double mel_hi = hz_to_mel(sr / 2.0);
  std::vector<double> hz(static_cast<size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i)
    hz[static_cast<size_t>(i)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  Mat fb(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    double lo = hz[static_cast<size_t>(m)];
    double mid = hz[static_cast<size_t>(m + 1)];
    double hi = hz[static_cast<size_t>(m + 2)];
    for (int b = 0; b < n_bins; ++b) {
      double f = static_cast<double>(b) * sr / n_fft;
      double w = 0.0;
      if (f > lo && f < mid && mid > lo)
        w = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi && hi > mid)
        w = (hi - f) / (hi - mid);
      fb(m, b) = w;
    }
  }
  return fb;
}

// Log-mel token matrix (frames × n_mels) from a raw slice.
inline Mat log_mel_tokens(const float* samples, int n, int sr, int n_mels, const StftParams& p = {}) {
  Mat power = stft_power(samples, n, p);
  Mat fb = mel_filter_bank(n_mels, p.n_fft, sr);
  Mat tokens(power.rows, n_mels);
  for (int f = 0; f < power.rows; ++f)
    for (int m = 0; m < n_mels; ++m) {
      double e = 0.0;
      for (int b = 0; b < power.cols; ++b) e += fb(m, b) * power(f, b);
      tokens(f, m) = std::log(e + 1e-10);
    }
  return tokens;
}

}  // namespace hfn::signal
