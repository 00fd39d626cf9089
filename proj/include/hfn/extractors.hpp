/// Frozen per-clip feature extraction.
///
/// The video path mirrors a patch-embed + transformer-backbone stack:
/// a learned linear patch projection followed by a pluggable backbone
/// that reduces 4× patches to 32× feature maps. The audio path is
/// mel-spectrogram tokens followed by a pluggable pooled encoder. The
/// default backbones are synthetic (fixed-seed random projections), so
/// the full pipeline runs hermetically; real pretrained adapters can be
/// registered behind the same interface. Extractor parameters are never
/// exposed to the optimizer.
#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hfn/autodiff.hpp"
#include "hfn/core.hpp"
#include "hfn/signal.hpp"

namespace hfn {

constexpr int kPatchChannels = 96;   // patch embed dimension
constexpr int kClipDepth = 12;       // 24 frames, merged in pairs
constexpr int kPatchStride = 4;
constexpr int kBackboneStride = 32;

struct PatchEmbed {
  Tensor values;  // 12 × H/4 × W/4 × 96
};

struct VideoFeat {
  Tensor values;  // 12 × H/32 × W/32 × d_swin
};

using AudioTokens = Mat;  // mel frames × n_mels
using AudioFeat = Mat;    // 1 × d_clap

using FrozenParamList = std::vector<std::pair<std::string, const Mat*>>;

// Linear 3-d patch projection: 2×4×4×3 pixel blocks → 96 channels.
// Weights are fixed at construction and never trained.
class PatchEmbed3d {
 public:
  explicit PatchEmbed3d(uint64_t seed) {
    Rng rng = Rng::derive(seed, "patch_embed_3d");
    proj_ = glorot_mat(2 * kPatchStride * kPatchStride * 3, kPatchChannels, rng);
  }

  PatchEmbed forward(const uint8_t* frames, int n_frames, int h, int w) const {
    check_contract(n_frames % 2 == 0, "patch_embed_3d: frame count must be even");
    if (h % kBackboneStride != 0 || w % kBackboneStride != 0)
      fail_contract("patch_embed_3d: H and W must be divisible by " +
                    std::to_string(kBackboneStride) + ", got " + std::to_string(h) + "×" +
                    std::to_string(w));
    const int d = n_frames / 2;
    const int ph = h / kPatchStride;
    const int pw = w / kPatchStride;
    PatchEmbed out;
    out.values = Tensor({d, ph, pw, kPatchChannels});
    const int in_dim = proj_.rows;
    std::vector<double> patch(static_cast<size_t>(in_dim));
    auto px = [&](int t, int y, int x, int c) {
      size_t idx = ((static_cast<size_t>(t) * h + y) * w + x) * 3 + static_cast<size_t>(c);
      return static_cast<double>(frames[idx]) / 255.0;
    };
    for (int t = 0; t < d; ++t)
      for (int py = 0; py < ph; ++py)
        for (int pxi = 0; pxi < pw; ++pxi) {
          int n = 0;
          for (int dt = 0; dt < 2; ++dt)
            for (int dy = 0; dy < kPatchStride; ++dy)
              for (int dx = 0; dx < kPatchStride; ++dx)
                for (int c = 0; c < 3; ++c)
                  patch[static_cast<size_t>(n++)] =
                      px(2 * t + dt, py * kPatchStride + dy, pxi * kPatchStride + dx, c);
          double* dst = &out.values.data[(((static_cast<size_t>(t) * ph + py) * pw + pxi)) *
                                         kPatchChannels];
          for (int o = 0; o < kPatchChannels; ++o) {
            double s = 0.0;
            for (int i = 0; i < in_dim; ++i) s += patch[static_cast<size_t>(i)] * proj_(i, o);
            dst[o] = s;
          }
        }
    return out;
  }

  void collect_params(FrozenParamList& out) const { out.emplace_back("patch_embed.proj", &proj_); }

 private:
  Mat proj_;
};

// Backbone contract: deterministic, stateless forward from patch
// embeddings to 32×-downsampled feature maps.
class VideoBackbone {
 public:
  virtual ~VideoBackbone() = default;
  virtual std::string name() const = 0;
  virtual int feat_dim() const = 0;
  virtual Tensor forward(const Tensor& patches) const = 0;
  virtual void collect_params(FrozenParamList& out) const = 0;
};

// Fixed-seed stand-in for a pretrained spatiotemporal transformer:
// 8×8 spatial average pooling followed by a random channel projection.
class SyntheticVideoBackbone : public VideoBackbone {
 public:
  SyntheticVideoBackbone(int feat_dim, uint64_t seed) : feat_dim_(feat_dim) {
    Rng rng = Rng::derive(seed, "video_backbone");
    proj_ = glorot_mat(kPatchChannels, feat_dim, rng);
  }

  std::string name() const override { return "synthetic"; }
  int feat_dim() const override { return feat_dim_; }

  Tensor forward(const Tensor& patches) const override {
    check_contract(patches.shape.size() == 4 && patches.shape[3] == kPatchChannels,
                   "video backbone: expected depth×h×w×96 patches");
    const int d = patches.shape[0];
    const int ph = patches.shape[1];
    const int pw = patches.shape[2];
    const int stride = kBackboneStride / kPatchStride;
    check_contract(ph % stride == 0 && pw % stride == 0,
                   "video backbone: patch grid not divisible by pooling stride");
    const int oh = ph / stride;
    const int ow = pw / stride;
    Tensor out({d, oh, ow, feat_dim_});
    std::vector<double> pooled(kPatchChannels);
    for (int t = 0; t < d; ++t)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          std::fill(pooled.begin(), pooled.end(), 0.0);
          for (int dy = 0; dy < stride; ++dy)
            for (int dx = 0; dx < stride; ++dx) {
              const double* src =
                  &patches.data[(((static_cast<size_t>(t) * ph + oy * stride + dy) * pw +
                                  ox * stride + dx)) *
                                kPatchChannels];
              for (int c = 0; c < kPatchChannels; ++c) pooled[static_cast<size_t>(c)] += src[c];
            }
          double inv = 1.0 / (stride * stride);
          double* dst = &out.data[(((static_cast<size_t>(t) * oh + oy) * ow + ox)) *
                                  static_cast<size_t>(feat_dim_)];
          for (int o = 0; o < feat_dim_; ++o) {
            double s = 0.0;
            for (int c = 0; c < kPatchChannels; ++c) s += pooled[static_cast<size_t>(c)] * inv * proj_(c, o);
            dst[o] = s;
          }
        }
    return out;
  }

  void collect_params(FrozenParamList& out) const override {
    out.emplace_back("video_backbone.proj", &proj_);
  }

 private:
  int feat_dim_;
  Mat proj_;
};

inline VideoFeat extract_video_features(const PatchEmbed& p, const VideoBackbone& backbone) {
  Tensor out = backbone.forward(p.values);
  const int stride = kBackboneStride / kPatchStride;
  bool ok = out.shape.size() == 4 && out.shape[0] == p.values.shape[0] &&
            out.shape[1] == p.values.shape[1] / stride &&
            out.shape[2] == p.values.shape[2] / stride && out.shape[3] == backbone.feat_dim();
  check_contract(ok, "extract_video_features: backbone \"" + backbone.name() +
                         "\" violated its declared output shape");
  return VideoFeat{std::move(out)};
}

// Audio encoder contract: log-mel tokens in, one pooled vector out.
class AudioEncoder {
 public:
  virtual ~AudioEncoder() = default;
  virtual std::string name() const = 0;
  virtual int feat_dim() const = 0;
  virtual int n_mels() const = 0;
  virtual Mat encode(const Mat& tokens) const = 0;  // frames×n_mels → 1×d_clap
  virtual void collect_params(FrozenParamList& out) const = 0;
};

class SyntheticAudioEncoder : public AudioEncoder {
 public:
  SyntheticAudioEncoder(int n_mels, int feat_dim, uint64_t seed)
      : n_mels_(n_mels), feat_dim_(feat_dim) {
    Rng rng = Rng::derive(seed, "audio_encoder");
    proj_ = glorot_mat(n_mels, feat_dim, rng);
  }

  std::string name() const override { return "synthetic"; }
  int feat_dim() const override { return feat_dim_; }
  int n_mels() const override { return n_mels_; }

  Mat encode(const Mat& tokens) const override {
    check_contract(tokens.cols == n_mels_, "audio encoder: token width mismatch");
    check_contract(tokens.rows > 0, "audio encoder: empty token set");
    Mat pooled(1, n_mels_);
    for (int f = 0; f < tokens.rows; ++f)
      for (int m = 0; m < n_mels_; ++m) pooled(0, m) += tokens(f, m);
    for (double& v : pooled.a) v /= tokens.rows;
    return matmul(pooled, proj_);
  }

  void collect_params(FrozenParamList& out) const override {
    out.emplace_back("audio_encoder.proj", &proj_);
  }

 private:
  int n_mels_;
  int feat_dim_;
  Mat proj_;
};

struct AudioFeatures {
  AudioTokens tokens;
  AudioFeat feat;
};

inline AudioFeatures extract_audio_features(const float* slice, int n, int sr, int clip_seconds,
                                            const AudioEncoder& encoder,
                                            const signal::StftParams& stft = {}) {
  check_contract(n == clip_seconds * sr,
                 "extract_audio_features: slice must be exactly " + std::to_string(clip_seconds) +
                     "s (" + std::to_string(clip_seconds * sr) + " samples), got " +
                     std::to_string(n));
  AudioFeatures out;
  out.tokens = signal::log_mel_tokens(slice, n, sr, encoder.n_mels(), stft);
  out.feat = encoder.encode(out.tokens);
  return out;
}

// ---------------------------------------------------------------------------
// Pooling used by the trainable heads and the decision path.

// Average over every dimension except the last (channel) one.
inline Mat global_avg_pool(const Tensor& t) {
  check_contract(!t.shape.empty(), "global_avg_pool: empty tensor");
  int channels = t.shape.back();
  size_t groups = t.size() / static_cast<size_t>(channels);
  check_contract(groups > 0, "global_avg_pool: degenerate shape");
  Mat out(1, channels);
  for (size_t g = 0; g < groups; ++g)
    for (int c = 0; c < channels; ++c) out(0, c) += t.data[g * static_cast<size_t>(channels) + c];
  for (double& v : out.a) v /= static_cast<double>(groups);
  return out;
}

inline Mat mean_over_rows(const Mat& m) {
  check_contract(m.rows > 0, "mean_over_rows: empty matrix");
  Mat out(1, m.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out(0, j) += m(i, j);
  for (double& v : out.a) v /= m.rows;
  return out;
}

// ---------------------------------------------------------------------------
// Trainable heads: pool → norm → MLP (one hidden layer, ReLU).

struct HeadVars {
  ad::Var w1, b1, w2, b2;
};

// rows×in_dim pooled features → rows×out_dim clip vectors.
inline ad::Var head_forward(ad::Tape& tape, ad::Var pooled, const HeadVars& h,
                            double ln_eps = 1e-5) {
  ad::Var x = tape.layer_norm(pooled, ln_eps);
  x = tape.add_row_broadcast(tape.matmul(x, h.w1), h.b1);
  x = tape.relu(x);
  return tape.add_row_broadcast(tape.matmul(x, h.w2), h.b2);
}

// Standalone single-clip head over a full feature tensor (the in-graph
// path pools once per clip set and calls head_forward directly).
inline Mat i3d_head_forward(const VideoFeat& v, const Mat& w1, const Mat& b1, const Mat& w2,
                            const Mat& b2, double ln_eps = 1e-5) {
  Mat pooled = global_avg_pool(v.values);
  check_contract(all_finite(pooled), "i3d_head: non-finite input");
  ad::Tape tape;
  HeadVars h{tape.leaf(w1, false), tape.leaf(b1, false), tape.leaf(w2, false),
             tape.leaf(b2, false)};
  ad::Var out = head_forward(tape, tape.leaf(pooled, false), h, ln_eps);
  return tape.value(out);
}

inline Mat audio_head_forward(const AudioFeat& a, const Mat& w1, const Mat& b1, const Mat& w2,
                              const Mat& b2, double ln_eps = 1e-5) {
  check_contract(a.rows == 1, "audio_head: expected a single pooled vector per clip");
  check_contract(all_finite(a), "audio_head: non-finite input");
  ad::Tape tape;
  HeadVars h{tape.leaf(w1, false), tape.leaf(b1, false), tape.leaf(w2, false),
             tape.leaf(b2, false)};
  ad::Var out = head_forward(tape, tape.leaf(a, false), h, ln_eps);
  return tape.value(out);
}

// ---------------------------------------------------------------------------
// Registry

struct ExtractorConfig {
  int d_swin = 64;
  int d_clap = 64;
  int n_mels = 64;
  uint64_t seed = 0;
};

inline std::unique_ptr<VideoBackbone> make_video_backbone(const std::string& name,
                                                          const ExtractorConfig& cfg) {
  if (name == "synthetic") return std::make_unique<SyntheticVideoBackbone>(cfg.d_swin, cfg.seed);
  fail_validation("unknown video backbone \"" + name + "\" (available: synthetic)");
}

inline std::unique_ptr<AudioEncoder> make_audio_encoder(const std::string& name,
                                                        const ExtractorConfig& cfg) {
  if (name == "synthetic")
    return std::make_unique<SyntheticAudioEncoder>(cfg.n_mels, cfg.d_clap, cfg.seed);
  fail_validation("unknown audio encoder \"" + name + "\" (available: synthetic)");
}

}  // namespace hfn
