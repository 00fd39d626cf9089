/// Bridges raw records to model inputs: runs the frozen extractors per
/// clip, encodes the expanded text, and caches the resulting feature
/// tensors on disk keyed by (extractor identity, content hash).
#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "hfn/dataset.hpp"
#include "hfn/extractors.hpp"
#include "hfn/io.hpp"
#include "hfn/model.hpp"
#include "hfn/text_encoder.hpp"

namespace hfn {

struct PipelineConfig {
  SegmentParams segment;
  signal::StftParams stft;
  ExtractorConfig ext;
  std::string video_backbone = "synthetic";
  std::string audio_encoder = "synthetic";
  std::string text_encoder = "hashed_ngram";
  int d_text = 64;
  int n_classes = 2;
  bool merge_ambiguous = false;
  std::string media_root;
  std::string cache_dir;   // empty → caching disabled
  bool use_cache = true;
};

class Featurizer {
 public:
  explicit Featurizer(const PipelineConfig& cfg)
      : cfg_(cfg),
        patch_embed_(cfg.ext.seed),
        video_backbone_(make_video_backbone(cfg.video_backbone, cfg.ext)),
        audio_encoder_(make_audio_encoder(cfg.audio_encoder, cfg.ext)),
        text_encoder_(make_text_encoder(cfg.text_encoder, cfg.d_text, cfg.ext.seed)) {
    if (caching()) std::filesystem::create_directories(cfg_.cache_dir);
  }

  const PipelineConfig& config() const { return cfg_; }
  const VideoBackbone& video_backbone() const { return *video_backbone_; }
  const AudioEncoder& audio_encoder() const { return *audio_encoder_; }
  const TextEncoder& text_encoder() const { return *text_encoder_; }
  const PatchEmbed3d& patch_embed() const { return patch_embed_; }

  FrozenParamList frozen_params() const {
    FrozenParamList out;
    patch_embed_.collect_params(out);
    video_backbone_->collect_params(out);
    audio_encoder_->collect_params(out);
    text_encoder_->collect_params(out);
    return out;
  }

  uint64_t frozen_hash() const {
    uint64_t h = 1469598103934665603ull;
    for (const auto& [name, mat] : frozen_params()) {
      h = fnv1a64(name, h);
      h = hash_mat(*mat, h);
    }
    return h;
  }

  size_t frozen_scalar_count() const {
    size_t n = 0;
    for (const auto& [name, mat] : frozen_params()) n += mat->size();
    return n;
  }

  ModelInput featurize(const VideoRecord& record) const {
    FrameArray frames = resolve_frames(record, cfg_.media_root);
    Waveform audio = resolve_audio(record, cfg_.media_root);
    if (frames.empty() && audio.empty())
      fail_validation("record \"" + record.id + "\" has no media; the model needs video or audio");
    ClipSet clips = segment_clips(frames, audio, cfg_.segment);

    ModelInput in;
    in.id = record.id;
    in.label = record.label;
    in.target = class_index(record.label, cfg_.n_classes, cfg_.merge_ambiguous);
    in.k = clips.k;
    in.pad_mask = clips.pad_mask;
    in.clip_index = clips.clip_index;
    in.video_present = clips.video_present;
    in.audio_present = clips.audio_present;

    if (clips.video_present) {
      uint64_t key = video_cache_key(frames);
      if (!load_cached("video", key, {{"video_pooled", &in.video_pooled},
                                      {"patch_pooled", &in.patch_pooled}})) {
        extract_video(clips, in);
        store_cached("video", key, {{"video_pooled", &in.video_pooled},
                                    {"patch_pooled", &in.patch_pooled}});
      }
    } else {
      in.video_pooled = Mat(clips.k, cfg_.ext.d_swin);
      in.patch_pooled = Mat(clips.k, kPatchChannels);
    }

    if (clips.audio_present) {
      uint64_t key = audio_cache_key(audio);
      if (!load_cached("audio", key, {{"audio_pooled", &in.audio_pooled},
                                      {"tokens_pooled", &in.tokens_pooled}})) {
        extract_audio(clips, in);
        store_cached("audio", key, {{"audio_pooled", &in.audio_pooled},
                                    {"tokens_pooled", &in.tokens_pooled}});
      }
    } else {
      in.audio_pooled = Mat(clips.k, cfg_.ext.d_clap);
      in.tokens_pooled = Mat(clips.k, cfg_.ext.n_mels);
    }

    std::string sentence = expand_text(record);
    TextFeature tf = encode_text(sentence, *text_encoder_);
    in.text_vec = tf.values;
    in.text_present = tf.present;
    return in;
  }

  std::vector<ModelInput> featurize_all(const std::vector<VideoRecord>& records) const {
    std::vector<ModelInput> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(featurize(r));
    return out;
  }

 private:
  PipelineConfig cfg_;
  PatchEmbed3d patch_embed_;
  std::unique_ptr<VideoBackbone> video_backbone_;
  std::unique_ptr<AudioEncoder> audio_encoder_;
  std::unique_ptr<TextEncoder> text_encoder_;

  bool caching() const { return cfg_.use_cache && !cfg_.cache_dir.empty(); }

  uint64_t extractor_fingerprint() const {
    uint64_t h = fnv1a64(cfg_.video_backbone);
    h = fnv1a64(cfg_.audio_encoder, h);
    h = fnv1a64(&cfg_.ext.d_swin, sizeof(int), h);
    h = fnv1a64(&cfg_.ext.d_clap, sizeof(int), h);
    h = fnv1a64(&cfg_.ext.n_mels, sizeof(int), h);
    h = fnv1a64(&cfg_.ext.seed, sizeof(uint64_t), h);
    h = fnv1a64(&cfg_.segment.fps, sizeof(int), h);
    h = fnv1a64(&cfg_.segment.clip_seconds, sizeof(int), h);
    h = fnv1a64(&cfg_.segment.sr, sizeof(int), h);
    h = fnv1a64(&cfg_.stft.n_fft, sizeof(int), h);
    h = fnv1a64(&cfg_.stft.hop, sizeof(int), h);
    return h;
  }

  uint64_t video_cache_key(const FrameArray& f) const {
    return hash_frames(f) ^ extractor_fingerprint();
  }
  uint64_t audio_cache_key(const Waveform& w) const {
    return hash_waveform(w) ^ extractor_fingerprint();
  }

  std::string cache_path(const std::string& kind, uint64_t key) const {
    return cfg_.cache_dir + "/" + kind + "_" + (kind == "video" ? video_backbone_->name()
                                                                : audio_encoder_->name()) +
           "_" + hash_hex(key) + ".hfnt";
  }

  static Mat mat_from_tensor(const Tensor& t) {
    check_contract(t.shape.size() == 2, "cache entry is not a matrix");
    Mat m(t.shape[0], t.shape[1]);
    m.a = t.data;
    return m;
  }

  static Tensor tensor_from_mat(const Mat& m) {
    Tensor t({m.rows, m.cols});
    t.data = m.a;
    return t;
  }

  bool load_cached(const std::string& kind, uint64_t key,
                   std::vector<std::pair<std::string, Mat*>> slots) const {
    if (!caching()) return false;
    std::string path = cache_path(kind, key);
    if (!std::filesystem::exists(path)) return false;
    std::vector<NamedTensor> tensors = load_tensors(path);
    for (auto& [name, dst] : slots) {
      bool found = false;
      for (const auto& nt : tensors)
        if (nt.name == name) {
          *dst = mat_from_tensor(nt.tensor);
          found = true;
        }
      if (!found) return false;
    }
    return true;
  }

  void store_cached(const std::string& kind, uint64_t key,
                    std::vector<std::pair<std::string, Mat*>> slots) const {
    if (!caching()) return;
    std::vector<NamedTensor> tensors;
    for (auto& [name, src] : slots) tensors.push_back({name, tensor_from_mat(*src)});
    save_tensors(cache_path(kind, key), tensors);
  }

  void extract_video(const ClipSet& clips, ModelInput& in) const {
    in.video_pooled = Mat(clips.k, cfg_.ext.d_swin);
    in.patch_pooled = Mat(clips.k, kPatchChannels);
    for (int i = 0; i < clips.k; ++i) {
      PatchEmbed pe = patch_embed_.forward(clips.clip_frames(i), clips.frames_per_clip, clips.h,
                                           clips.w);
      Mat pp = global_avg_pool(pe.values);
      for (int j = 0; j < kPatchChannels; ++j) in.patch_pooled(i, j) = pp(0, j);
      VideoFeat vf = extract_video_features(pe, *video_backbone_);
      Mat vp = global_avg_pool(vf.values);
      for (int j = 0; j < cfg_.ext.d_swin; ++j) in.video_pooled(i, j) = vp(0, j);
    }
  }

  void extract_audio(const ClipSet& clips, ModelInput& in) const {
    in.audio_pooled = Mat(clips.k, cfg_.ext.d_clap);
    in.tokens_pooled = Mat(clips.k, cfg_.ext.n_mels);
    for (int i = 0; i < clips.k; ++i) {
      AudioFeatures af = extract_audio_features(clips.clip_audio(i), clips.samples_per_clip,
                                                cfg_.segment.sr, cfg_.segment.clip_seconds,
                                                *audio_encoder_, cfg_.stft);
      Mat tp = mean_over_rows(af.tokens);
      for (int j = 0; j < cfg_.ext.n_mels; ++j) in.tokens_pooled(i, j) = tp(0, j);
      for (int j = 0; j < cfg_.ext.d_clap; ++j) in.audio_pooled(i, j) = af.feat(0, j);
    }
  }
};

}  // namespace hfn
