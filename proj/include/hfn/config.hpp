/// Run configuration: a flat key=value text format with defaults for
/// every key, strict unknown-key rejection with near-miss suggestions,
/// command-line overrides, and a canonical content hash written next to
/// every run's outputs.
#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hfn/core.hpp"
#include "hfn/evaluation.hpp"
#include "hfn/model.hpp"
#include "hfn/pipeline.hpp"
#include "hfn/training.hpp"

namespace hfn {

struct RunConfig {
  // dataset
  std::string dataset = "manifest";  // manifest | synthetic
  std::string manifest;
  std::string media_root;
  std::string cache_dir;
  bool use_cache = true;
  std::string out_dir = "out";
  // synthetic benchmark
  int synthetic_n = 600;
  int synthetic_clips = 4;
  std::string synthetic_planted = "video";
  double synthetic_noise = 0.5;
  int synthetic_frame_size = 32;
  // segmentation / extraction
  int fps = 3;
  int clip_seconds = 8;
  int sr = 16000;
  int crop = 224;
  int n_fft = 256;
  int hop = 128;
  int n_mels = 64;
  std::string video_backbone = "synthetic";
  std::string audio_encoder = "synthetic";
  std::string text_encoder = "hashed_ngram";
  // model dims
  int d_swin = 64;
  int d_clap = 64;
  int d = 128;
  int h = 32;  // decision-net hidden width
  int n_h = 4;
  int d_h = 128;
  int d_text = 64;
  int d_f = 128;
  double dropout = 0.1;
  std::string fusion = "wmff";
  bool use_decision_net = true;
  // labels
  int n_classes = 2;
  bool merge_ambiguous = false;
  // training
  int batch_size = 8;
  int max_epochs = 150;
  int patience = 30;
  double lr = 1e-4;
  double lr_min = 1e-6;
  double weight_decay = 5e-5;
  int repetitions = 3;
  uint64_t seed = 42;

  static const std::vector<std::string>& known_keys();
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  std::string canonical() const;
  std::string hash() const { return hash_hex(fnv1a64(canonical())); }
  // Hash over only the keys that determine parameter shapes; checkpoints
  // store this one so that path-only config changes stay compatible.
  std::string model_hash() const {
    static const char* keys[] = {"d_swin", "d_clap", "n_mels", "d", "h", "n_h", "d_h",
                                 "d_text", "d_f", "n_classes", "fusion", "use_decision_net"};
    std::string s;
    for (const char* k : keys) s += std::string(k) + "=" + get(k) + "\n";
    return hash_hex(fnv1a64(s));
  }
  void validate() const;

  ModelConfig model_config() const {
    ModelConfig mc;
    mc.d_swin = d_swin;
    mc.d_clap = d_clap;
    mc.n_mels = n_mels;
    mc.d = d;
    mc.dn_hidden = h;
    mc.n_heads = n_h;
    mc.d_h = d_h;
    mc.d_text = d_text;
    mc.d_f = d_f;
    mc.n_classes = n_classes;
    mc.dropout = dropout;
    mc.fusion = parse_fusion_kind(fusion);
    mc.use_decision_net = use_decision_net;
    mc.seed = seed;
    return mc;
  }

  TrainConfig train_config() const {
    TrainConfig tc;
    tc.batch_size = batch_size;
    tc.max_epochs = max_epochs;
    tc.patience = patience;
    tc.lr = lr;
    tc.lr_min = lr_min;
    tc.weight_decay = weight_decay;
    tc.seed = seed;
    tc.crop = crop;
    tc.fps = fps;
    return tc;
  }

  PipelineConfig pipeline_config() const {
    PipelineConfig pc;
    pc.segment = {fps, clip_seconds, sr};
    pc.stft = {n_fft, hop};
    pc.ext = {d_swin, d_clap, n_mels, seed};
    pc.video_backbone = video_backbone;
    pc.audio_encoder = audio_encoder;
    pc.text_encoder = text_encoder;
    pc.d_text = d_text;
    pc.n_classes = n_classes;
    pc.merge_ambiguous = merge_ambiguous;
    pc.media_root = media_root;
    pc.cache_dir = cache_dir;
    pc.use_cache = use_cache;
    return pc;
  }

  SyntheticSpec synthetic_spec() const {
    SyntheticSpec s;
    s.n = synthetic_n;
    s.clips = synthetic_clips;
    s.planted = synthetic_planted == "audio" ? PlantedModality::audio : PlantedModality::video;
    s.noise = synthetic_noise;
    s.n_classes = n_classes;
    s.seed = seed;
    s.frame_size = synthetic_frame_size;
    s.fps = fps;
    s.clip_seconds = clip_seconds;
    s.sr = sr;
    return s;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline int edit_distance(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= b.size(); ++j) {
      int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline long long parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail_validation("config key \"" + key + "\": cannot parse integer from \"" + value + "\"");
  }
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail_validation("config key \"" + key + "\": cannot parse number from \"" + value + "\"");
  }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  fail_validation("config key \"" + key + "\": cannot parse boolean from \"" + value + "\"");
}

}  // namespace detail

inline const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = {
      "dataset",       "manifest",       "media_root",     "cache_dir",
      "use_cache",     "out_dir",        "synthetic_n",    "synthetic_clips",
      "synthetic_planted", "synthetic_noise", "synthetic_frame_size",
      "fps",           "clip_seconds",   "sr",             "crop",
      "n_fft",         "hop",            "n_mels",         "video_backbone",
      "audio_encoder", "text_encoder",   "d_swin",         "d_clap",
      "d",             "h",              "n_h",            "d_h",
      "d_text",        "d_f",            "dropout",        "fusion",
      "use_decision_net", "n_classes",   "merge_ambiguous", "batch_size",
      "max_epochs",    "patience",       "lr",             "lr_min",
      "weight_decay",  "repetitions",    "seed"};
  return keys;
}

inline void RunConfig::set(const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  if (key == "dataset") dataset = value;
  else if (key == "manifest") manifest = value;
  else if (key == "media_root") media_root = value;
  else if (key == "cache_dir") cache_dir = value;
  else if (key == "use_cache") use_cache = parse_bool(key, value);
  else if (key == "out_dir") out_dir = value;
  else if (key == "synthetic_n") synthetic_n = static_cast<int>(parse_int(key, value));
  else if (key == "synthetic_clips") synthetic_clips = static_cast<int>(parse_int(key, value));
  else if (key == "synthetic_planted") synthetic_planted = value;
  else if (key == "synthetic_noise") synthetic_noise = parse_double(key, value);
  else if (key == "synthetic_frame_size") synthetic_frame_size = static_cast<int>(parse_int(key, value));
  else if (key == "fps") fps = static_cast<int>(parse_int(key, value));
  else if (key == "clip_seconds") clip_seconds = static_cast<int>(parse_int(key, value));
  else if (key == "sr") sr = static_cast<int>(parse_int(key, value));
  else if (key == "crop") crop = static_cast<int>(parse_int(key, value));
  else if (key == "n_fft") n_fft = static_cast<int>(parse_int(key, value));
  else if (key == "hop") hop = static_cast<int>(parse_int(key, value));
  else if (key == "n_mels") n_mels = static_cast<int>(parse_int(key, value));
  else if (key == "video_backbone") video_backbone = value;
  else if (key == "audio_encoder") audio_encoder = value;
  else if (key == "text_encoder") text_encoder = value;
  else if (key == "d_swin") d_swin = static_cast<int>(parse_int(key, value));
  else if (key == "d_clap") d_clap = static_cast<int>(parse_int(key, value));
  else if (key == "d") d = static_cast<int>(parse_int(key, value));
  else if (key == "h") h = static_cast<int>(parse_int(key, value));
  else if (key == "n_h") n_h = static_cast<int>(parse_int(key, value));
  else if (key == "d_h") d_h = static_cast<int>(parse_int(key, value));
  else if (key == "d_text") d_text = static_cast<int>(parse_int(key, value));
  else if (key == "d_f") d_f = static_cast<int>(parse_int(key, value));
  else if (key == "dropout") dropout = parse_double(key, value);
  else if (key == "fusion") fusion = value;
  else if (key == "use_decision_net") use_decision_net = parse_bool(key, value);
  else if (key == "n_classes") n_classes = static_cast<int>(parse_int(key, value));
  else if (key == "merge_ambiguous") merge_ambiguous = parse_bool(key, value);
  else if (key == "batch_size") batch_size = static_cast<int>(parse_int(key, value));
  else if (key == "max_epochs") max_epochs = static_cast<int>(parse_int(key, value));
  else if (key == "patience") patience = static_cast<int>(parse_int(key, value));
  else if (key == "lr") lr = parse_double(key, value);
  else if (key == "lr_min") lr_min = parse_double(key, value);
  else if (key == "weight_decay") weight_decay = parse_double(key, value);
  else if (key == "repetitions") repetitions = static_cast<int>(parse_int(key, value));
  else if (key == "seed") seed = static_cast<uint64_t>(parse_int(key, value));
  else {
    // Unknown key: suggest the closest known one.
    std::string best;
    int best_dist = 1 << 30;
    for (const auto& k : known_keys()) {
      int dst = detail::edit_distance(key, k);
      if (dst < best_dist) {
        best_dist = dst;
        best = k;
      }
    }
    std::string msg = "unknown config key \"" + key + "\"";
    if (best_dist <= 3) msg += " (did you mean \"" + best + "\"?)";
    fail_validation(msg);
  }
}

inline std::string RunConfig::get(const std::string& key) const {
  using detail::fmt_double;
  if (key == "dataset") return dataset;
  if (key == "manifest") return manifest;
  if (key == "media_root") return media_root;
  if (key == "cache_dir") return cache_dir;
  if (key == "use_cache") return use_cache ? "true" : "false";
  if (key == "out_dir") return out_dir;
  if (key == "synthetic_n") return std::to_string(synthetic_n);
  if (key == "synthetic_clips") return std::to_string(synthetic_clips);
  if (key == "synthetic_planted") return synthetic_planted;
  if (key == "synthetic_noise") return fmt_double(synthetic_noise);
  if (key == "synthetic_frame_size") return std::to_string(synthetic_frame_size);
  if (key == "fps") return std::to_string(fps);
  if (key == "clip_seconds") return std::to_string(clip_seconds);
  if (key == "sr") return std::to_string(sr);
  if (key == "crop") return std::to_string(crop);
  if (key == "n_fft") return std::to_string(n_fft);
  if (key == "hop") return std::to_string(hop);
  if (key == "n_mels") return std::to_string(n_mels);
  if (key == "video_backbone") return video_backbone;
  if (key == "audio_encoder") return audio_encoder;
  if (key == "text_encoder") return text_encoder;
  if (key == "d_swin") return std::to_string(d_swin);
  if (key == "d_clap") return std::to_string(d_clap);
  if (key == "d") return std::to_string(d);
  if (key == "h") return std::to_string(h);
  if (key == "n_h") return std::to_string(n_h);
  if (key == "d_h") return std::to_string(d_h);
  if (key == "d_text") return std::to_string(d_text);
  if (key == "d_f") return std::to_string(d_f);
  if (key == "dropout") return fmt_double(dropout);
  if (key == "fusion") return fusion;
  if (key == "use_decision_net") return use_decision_net ? "true" : "false";
  if (key == "n_classes") return std::to_string(n_classes);
  if (key == "merge_ambiguous") return merge_ambiguous ? "true" : "false";
  if (key == "batch_size") return std::to_string(batch_size);
  if (key == "max_epochs") return std::to_string(max_epochs);
  if (key == "patience") return std::to_string(patience);
  if (key == "lr") return fmt_double(lr);
  if (key == "lr_min") return fmt_double(lr_min);
  if (key == "weight_decay") return fmt_double(weight_decay);
  if (key == "repetitions") return std::to_string(repetitions);
  if (key == "seed") return std::to_string(seed);
  fail_contract("RunConfig::get: unhandled key " + key);
}

inline std::string RunConfig::canonical() const {
  std::vector<std::string> keys = known_keys();
  std::sort(keys.begin(), keys.end());
  std::string out;
  for (const auto& k : keys) out += k + "=" + get(k) + "\n";
  return out;
}

inline void RunConfig::validate() const {
  if (dataset != "manifest" && dataset != "synthetic")
    fail_validation("config: dataset must be \"manifest\" or \"synthetic\"");
  if (synthetic_planted != "video" && synthetic_planted != "audio")
    fail_validation("config: synthetic_planted must be \"video\" or \"audio\"");
  if (n_classes != 2 && n_classes != 3) fail_validation("config: n_classes must be 2 or 3");
  if (!(lr_min < lr)) fail_validation("config: lr_min must be below lr");
  if (!(patience < max_epochs)) fail_validation("config: patience must be below max_epochs");
  if (batch_size < 1) fail_validation("config: batch_size must be positive");
  if (repetitions < 1) fail_validation("config: repetitions must be positive");
  if (fusion == "wmff" || fusion == "cross_attn") {
    if (n_h < 1 || d % n_h != 0) fail_validation("config: d must be divisible by n_h");
  }
  parse_fusion_kind(fusion);
  if (dropout < 0.0 || dropout >= 1.0) fail_validation("config: dropout must be in [0,1)");
  if (crop % 32 != 0) fail_validation("config: crop must be divisible by 32");
  if (!signal::is_pow2(n_fft)) fail_validation("config: n_fft must be a power of two");
}

// File plus overrides; overrides win over the file, the file over
// defaults. Lines are `key = value`; # starts a comment.
inline RunConfig parse_config(const std::string& path = "",
                              const std::vector<std::string>& overrides = {}) {
  RunConfig cfg;
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) fail_io("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      size_t hash_pos = line.find('#');
      if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
      line = detail::trim(line);
      if (line.empty()) continue;
      size_t eq = line.find('=');
      if (eq == std::string::npos)
        fail_validation("config line " + std::to_string(lineno) + " is not key=value: " + line);
      cfg.set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
  }
  for (const auto& ov : overrides) {
    size_t eq = ov.find('=');
    if (eq == std::string::npos)
      fail_validation("override is not key=value: " + ov);
    cfg.set(detail::trim(ov.substr(0, eq)), detail::trim(ov.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

}  // namespace hfn
