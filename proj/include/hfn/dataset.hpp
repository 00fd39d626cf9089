/// Manifest ingestion, clip/audio segmentation, text expansion and
/// k-fold planning: everything between raw sample lists and the
/// model-ready per-clip representation.
#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hfn/core.hpp"
#include "hfn/io.hpp"

namespace hfn {

enum class Label { fake = 0, real = 1, ambiguous = 2 };

inline std::string label_name(Label l) {
  switch (l) {
    case Label::fake: return "Fake";
    case Label::real: return "Real";
    case Label::ambiguous: return "Ambiguous";
  }
  return "?";
}

inline Label parse_label(const std::string& s) {
  std::string low;
  low.reserve(s.size());
  for (char c : s) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (low == "fake") return Label::fake;
  if (low == "real") return Label::real;
  if (low == "ambiguous") return Label::ambiguous;
  fail_validation("unknown label \"" + s + "\" (expected Fake, Real, or Ambiguous)");
}

// Maps a label to a class index under the configured vocabulary.
// 3-class: Fake=0, Real=1, Ambiguous=2. 2-class: Fake=0, Real=1, with
// Ambiguous folded into Fake only when merge_ambiguous is set.
inline int class_index(Label l, int n_classes, bool merge_ambiguous) {
  if (n_classes == 3) return static_cast<int>(l);
  check_contract(n_classes == 2, "class_index: n_classes must be 2 or 3");
  if (l == Label::ambiguous) {
    if (merge_ambiguous) return 0;
    fail_validation("Ambiguous label encountered in 2-class mode without merge_ambiguous");
  }
  return static_cast<int>(l);
}

inline std::vector<std::string> class_names(int n_classes, bool merge_ambiguous) {
  if (n_classes == 3) return {"Fake", "Real", "Ambiguous"};
  if (merge_ambiguous) return {"Fake(+Ambiguous)", "Real"};
  return {"Fake", "Real"};
}

struct VideoRecord {
  std::string id;
  std::string frames_path;
  FrameArray frames_inline;
  bool has_inline_frames = false;
  std::string audio_path;
  Waveform audio_inline;
  bool has_inline_audio = false;
  std::string transcript;
  std::string caption;
  std::vector<std::string> hashtags;
  std::string username;
  std::string url;
  std::string publish_date;
  Label label = Label::fake;

  bool has_video() const { return has_inline_frames || !frames_path.empty(); }
  bool has_audio() const { return has_inline_audio || !audio_path.empty(); }
  bool has_text() const {
    return !transcript.empty() || !caption.empty() || !hashtags.empty() || !username.empty() ||
           !url.empty();
  }
};

inline void validate_record(const VideoRecord& r, int line = -1) {
  auto where = [&]() { return line >= 0 ? " (line " + std::to_string(line) + ")" : std::string(); };
  if (r.id.empty()) fail_validation("record with empty id" + where());
  if (!r.has_video() && !r.has_audio() && !r.has_text())
    fail_validation("record \"" + r.id + "\" has no media and no text" + where());
}

namespace detail {

inline FrameArray frames_from_json(const nlohmann::json& j, int line) {
  // Nested array: frames[t][y][x] = [r, g, b]
  FrameArray f;
  f.t = static_cast<int>(j.size());
  if (f.t == 0) return f;
  f.h = static_cast<int>(j[0].size());
  f.w = f.h > 0 ? static_cast<int>(j[0][0].size()) : 0;
  f.px.reserve(f.expected_size());
  for (const auto& frame : j) {
    if (static_cast<int>(frame.size()) != f.h)
      fail_validation("ragged inline frame array (line " + std::to_string(line) + ")");
    for (const auto& row : frame) {
      if (static_cast<int>(row.size()) != f.w)
        fail_validation("ragged inline frame array (line " + std::to_string(line) + ")");
      for (const auto& pix : row) {
        if (pix.size() != 3)
          fail_validation("inline pixel must have 3 channels (line " + std::to_string(line) + ")");
        for (const auto& ch : pix) {
          int v = ch.get<int>();
          if (v < 0 || v > 255)
            fail_validation("pixel value out of [0,255] (line " + std::to_string(line) + ")");
          f.px.push_back(static_cast<uint8_t>(v));
        }
      }
    }
  }
  return f;
}

}  // namespace detail

// One JSON object per line. Media may be referenced by relative path
// (resolved later against a media root) or inlined.
inline std::vector<VideoRecord> load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail_io("cannot open manifest: " + path);
  std::vector<VideoRecord> records;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    bool blank = true;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (blank) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail_validation("manifest parse error at line " + std::to_string(lineno) + ": " + e.what());
    }
    VideoRecord r;
    try {
      r.id = j.value("id", "");
      if (j.contains("frames_ref") && !j["frames_ref"].is_null()) {
        if (j["frames_ref"].is_string()) {
          r.frames_path = j["frames_ref"].get<std::string>();
        } else {
          r.frames_inline = detail::frames_from_json(j["frames_ref"], lineno);
          r.has_inline_frames = !r.frames_inline.empty();
        }
      }
      if (j.contains("audio_ref") && !j["audio_ref"].is_null()) {
        if (j["audio_ref"].is_string()) {
          r.audio_path = j["audio_ref"].get<std::string>();
        } else {
          const auto& a = j["audio_ref"];
          r.audio_inline.sr = a.value("sr", 0);
          for (const auto& s : a["samples"]) r.audio_inline.samples.push_back(s.get<float>());
          r.has_inline_audio = !r.audio_inline.samples.empty();
        }
      }
      r.transcript = j.value("transcript", "");
      r.caption = j.value("caption", "");
      if (j.contains("hashtags"))
        for (const auto& h : j["hashtags"]) r.hashtags.push_back(h.get<std::string>());
      r.username = j.value("username", "");
      r.url = j.value("url", "");
      r.publish_date = j.value("publish_date", "");
      if (!j.contains("label"))
        fail_validation("missing label at line " + std::to_string(lineno));
      r.label = parse_label(j["label"].get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      fail_validation("manifest field error at line " + std::to_string(lineno) + ": " + e.what());
    }
    validate_record(r, lineno);
    if (!seen.insert(r.id).second)
      fail_validation("duplicate id \"" + r.id + "\" at line " + std::to_string(lineno));
    records.push_back(std::move(r));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Clip segmentation

struct SegmentParams {
  int fps = 3;
  int clip_seconds = 8;
  int sr = 16000;

  int frames_per_clip() const { return fps * clip_seconds; }
  int samples_per_clip() const { return clip_seconds * sr; }
};

struct ClipSet {
  int k = 0;
  int h = 0;
  int w = 0;
  int sr = 0;
  int frames_per_clip = 0;
  int samples_per_clip = 0;
  std::vector<uint8_t> frames;   // k * frames_per_clip * h * w * 3, zero-padded
  std::vector<float> audio;      // k * samples_per_clip, zero-padded
  std::vector<uint8_t> pad_mask; // per clip: nonzero = clip is padding only
  bool video_present = false;
  bool audio_present = false;
  std::vector<int> clip_index;   // 0..k-1

  const uint8_t* clip_frames(int i) const {
    return frames.data() + static_cast<size_t>(i) * frames_per_clip * h * w * 3;
  }
  const float* clip_audio(int i) const {
    return audio.data() + static_cast<size_t>(i) * samples_per_clip;
  }
};

inline std::string join_path(const std::string& root, const std::string& rel) {
  if (root.empty() || rel.empty() || rel.front() == '/') return rel;
  if (root.back() == '/') return root + rel;
  return root + "/" + rel;
}

inline FrameArray resolve_frames(const VideoRecord& r, const std::string& media_root = "") {
  if (r.has_inline_frames) return r.frames_inline;
  if (!r.frames_path.empty()) return load_frames(join_path(media_root, r.frames_path));
  return {};
}

inline Waveform resolve_audio(const VideoRecord& r, const std::string& media_root = "") {
  if (r.has_inline_audio) return r.audio_inline;
  if (!r.audio_path.empty()) return load_waveform(join_path(media_root, r.audio_path));
  return {};
}

// Segments pre-resampled media into aligned 8-second clips. The last
// clip of each modality is zero-padded; a duration mismatch of more
// than one clip between modalities is rejected.
inline ClipSet segment_clips(const FrameArray& frames, const Waveform& audio,
                             const SegmentParams& p = {}) {
  const int fpc = p.frames_per_clip();
  const int spc = p.samples_per_clip();
  bool video = !frames.empty();
  bool has_audio = !audio.empty();
  if (!video && !has_audio) fail_validation("segment_clips: both media absent");

  int kv = video ? (frames.t + fpc - 1) / fpc : 0;
  int ka = has_audio ? (static_cast<int>(audio.samples.size()) + spc - 1) / spc : 0;

  int k = 0;
  if (video && has_audio) {
    if (std::abs(kv - ka) > 1)
      fail_validation("segment_clips: video/audio durations differ by more than one clip (" +
                      std::to_string(kv) + " vs " + std::to_string(ka) + " clips)");
    k = std::min(kv, ka);  // mismatch of one clip: truncate to the shorter modality
  } else {
    k = video ? kv : ka;
  }
  check_contract(k >= 1, "segment_clips: zero-length media");

  ClipSet cs;
  cs.k = k;
  cs.h = frames.h;
  cs.w = frames.w;
  cs.sr = p.sr;
  cs.frames_per_clip = fpc;
  cs.samples_per_clip = spc;
  cs.video_present = video;
  cs.audio_present = has_audio;
  cs.pad_mask.assign(static_cast<size_t>(k), 0);
  cs.clip_index.resize(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) cs.clip_index[static_cast<size_t>(i)] = i;

  cs.frames.assign(static_cast<size_t>(k) * fpc * frames.h * frames.w * 3, 0);
  if (video) {
    size_t frame_bytes = static_cast<size_t>(frames.h) * frames.w * 3;
    int usable = std::min(frames.t, k * fpc);
    std::copy(frames.px.begin(), frames.px.begin() + static_cast<long>(usable * frame_bytes),
              cs.frames.begin());
  }
  cs.audio.assign(static_cast<size_t>(k) * spc, 0.0f);
  if (has_audio) {
    size_t usable = std::min(audio.samples.size(), static_cast<size_t>(k) * spc);
    std::copy(audio.samples.begin(), audio.samples.begin() + static_cast<long>(usable),
              cs.audio.begin());
  }
  return cs;
}

inline ClipSet segment_clips(const VideoRecord& record, const SegmentParams& p = {},
                             const std::string& media_root = "") {
  return segment_clips(resolve_frames(record, media_root), resolve_audio(record, media_root), p);
}

// ---------------------------------------------------------------------------
// Text expansion

// Expands metadata tags into plain sentences, then appends caption and
// transcript verbatim. Deterministic; absent fields produce nothing.
inline std::string expand_text(const VideoRecord& r) {
  std::vector<std::string> chunks;
  if (!r.username.empty()) chunks.push_back("This video is published by " + r.username + ".");
  if (!r.url.empty()) chunks.push_back("It links to " + r.url + ".");
  if (!r.hashtags.empty()) {
    std::string tags;
    for (size_t i = 0; i < r.hashtags.size(); ++i) {
      if (i) tags += ", ";
      tags += r.hashtags[i];
    }
    chunks.push_back("It is tagged with " + tags + ".");
  }
  if (!r.caption.empty()) chunks.push_back(r.caption);
  if (!r.transcript.empty()) chunks.push_back(r.transcript);
  std::string out;
  for (size_t i = 0; i < chunks.size(); ++i) {
    if (i) out += " ";
    out += chunks[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fold planning

struct FoldPlan {
  std::vector<std::vector<int>> parts;  // 6 disjoint index sets
  int test_part = 0;
  int val_part = 1;
  std::vector<int> train_parts = {2, 3, 4, 5};
  uint64_t seed = 0;
  int repetition = 0;

  std::vector<int> test_indices() const { return parts[static_cast<size_t>(test_part)]; }
  std::vector<int> val_indices() const { return parts[static_cast<size_t>(val_part)]; }
  std::vector<int> train_indices() const {
    std::vector<int> out;
    for (int p : train_parts)
      out.insert(out.end(), parts[static_cast<size_t>(p)].begin(), parts[static_cast<size_t>(p)].end());
    return out;
  }
};

constexpr int kFoldParts = 6;

// One plan per repetition: a fresh random partition of 0..n-1 into six
// parts whose sizes differ by at most one.
inline std::vector<FoldPlan> make_folds(int n, uint64_t seed, int repetitions = 3) {
  if (n < kFoldParts)
    fail_validation("make_folds: need at least " + std::to_string(kFoldParts) + " samples, got " +
                    std::to_string(n));
  std::vector<FoldPlan> plans;
  plans.reserve(static_cast<size_t>(repetitions));
  for (int rep = 0; rep < repetitions; ++rep) {
    Rng rng = Rng::derive(seed, "folds/" + std::to_string(rep));
    std::vector<int> perm(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    rng.shuffle(perm);
    FoldPlan plan;
    plan.seed = seed;
    plan.repetition = rep;
    plan.parts.resize(kFoldParts);
    int base = n / kFoldParts;
    int extra = n % kFoldParts;
    size_t pos = 0;
    for (int p = 0; p < kFoldParts; ++p) {
      int sz = base + (p < extra ? 1 : 0);
      plan.parts[static_cast<size_t>(p)].assign(perm.begin() + static_cast<long>(pos),
                                                perm.begin() + static_cast<long>(pos + sz));
      pos += static_cast<size_t>(sz);
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

inline nlohmann::json fold_plan_to_json(const FoldPlan& p) {
  nlohmann::json j;
  j["repetition"] = p.repetition;
  j["seed"] = p.seed;
  j["test_part"] = p.test_part;
  j["val_part"] = p.val_part;
  j["train_parts"] = p.train_parts;
  j["parts"] = p.parts;
  return j;
}

}  // namespace hfn
