/// Evaluation drivers: test-set metrics, the modality-loss ablation
/// table, alternative fusion baselines, efficiency profiling, and the
/// planted-signal synthetic benchmark used for desk-scale verification.
#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hfn/metrics.hpp"
#include "hfn/model.hpp"
#include "hfn/pipeline.hpp"
#include "hfn/wmff.hpp"

namespace hfn {

struct EvalOptions {
  ModalityUse use;
  bool merge_ambiguous = false;  // 3-class model scored as Fake(+Ambiguous) vs Real
};

struct EvalOutcome {
  MetricsReport metrics;
  std::vector<Prediction> predictions;
  std::vector<ForwardTrace> traces;
  double mean_w_v = 0.0;
  double mean_w_a = 0.0;
};

inline EvalOutcome evaluate_model(const HfnModel& model, const std::vector<ModelInput>& inputs,
                                  const EvalOptions& opt = {}) {
  check_contract(!inputs.empty(), "evaluate_model: empty input set");
  const int nc = model.config().n_classes;
  bool merge = opt.merge_ambiguous && nc == 3;
  std::vector<int> preds, truth;
  preds.reserve(inputs.size());
  truth.reserve(inputs.size());
  EvalOutcome out;
  double wv_sum = 0.0, wa_sum = 0.0;
  size_t w_count = 0;
  for (const auto& in : inputs) {
    ForwardTrace trace;
    Prediction p = model.predict(in, opt.use, &trace);
    int pred = p.predicted;
    int t = in.target;
    if (merge) {
      pred = pred == 1 ? 1 : 0;  // Real stays, Fake and Ambiguous merge
      t = t == 1 ? 1 : 0;
    }
    preds.push_back(pred);
    truth.push_back(t);
    for (size_t i = 0; i < trace.w_v.size(); ++i) {
      wv_sum += trace.w_v[i];
      wa_sum += trace.w_a[i];
      ++w_count;
    }
    out.predictions.push_back(std::move(p));
    out.traces.push_back(std::move(trace));
  }
  std::vector<std::string> classes =
      merge ? class_names(2, true) : class_names(nc, false);
  out.metrics = compute_metrics(preds, truth, classes);
  if (w_count > 0) {
    out.mean_w_v = wv_sum / static_cast<double>(w_count);
    out.mean_w_a = wa_sum / static_cast<double>(w_count);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Modality-loss ablations: re-evaluate a trained model with modalities
// masked through the decision-weight pathway. No retraining.

struct AblationTable {
  std::vector<std::string> order;
  std::map<std::string, MetricsReport> rows;
};

inline const std::vector<std::string>& modality_ablation_configs() {
  static const std::vector<std::string> configs = {"video only", "video audio", "video text",
                                                   "multimodal"};
  return configs;
}

inline ModalityUse modality_use_for(const std::string& config) {
  if (config == "video only") return {true, false, false};
  if (config == "video audio") return {true, true, false};
  if (config == "video text") return {true, false, true};
  if (config == "multimodal") return {true, true, true};
  fail_validation("unknown ablation config \"" + config +
                  "\" (video only, video audio, video text, multimodal)");
}

inline AblationTable ablate_modalities(const HfnModel& model, const std::vector<ModelInput>& inputs,
                                       const std::vector<std::string>& configs =
                                           modality_ablation_configs(),
                                       bool merge_ambiguous = false) {
  AblationTable table;
  for (const auto& name : configs) {
    EvalOptions opt;
    opt.use = modality_use_for(name);  // rejects any config that drops video
    opt.merge_ambiguous = merge_ambiguous;
    table.order.push_back(name);
    table.rows[name] = evaluate_model(model, inputs, opt).metrics;
  }
  return table;
}

inline nlohmann::json ablation_to_json(const AblationTable& t) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& name : t.order) j[name] = metrics_to_json(t.rows.at(name));
  return j;
}

// ---------------------------------------------------------------------------
// Fusion baselines (ablation study configurations).

struct FusionBaselineParams {
  Mat concat_w;  // (d_v + d_a) × d
  Mat concat_b;  // 1 × d
  AttentionParams attention;
  std::vector<int> clip_index;
  std::vector<uint8_t> pad_mask;
};

// concat: widen then project; add: elementwise sum; cross_attn: the
// weighted-fusion path with every weight set to one and no decision net.
inline Mat fusion_baseline(FusionKind kind, const Mat& v_seq, const Mat& a_seq,
                           const FusionBaselineParams& p) {
  check_contract(v_seq.rows == a_seq.rows, "fusion_baseline: sequence lengths disagree");
  switch (kind) {
    case FusionKind::concat: {
      check_contract(v_seq.cols + a_seq.cols == p.concat_w.rows,
                     "fusion_baseline: concat width does not match projection");
      Mat x(v_seq.rows, v_seq.cols + a_seq.cols);
      for (int i = 0; i < v_seq.rows; ++i) {
        for (int j = 0; j < v_seq.cols; ++j) x(i, j) = v_seq(i, j);
        for (int j = 0; j < a_seq.cols; ++j) x(i, v_seq.cols + j) = a_seq(i, j);
      }
      Mat out = matmul(x, p.concat_w);
      for (int i = 0; i < out.rows; ++i)
        for (int j = 0; j < out.cols; ++j) out(i, j) += p.concat_b(0, j);
      return out;
    }
    case FusionKind::add: {
      check_contract(v_seq.cols == a_seq.cols, "fusion_baseline: add requires equal widths");
      Mat out = v_seq;
      for (size_t i = 0; i < out.a.size(); ++i) out.a[i] += a_seq.a[i];
      return out;
    }
    case FusionKind::cross_attn: {
      std::vector<double> unit(static_cast<size_t>(v_seq.rows), 1.0);
      return wmff_forward(v_seq, a_seq, unit, unit, p.attention, p.clip_index, p.pad_mask);
    }
    case FusionKind::wmff:
      fail_contract("fusion_baseline: wmff is the primary path, not a baseline");
  }
  fail_contract("fusion_baseline: unreachable");
}

// ---------------------------------------------------------------------------
// Efficiency profile.

struct EfficiencyProfile {
  size_t trainable_params = 0;
  size_t frozen_params = 0;
  size_t total_params = 0;
  double param_mb = 0.0;  // doubles, 8 bytes each
  double infer_seconds_cached = 0.0;     // forward only, features precomputed
  double infer_seconds_extracted = 0.0;  // featurize + forward; 0 when not measured
};

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline EfficiencyProfile efficiency_profile(const HfnModel& model,
                                            const std::vector<ModelInput>& probe,
                                            const Featurizer* featurizer = nullptr,
                                            const std::vector<VideoRecord>* probe_records = nullptr,
                                            int passes = 5) {
  check_contract(!probe.empty(), "efficiency_profile: empty probe");
  check_contract(passes >= 5, "efficiency_profile: need at least 5 timed passes");
  EfficiencyProfile prof;
  prof.trainable_params = model.params().scalar_count(true);
  prof.frozen_params = featurizer ? featurizer->frozen_scalar_count() : 0;
  prof.total_params = model.params().scalar_count(false) + prof.frozen_params;
  prof.param_mb = static_cast<double>(prof.total_params) * sizeof(double) / 1e6;

  std::vector<double> times;
  for (int p = 0; p < passes; ++p) {
    auto t0 = std::chrono::steady_clock::now();
    for (const auto& in : probe) (void)model.predict(in);
    auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  prof.infer_seconds_cached = median_of(times);

  if (featurizer && probe_records && !probe_records->empty()) {
    std::vector<double> full;
    PipelineConfig nocache_cfg = featurizer->config();
    nocache_cfg.use_cache = false;
    Featurizer nocache(nocache_cfg);
    for (int p = 0; p < passes; ++p) {
      auto t0 = std::chrono::steady_clock::now();
      for (const auto& r : *probe_records) (void)model.predict(nocache.featurize(r));
      auto t1 = std::chrono::steady_clock::now();
      full.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    prof.infer_seconds_extracted = median_of(full);
  }
  return prof;
}

// Analytic parameter count for the attention projections at width d:
// three input projections plus the output projection, all d×d.
inline size_t attention_projection_params(int d) {
  return 4 * static_cast<size_t>(d) * static_cast<size_t>(d);
}

// ---------------------------------------------------------------------------
// Planted-signal synthetic benchmark.

enum class PlantedModality { video, audio };

struct SyntheticSpec {
  int n = 600;
  int clips = 4;
  PlantedModality planted = PlantedModality::video;
  double noise = 0.5;
  int n_classes = 2;
  uint64_t seed = 0;
  int frame_size = 32;  // H = W, must be divisible by 32
  int fps = 3;
  int clip_seconds = 8;
  int sr = 2000;
};

struct SyntheticDataset {
  std::vector<VideoRecord> records;
  std::vector<double> latent;  // the planted class latent per sample
  SyntheticSpec spec;
};

// The class pattern image: fixed ±1 texture derived from the seed.
inline std::vector<double> synthetic_pattern(const SyntheticSpec& spec) {
  Rng rng = Rng::derive(spec.seed, "synthetic/pattern");
  std::vector<double> pattern(static_cast<size_t>(spec.frame_size) * spec.frame_size * 3);
  for (double& v : pattern) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return pattern;
}

// Labels are a deterministic function of the planted latent: the
// planted modality carries a class-separable signal, the other
// modality and the text are noise. Class counts are balanced within
// one sample.
inline SyntheticDataset make_synthetic(const SyntheticSpec& spec) {
  check_contract(spec.n > 0 && spec.clips > 0, "make_synthetic: bad size spec");
  check_contract(spec.n_classes == 2 || spec.n_classes == 3, "make_synthetic: 2 or 3 classes");
  check_contract(spec.frame_size % 32 == 0, "make_synthetic: frame_size must be divisible by 32");
  SyntheticDataset ds;
  ds.spec = spec;
  std::vector<double> pattern = synthetic_pattern(spec);
  static const char* kVocab[] = {"clip",  "news",   "video", "update", "story", "report",
                                 "share", "media",  "watch", "daily",  "live",  "world",
                                 "today", "online", "feed",  "post"};
  const int frames_per_clip = spec.fps * spec.clip_seconds;
  const int total_frames = spec.clips * frames_per_clip;
  const int hw3 = spec.frame_size * spec.frame_size * 3;
  const int samples_per_clip = spec.clip_seconds * spec.sr;
  const double base_amp = 24.0;
  const double pixel_sigma = 48.0 * spec.noise;

  // Balanced class assignment, then shuffled.
  std::vector<int> class_of(static_cast<size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) class_of[static_cast<size_t>(i)] = i % spec.n_classes;
  Rng order_rng = Rng::derive(spec.seed, "synthetic/order");
  order_rng.shuffle(class_of);

  for (int i = 0; i < spec.n; ++i) {
    Rng rng = Rng::derive(spec.seed, "synthetic/sample/" + std::to_string(i));
    int cls = class_of[static_cast<size_t>(i)];
    // Latent in {-1,+1} for 2 classes, {-1,0,+1} for 3.
    double z = spec.n_classes == 2 ? (cls == 0 ? 1.0 : -1.0) : static_cast<double>(cls - 1);
    ds.latent.push_back(z);

    VideoRecord r;
    r.id = "syn-" + std::to_string(i);
    r.label = cls == 0 ? Label::fake : (cls == 1 ? Label::real : Label::ambiguous);
    r.username = "user" + std::to_string(i % 37);
    int n_words = 5 + static_cast<int>(rng.uniform_int(6));
    for (int wi = 0; wi < n_words; ++wi) {
      if (wi) r.caption += " ";
      r.caption += kVocab[rng.uniform_int(16)];
    }

    FrameArray frames;
    frames.t = total_frames;
    frames.h = spec.frame_size;
    frames.w = spec.frame_size;
    frames.px.resize(frames.expected_size());
    bool video_planted = spec.planted == PlantedModality::video;
    for (int c = 0; c < spec.clips; ++c) {
      double amp = base_amp * (0.75 + 0.5 * rng.uniform());
      double signal = video_planted ? z * amp : 0.0;
      for (int f = 0; f < frames_per_clip; ++f) {
        size_t off = (static_cast<size_t>(c) * frames_per_clip + f) * static_cast<size_t>(hw3);
        for (int p = 0; p < hw3; ++p) {
          double v = 128.0 + signal * pattern[static_cast<size_t>(p)];
          if (pixel_sigma > 0.0) v += rng.normal(0.0, pixel_sigma);
          v = std::min(255.0, std::max(0.0, v));
          frames.px[off + static_cast<size_t>(p)] = static_cast<uint8_t>(v + 0.5);
        }
      }
    }
    r.frames_inline = std::move(frames);
    r.has_inline_frames = true;

    Waveform audio;
    audio.sr = spec.sr;
    audio.samples.resize(static_cast<size_t>(spec.clips) * samples_per_clip);
    // Planted audio: class-dependent tone; otherwise a random tone.
    double nyquist = spec.sr / 2.0;
    double tone;
    if (spec.planted == PlantedModality::audio) {
      tone = spec.n_classes == 2 ? (cls == 0 ? nyquist * 0.15 : nyquist * 0.6)
                                 : nyquist * (0.15 + 0.225 * cls);
    } else {
      tone = nyquist * (0.1 + 0.8 * rng.uniform());
    }
    double phase = rng.uniform(0.0, 2.0 * M_PI);
    double audio_sigma = spec.planted == PlantedModality::audio ? 0.3 * spec.noise : 0.3;
    for (size_t s = 0; s < audio.samples.size(); ++s) {
      double t = static_cast<double>(s) / spec.sr;
      double v = 0.5 * std::sin(2.0 * M_PI * tone * t + phase);
      if (audio_sigma > 0.0) v += rng.normal(0.0, audio_sigma);
      audio.samples[s] = static_cast<float>(v);
    }
    r.audio_inline = std::move(audio);
    r.has_inline_audio = true;

    ds.records.push_back(std::move(r));
  }
  return ds;
}

// Recovers the planted video latent from generated media by projecting
// frame residuals onto the pattern; at zero noise its sign separates
// the classes perfectly.
inline double recover_planted_latent(const VideoRecord& r, const SyntheticSpec& spec) {
  check_contract(r.has_inline_frames, "recover_planted_latent: record has no inline frames");
  std::vector<double> pattern = synthetic_pattern(spec);
  const FrameArray& f = r.frames_inline;
  const size_t hw3 = pattern.size();
  double acc = 0.0;
  for (int t = 0; t < f.t; ++t) {
    size_t off = static_cast<size_t>(t) * hw3;
    for (size_t p = 0; p < hw3; ++p)
      acc += (static_cast<double>(f.px[off + p]) - 128.0) * pattern[p];
  }
  return acc / (static_cast<double>(f.t) * static_cast<double>(hw3));
}

}  // namespace hfn
