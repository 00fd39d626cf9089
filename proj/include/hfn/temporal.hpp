/// Pipeline tail: LSTM over the fused clip sequence, global video–text
/// fusion, and the softmax classification head.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hfn/autodiff.hpp"
#include "hfn/core.hpp"

namespace hfn {

// Single-layer LSTM, gate column order [input | forget | cell | output].
struct LstmParams {
  Mat wx;  // d_in × 4·d_h
  Mat wh;  // d_h × 4·d_h
  Mat b;   // 1 × 4·d_h

  static LstmParams init(int d_in, int d_h, uint64_t seed) {
    Rng rng = Rng::derive(seed, "lstm");
    LstmParams p;
    p.wx = glorot_mat(d_in, 4 * d_h, rng);
    p.wh = glorot_mat(d_h, 4 * d_h, rng);
    p.b = Mat(1, 4 * d_h);
    for (int j = d_h; j < 2 * d_h; ++j) p.b(0, j) = 1.0;  // forget-gate bias
    return p;
  }
};

struct LstmVars {
  ad::Var wx, wh, b;
};

struct LstmTapeOut {
  ad::Var hidden_seq;  // L × d_h
  ad::Var final;       // 1 × d_h, hidden state at the last non-pad step
};

inline LstmTapeOut lstm_forward_tape(ad::Tape& tape, ad::Var fused_seq, const LstmVars& p,
                                     int d_h, const std::vector<uint8_t>& pad_mask = {}) {
  const int steps = tape.value(fused_seq).rows;
  check_contract(steps >= 1, "lstm_forward: empty sequence");
  int last_real = -1;
  for (int i = 0; i < steps; ++i)
    if (pad_mask.empty() || !pad_mask[static_cast<size_t>(i)]) last_real = i;
  check_contract(last_real >= 0, "lstm_forward: every step is padding");

  ad::Var h = tape.constant(Mat(1, d_h));
  ad::Var c = tape.constant(Mat(1, d_h));
  std::vector<ad::Var> hidden;
  hidden.reserve(static_cast<size_t>(steps));
  ad::Var final = h;
  for (int t = 0; t < steps; ++t) {
    ad::Var x = tape.take_row(fused_seq, t);
    ad::Var gates = tape.add_row_broadcast(
        tape.add(tape.matmul(x, p.wx), tape.matmul(h, p.wh)), p.b);
    ad::Var ig = tape.sigmoid_fn(tape.slice_cols(gates, 0, d_h));
    ad::Var fg = tape.sigmoid_fn(tape.slice_cols(gates, d_h, 2 * d_h));
    ad::Var gg = tape.tanh_fn(tape.slice_cols(gates, 2 * d_h, 3 * d_h));
    ad::Var og = tape.sigmoid_fn(tape.slice_cols(gates, 3 * d_h, 4 * d_h));
    c = tape.add(tape.hadamard(fg, c), tape.hadamard(ig, gg));
    h = tape.hadamard(og, tape.tanh_fn(c));
    hidden.push_back(h);
    if (t == last_real) final = h;
  }
  return {tape.concat_rows(hidden), final};
}

struct LstmOut {
  Mat hidden_seq;
  Mat final;
};

inline LstmOut lstm_forward(const Mat& fused_seq, const LstmParams& params,
                            const std::vector<uint8_t>& pad_mask = {}) {
  check_contract(params.wx.cols % 4 == 0, "lstm_forward: gate width must be 4·d_h");
  const int d_h = params.wx.cols / 4;
  ad::Tape tape;
  LstmVars p{tape.leaf(params.wx, false), tape.leaf(params.wh, false), tape.leaf(params.b, false)};
  LstmTapeOut out = lstm_forward_tape(tape, tape.leaf(fused_seq, false), p, d_h, pad_mask);
  return {tape.value(out.hidden_seq), tape.value(out.final)};
}

// ---------------------------------------------------------------------------
// Global video–text fusion.

struct GlobalFuseParams {
  Mat w_video;   // d_h × d_f
  Mat w_text;    // d_text × d_f
  Mat wo;        // d_f × d_f
  Mat bo;        // 1 × d_f
  Mat ln_gamma;  // 1 × d_f
  Mat ln_beta;   // 1 × d_f
  double ln_eps = 1e-5;

  static GlobalFuseParams init(int d_h, int d_text, int d_f, uint64_t seed) {
    Rng rng = Rng::derive(seed, "global_fuse");
    GlobalFuseParams p;
    p.w_video = glorot_mat(d_h, d_f, rng);
    p.w_text = glorot_mat(d_text, d_f, rng);
    p.wo = glorot_mat(d_f, d_f, rng);
    p.bo = Mat(1, d_f);
    p.ln_gamma = Mat(1, d_f, 1.0);
    p.ln_beta = Mat(1, d_f);
    return p;
  }
};

struct GlobalFuseVars {
  ad::Var w_video, w_text, wo, bo, ln_gamma, ln_beta;
};

// Single-head attention with the text feature as query over the pair
// {video_global, text}, both projected to a common width, followed by
// projection and norm. With text absent the attention degenerates to
// the projected video feature alone and never touches text content.
inline ad::Var fuse_global_tape(ad::Tape& tape, ad::Var video_global, ad::Var text,
                                bool text_present, const GlobalFuseVars& p,
                                double ln_eps = 1e-5) {
  ad::Var uv = tape.matmul(video_global, p.w_video);
  ad::Var att;
  if (text_present) {
    ad::Var ut = tape.matmul(text, p.w_text);
    ad::Var kv = tape.concat_rows({uv, ut});
    const int d_f = tape.value(uv).cols;
    ad::Var logits = tape.scale(tape.matmul_nt(ut, kv), 1.0 / std::sqrt(static_cast<double>(d_f)));
    ad::Var probs = tape.softmax_rows(logits);
    att = tape.matmul(probs, kv);
  } else {
    att = uv;
  }
  ad::Var x = tape.add_row_broadcast(tape.matmul(att, p.wo), p.bo);
  x = tape.layer_norm(x, ln_eps);
  x = tape.mul_row_broadcast(x, p.ln_gamma);
  return tape.add_row_broadcast(x, p.ln_beta);
}

inline Mat fuse_global(const Mat& video_global, const Mat& text, bool text_present,
                       const GlobalFuseParams& params) {
  check_contract(all_finite(video_global) && all_finite(text), "fuse_global: non-finite input");
  ad::Tape tape;
  GlobalFuseVars p{tape.leaf(params.w_video, false), tape.leaf(params.w_text, false),
                   tape.leaf(params.wo, false),      tape.leaf(params.bo, false),
                   tape.leaf(params.ln_gamma, false), tape.leaf(params.ln_beta, false)};
  ad::Var out = fuse_global_tape(tape, tape.leaf(video_global, false), tape.leaf(text, false),
                                 text_present, p, params.ln_eps);
  return tape.value(out);
}

// ---------------------------------------------------------------------------
// Classification head: one affine layer and a softmax.

struct ClassifierParams {
  Mat w;  // d_f × n_classes
  Mat b;  // 1 × n_classes

  static ClassifierParams init(int d_f, int n_classes, uint64_t seed) {
    Rng rng = Rng::derive(seed, "classifier");
    ClassifierParams p;
    p.w = glorot_mat(d_f, n_classes, rng);
    p.b = Mat(1, n_classes);
    return p;
  }
};

struct Prediction {
  std::vector<double> probs;
  std::vector<double> logits;
  int predicted = 0;
};

inline Prediction prediction_from_logits(const Mat& logits) {
  check_contract(logits.rows == 1 && logits.cols >= 2, "prediction: logits must be 1×C, C≥2");
  check_contract(all_finite(logits), "prediction: non-finite logits");
  Prediction p;
  p.logits.assign(logits.a.begin(), logits.a.end());
  double mx = *std::max_element(p.logits.begin(), p.logits.end());
  double z = 0.0;
  p.probs.resize(p.logits.size());
  for (size_t j = 0; j < p.logits.size(); ++j) {
    p.probs[j] = std::exp(p.logits[j] - mx);
    z += p.probs[j];
  }
  for (double& v : p.probs) v /= z;
  p.predicted = static_cast<int>(std::max_element(p.probs.begin(), p.probs.end()) -
                                 p.probs.begin());
  return p;
}

inline ad::Var classify_tape(ad::Tape& tape, ad::Var features, ad::Var w, ad::Var b) {
  return tape.add_row_broadcast(tape.matmul(features, w), b);
}

inline Prediction classify(const Mat& features, const ClassifierParams& params) {
  check_contract(all_finite(features), "classify: non-finite input");
  ad::Tape tape;
  ad::Var logits = classify_tape(tape, tape.leaf(features, false), tape.leaf(params.w, false),
                                 tape.leaf(params.b, false));
  return prediction_from_logits(tape.value(logits));
}

}  // namespace hfn
