/// Per-clip modality reliance weights from pooled patch embeddings and
/// audio tokens: pool → dropout → norm per modality, concatenate, then
/// two kernel-1 convolutions over the clip axis with a ReLU between,
/// and a softmax that places (w_v, w_a) on the 2-simplex.
#pragma once

#include <utility>
#include <vector>

#include "hfn/autodiff.hpp"
#include "hfn/core.hpp"
#include "hfn/extractors.hpp"

namespace hfn {

struct DecisionWeights {
  std::vector<double> w_v;
  std::vector<double> w_a;

  size_t size() const { return w_v.size(); }
};

struct DecisionNetParams {
  Mat conv1_w;  // concat width × hidden
  Mat conv1_b;  // 1 × hidden
  Mat conv2_w;  // hidden × 2
  Mat conv2_b;  // 1 × 2
  double dropout_rate = 0.1;

  static DecisionNetParams init(int in_width, int hidden, uint64_t seed) {
    Rng rng = Rng::derive(seed, "decision_net");
    DecisionNetParams p;
    p.conv1_w = glorot_mat(in_width, hidden, rng);
    p.conv1_b = Mat(1, hidden);
    p.conv2_w = glorot_mat(hidden, 2, rng);
    p.conv2_b = Mat(1, 2);
    return p;
  }
};

struct DecisionNetVars {
  ad::Var conv1_w, conv1_b, conv2_w, conv2_b;
};

// Dropout (training only) followed by parameter-free layer norm, row-wise.
// `pooled` is rows×width, one row per clip.
inline ad::Var pool_and_norm_tape(ad::Tape& tape, ad::Var pooled, bool training,
                                  double dropout_rate, Rng* rng, double ln_eps = 1e-5) {
  ad::Var x = pooled;
  if (training && dropout_rate > 0.0) {
    check_contract(rng != nullptr, "pool_and_norm: training mode needs an rng");
    x = tape.dropout(x, dropout_rate, *rng);
  }
  return tape.layer_norm(x, ln_eps);
}

// Kernel-1 conv stack over the clip axis: rows are clips, so each conv
// is a shared per-row linear map. Output: rows×2 softmax weights.
inline ad::Var decision_forward_tape(ad::Tape& tape, ad::Var p_bar, ad::Var t_bar,
                                     const DecisionNetVars& dn) {
  ad::Var x = tape.concat_cols(p_bar, t_bar);
  x = tape.add_row_broadcast(tape.matmul(x, dn.conv1_w), dn.conv1_b);
  x = tape.relu(x);
  x = tape.add_row_broadcast(tape.matmul(x, dn.conv2_w), dn.conv2_b);
  return tape.softmax_rows(x);
}

// ---------------------------------------------------------------------------
// Standalone (non-tape) entry points.

// Pools one clip's patch embedding and audio tokens to single vectors,
// then applies dropout (training only) and layer norm to each.
inline std::pair<Mat, Mat> pool_and_norm(const PatchEmbed& patches, const AudioTokens& tokens,
                                         bool training, double dropout_rate = 0.1,
                                         Rng* rng = nullptr, double ln_eps = 1e-5) {
  check_contract(!patches.values.data.empty(), "pool_and_norm: empty patch tensor");
  check_contract(tokens.rows > 0, "pool_and_norm: empty token set on a non-padded clip");
  Mat p_pooled = global_avg_pool(patches.values);
  Mat t_pooled = mean_over_rows(tokens);
  ad::Tape tape;
  ad::Var p = pool_and_norm_tape(tape, tape.leaf(p_pooled, false), training, dropout_rate, rng,
                                 ln_eps);
  ad::Var t = pool_and_norm_tape(tape, tape.leaf(t_pooled, false), training, dropout_rate, rng,
                                 ln_eps);
  return {tape.value(p), tape.value(t)};
}

// Normalized per-clip vectors (rows) → per-clip weight pairs.
inline DecisionWeights decision_forward(const Mat& p_bar, const Mat& t_bar,
                                        const DecisionNetParams& params) {
  check_contract(p_bar.rows == t_bar.rows, "decision_forward: clip counts disagree");
  check_contract(p_bar.cols + t_bar.cols == params.conv1_w.rows,
                 "decision_forward: concat width does not match conv1 input width");
  ad::Tape tape;
  DecisionNetVars dn{tape.leaf(params.conv1_w, false), tape.leaf(params.conv1_b, false),
                     tape.leaf(params.conv2_w, false), tape.leaf(params.conv2_b, false)};
  ad::Var w = decision_forward_tape(tape, tape.leaf(p_bar, false), tape.leaf(t_bar, false), dn);
  const Mat& wm = tape.value(w);
  DecisionWeights out;
  out.w_v.resize(static_cast<size_t>(wm.rows));
  out.w_a.resize(static_cast<size_t>(wm.rows));
  for (int i = 0; i < wm.rows; ++i) {
    out.w_v[static_cast<size_t>(i)] = wm(i, 0);
    out.w_a[static_cast<size_t>(i)] = wm(i, 1);
  }
  return out;
}

// Forces the weight of an absent modality to zero (logit −∞ before the
// softmax), which renormalizes the other to one. Both present: identity.
inline DecisionWeights apply_modality_mask(DecisionWeights w, bool video_present,
                                           bool audio_present) {
  if (!video_present && !audio_present)
    fail_validation("apply_modality_mask: both modalities absent");
  if (video_present && audio_present) return w;
  for (size_t i = 0; i < w.size(); ++i) {
    w.w_v[i] = video_present ? 1.0 : 0.0;
    w.w_a[i] = audio_present ? 1.0 : 0.0;
  }
  return w;
}

}  // namespace hfn
