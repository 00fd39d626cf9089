/// Weighted multi-modal feature fusion: per-clip features scaled by the
/// decision weights, sinusoidal timestamp embedding, multi-head cross
/// attention (video queries over audio keys/values, padded keys masked
/// out), then linear projection, dropout and layer norm.
///
/// Feature scaling happens exactly once, here; running the module with
/// unit weights reproduces the plain cross-attention fusion baseline
/// bit for bit.
#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "hfn/autodiff.hpp"
#include "hfn/core.hpp"

namespace hfn {

struct AttentionParams {
  Mat wq, wk, wv;     // d × d, split into n_heads column blocks
  Mat wo;             // d × d output projection
  Mat bo;             // 1 × d
  Mat ln_gamma;       // 1 × d
  Mat ln_beta;        // 1 × d
  int n_heads = 4;
  double dropout_rate = 0.1;
  double ln_eps = 1e-5;

  static AttentionParams init(int d, int n_heads, uint64_t seed) {
    check_contract(d % n_heads == 0, "attention: d must be divisible by n_heads");
    Rng rng = Rng::derive(seed, "wmff_attention");
    AttentionParams p;
    p.wq = glorot_mat(d, d, rng);
    p.wk = glorot_mat(d, d, rng);
    p.wv = glorot_mat(d, d, rng);
    p.wo = glorot_mat(d, d, rng);
    p.bo = Mat(1, d);
    p.ln_gamma = Mat(1, d, 1.0);
    p.ln_beta = Mat(1, d);
    p.n_heads = n_heads;
    return p;
  }
};

struct AttentionVars {
  ad::Var wq, wk, wv, wo, bo, ln_gamma, ln_beta;
};

// Fixed sinusoidal encoding over clip index, period base 10000.
inline Mat timestamp_encoding(const std::vector<int>& clip_index, int d) {
  Mat e(static_cast<int>(clip_index.size()), d);
  for (size_t r = 0; r < clip_index.size(); ++r) {
    double t = static_cast<double>(clip_index[r]);
    for (int j = 0; j < d; ++j) {
      int pair = j / 2;
      double omega = std::pow(10000.0, -2.0 * pair / d);
      e(static_cast<int>(r), j) = (j % 2 == 0) ? std::sin(t * omega) : std::cos(t * omega);
    }
  }
  return e;
}

inline Mat timestamp_encoding(int length, int d) {
  std::vector<int> idx(static_cast<size_t>(length));
  for (int i = 0; i < length; ++i) idx[static_cast<size_t>(i)] = i;
  return timestamp_encoding(idx, d);
}

// Row i of each sequence multiplied by its scalar weight.
inline ad::Var scale_features_tape(ad::Tape& tape, ad::Var seq, ad::Var weights_col) {
  return tape.scale_rows(seq, weights_col);
}

inline ad::Var add_timestamp_tape(ad::Tape& tape, ad::Var seq, const Mat& encoding) {
  return tape.add_const(seq, encoding);
}

// Multi-head scaled dot-product attention; q_seq supplies queries,
// kv_seq keys and values. Padded key rows get exactly zero mass.
// Returns the concatenated head outputs (the output projection lives in
// project_norm_tape).
inline ad::Var cross_attention_tape(ad::Tape& tape, ad::Var q_seq, ad::Var kv_seq,
                                    const AttentionVars& at, int n_heads,
                                    const std::vector<uint8_t>& key_pad_mask = {}) {
  const int d = tape.value(q_seq).cols;
  check_contract(d % n_heads == 0, "cross_attention: d must be divisible by n_heads");
  const int dk = d / n_heads;
  ad::Var q = tape.matmul(q_seq, at.wq);
  ad::Var k = tape.matmul(kv_seq, at.wk);
  ad::Var v = tape.matmul(kv_seq, at.wv);
  std::vector<ad::Var> heads;
  heads.reserve(static_cast<size_t>(n_heads));
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  for (int h = 0; h < n_heads; ++h) {
    ad::Var qh = tape.slice_cols(q, h * dk, (h + 1) * dk);
    ad::Var kh = tape.slice_cols(k, h * dk, (h + 1) * dk);
    ad::Var vh = tape.slice_cols(v, h * dk, (h + 1) * dk);
    ad::Var logits = tape.scale(tape.matmul_nt(qh, kh), inv_sqrt_dk);
    ad::Var probs = tape.softmax_rows(logits, key_pad_mask);
    heads.push_back(tape.matmul(probs, vh));
  }
  ad::Var out = heads[0];
  for (int h = 1; h < n_heads; ++h) out = tape.concat_cols(out, heads[static_cast<size_t>(h)]);
  return out;
}

// Output projection → dropout (training only) → affine layer norm.
inline ad::Var project_norm_tape(ad::Tape& tape, ad::Var att_out, const AttentionVars& at,
                                 bool training, double dropout_rate, Rng* rng,
                                 double ln_eps = 1e-5) {
  ad::Var x = tape.add_row_broadcast(tape.matmul(att_out, at.wo), at.bo);
  if (training && dropout_rate > 0.0) {
    check_contract(rng != nullptr, "project_norm: training mode needs an rng");
    x = tape.dropout(x, dropout_rate, *rng);
  }
  x = tape.layer_norm(x, ln_eps);
  x = tape.mul_row_broadcast(x, at.ln_gamma);
  return tape.add_row_broadcast(x, at.ln_beta);
}

// Full module: scale by weights, embed timestamps, attend, project,
// norm, and zero fully-padded rows. Weight columns are L×1; pass unit
// weights to disable the decision scaling.
inline ad::Var wmff_forward_tape(ad::Tape& tape, ad::Var v_seq, ad::Var a_seq, ad::Var w_v,
                                 ad::Var w_a, const AttentionVars& at, int n_heads,
                                 const std::vector<int>& clip_index,
                                 const std::vector<uint8_t>& pad_mask, bool training,
                                 double dropout_rate, Rng* rng, double ln_eps = 1e-5) {
  const int d = tape.value(v_seq).cols;
  Mat e_t = timestamp_encoding(clip_index, d);
  ad::Var vw = tape.add_const(tape.scale_rows(v_seq, w_v), e_t);
  ad::Var aw = tape.add_const(tape.scale_rows(a_seq, w_a), e_t);
  ad::Var att = cross_attention_tape(tape, vw, aw, at, n_heads, pad_mask);
  ad::Var fused = project_norm_tape(tape, att, at, training, dropout_rate, rng, ln_eps);
  bool any_pad = false;
  for (uint8_t m : pad_mask) any_pad = any_pad || m != 0;
  if (any_pad) {
    Mat keep(tape.value(fused).rows, d, 1.0);
    for (int i = 0; i < keep.rows; ++i)
      if (pad_mask[static_cast<size_t>(i)])
        for (int j = 0; j < d; ++j) keep(i, j) = 0.0;
    fused = tape.mul_const(fused, keep);
  }
  return fused;
}

// ---------------------------------------------------------------------------
// Standalone (non-tape) entry points.

inline std::pair<Mat, Mat> scale_features(const Mat& v_seq, const Mat& a_seq,
                                          const std::vector<double>& w_v,
                                          const std::vector<double>& w_a) {
  check_contract(v_seq.rows == a_seq.rows, "scale_features: sequence lengths disagree");
  check_contract(static_cast<size_t>(v_seq.rows) == w_v.size() && w_v.size() == w_a.size(),
                 "scale_features: weight length mismatch");
  Mat v = v_seq, a = a_seq;
  for (int i = 0; i < v.rows; ++i)
    for (int j = 0; j < v.cols; ++j) v(i, j) *= w_v[static_cast<size_t>(i)];
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) a(i, j) *= w_a[static_cast<size_t>(i)];
  return {std::move(v), std::move(a)};
}

inline Mat add_timestamp(const Mat& x, const std::vector<int>& clip_index) {
  check_contract(static_cast<size_t>(x.rows) == clip_index.size(),
                 "add_timestamp: index length mismatch");
  Mat e = timestamp_encoding(clip_index, x.cols);
  Mat out = x;
  for (size_t i = 0; i < out.a.size(); ++i) out.a[i] += e.a[i];
  return out;
}

inline Mat cross_attention(const Mat& q_seq, const Mat& kv_seq, const AttentionParams& params,
                           const std::vector<uint8_t>& key_pad_mask = {}) {
  ad::Tape tape;
  AttentionVars at{tape.leaf(params.wq, false),       tape.leaf(params.wk, false),
                   tape.leaf(params.wv, false),       tape.leaf(params.wo, false),
                   tape.leaf(params.bo, false),       tape.leaf(params.ln_gamma, false),
                   tape.leaf(params.ln_beta, false)};
  ad::Var out = cross_attention_tape(tape, tape.leaf(q_seq, false), tape.leaf(kv_seq, false), at,
                                     params.n_heads, key_pad_mask);
  return tape.value(out);
}

inline Mat project_norm(const Mat& att_out, const AttentionParams& params, bool training = false,
                        Rng* rng = nullptr) {
  check_contract(all_finite(att_out), "project_norm: non-finite input");
  ad::Tape tape;
  AttentionVars at{tape.leaf(params.wq, false),       tape.leaf(params.wk, false),
                   tape.leaf(params.wv, false),       tape.leaf(params.wo, false),
                   tape.leaf(params.bo, false),       tape.leaf(params.ln_gamma, false),
                   tape.leaf(params.ln_beta, false)};
  ad::Var out = project_norm_tape(tape, tape.leaf(att_out, false), at, training,
                                  params.dropout_rate, rng, params.ln_eps);
  return tape.value(out);
}

inline Mat wmff_forward(const Mat& v_seq, const Mat& a_seq, const std::vector<double>& w_v,
                        const std::vector<double>& w_a, const AttentionParams& params,
                        const std::vector<int>& clip_index, const std::vector<uint8_t>& pad_mask,
                        bool training = false, Rng* rng = nullptr) {
  ad::Tape tape;
  AttentionVars at{tape.leaf(params.wq, false),       tape.leaf(params.wk, false),
                   tape.leaf(params.wv, false),       tape.leaf(params.wo, false),
                   tape.leaf(params.bo, false),       tape.leaf(params.ln_gamma, false),
                   tape.leaf(params.ln_beta, false)};
  ad::Var wv = tape.leaf(Mat::col_vector(std::vector<double>(w_v)), false);
  ad::Var wa = tape.leaf(Mat::col_vector(std::vector<double>(w_a)), false);
  ad::Var out = wmff_forward_tape(tape, tape.leaf(v_seq, false), tape.leaf(a_seq, false), wv, wa,
                                  at, params.n_heads, clip_index, pad_mask, training,
                                  params.dropout_rate, rng, params.ln_eps);
  return tape.value(out);
}

}  // namespace hfn
