/// The full detection network: trainable heads over frozen per-clip
/// features, the decision network, weighted fusion, LSTM, global
/// video–text fusion and the classifier, assembled on one tape.
///
/// Modality masking is structural: an absent (or ablated) modality's
/// features are never placed on the tape, its decision weight is a
/// constant zero and the other constant one, so the logits are
/// bit-independent of the masked content.
#pragma once

#include <string>
#include <vector>

#include "hfn/autodiff.hpp"
#include "hfn/core.hpp"
#include "hfn/dataset.hpp"
#include "hfn/decision_net.hpp"
#include "hfn/extractors.hpp"
#include "hfn/params.hpp"
#include "hfn/temporal.hpp"
#include "hfn/wmff.hpp"

namespace hfn {

enum class FusionKind { wmff, concat, add, cross_attn };

inline std::string fusion_kind_name(FusionKind k) {
  switch (k) {
    case FusionKind::wmff: return "wmff";
    case FusionKind::concat: return "concat";
    case FusionKind::add: return "add";
    case FusionKind::cross_attn: return "cross_attn";
  }
  return "?";
}

inline FusionKind parse_fusion_kind(const std::string& s) {
  if (s == "wmff") return FusionKind::wmff;
  if (s == "concat") return FusionKind::concat;
  if (s == "add") return FusionKind::add;
  if (s == "cross_attn") return FusionKind::cross_attn;
  fail_validation("unknown fusion kind \"" + s + "\" (wmff, concat, add, cross_attn)");
}

struct ModelConfig {
  int d_swin = 64;
  int d_clap = 64;
  int n_mels = 64;
  int d = 128;       // fusion width
  int dn_hidden = 32;
  int n_heads = 4;
  int d_h = 128;     // LSTM hidden width
  int d_text = 64;
  int d_f = 128;     // global fusion width
  int n_classes = 2;
  double dropout = 0.1;
  double ln_eps = 1e-5;
  FusionKind fusion = FusionKind::wmff;
  bool use_decision_net = true;
  uint64_t seed = 0;

  void validate() const {
    check_contract(d > 0 && d_h > 0 && d_f > 0 && d_swin > 0 && d_clap > 0 && n_mels > 0,
                   "model config: dimensions must be positive");
    check_contract(n_classes == 2 || n_classes == 3, "model config: n_classes must be 2 or 3");
    if (fusion == FusionKind::wmff || fusion == FusionKind::cross_attn)
      check_contract(d % n_heads == 0, "model config: d must be divisible by n_heads");
  }
};

// Everything the network consumes for one video, after the frozen
// extractors have run: pooled per-clip features plus masks and the
// encoded text.
struct ModelInput {
  std::string id;
  Label label = Label::fake;
  int target = 0;  // class index under the configured vocabulary
  int k = 0;
  Mat video_pooled;   // k × d_swin
  Mat patch_pooled;   // k × 96
  Mat audio_pooled;   // k × d_clap
  Mat tokens_pooled;  // k × n_mels
  std::vector<uint8_t> pad_mask;
  std::vector<int> clip_index;
  bool video_present = false;
  bool audio_present = false;
  Mat text_vec;  // 1 × d_text
  bool text_present = false;
};

// Runtime modality switches for ablations; combined with the per-video
// presence flags by logical and.
struct ModalityUse {
  bool video = true;
  bool audio = true;
  bool text = true;
};

struct ForwardTrace {
  std::vector<double> w_v;
  std::vector<double> w_a;
};

class HfnModel {
 public:
  explicit HfnModel(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    uint64_t s = cfg_.seed;
    auto add_mat = [&](const std::string& name, Mat m) { store_.add(name, std::move(m)); };

    {
      Rng rng = Rng::derive(s, "i3d_head");
      add_mat("i3d_head.w1", glorot_mat(cfg_.d_swin, cfg_.d, rng));
      add_mat("i3d_head.b1", Mat(1, cfg_.d));
      add_mat("i3d_head.w2", glorot_mat(cfg_.d, cfg_.d, rng));
      add_mat("i3d_head.b2", Mat(1, cfg_.d));
    }
    {
      Rng rng = Rng::derive(s, "audio_head");
      add_mat("audio_head.w1", glorot_mat(cfg_.d_clap, cfg_.d, rng));
      add_mat("audio_head.b1", Mat(1, cfg_.d));
      add_mat("audio_head.w2", glorot_mat(cfg_.d, cfg_.d, rng));
      add_mat("audio_head.b2", Mat(1, cfg_.d));
    }
    if (cfg_.use_decision_net) {
      DecisionNetParams dn = DecisionNetParams::init(kPatchChannels + cfg_.n_mels, cfg_.dn_hidden, s);
      add_mat("decision.conv1_w", dn.conv1_w);
      add_mat("decision.conv1_b", dn.conv1_b);
      add_mat("decision.conv2_w", dn.conv2_w);
      add_mat("decision.conv2_b", dn.conv2_b);
    }
    if (cfg_.fusion == FusionKind::wmff || cfg_.fusion == FusionKind::cross_attn) {
      AttentionParams at = AttentionParams::init(cfg_.d, cfg_.n_heads, s);
      add_mat("attn.wq", at.wq);
      add_mat("attn.wk", at.wk);
      add_mat("attn.wv", at.wv);
      add_mat("attn.wo", at.wo);
      add_mat("attn.bo", at.bo);
      add_mat("attn.ln_gamma", at.ln_gamma);
      add_mat("attn.ln_beta", at.ln_beta);
    } else if (cfg_.fusion == FusionKind::concat) {
      Rng rng = Rng::derive(s, "fuse_concat");
      add_mat("fuse_concat.w", glorot_mat(2 * cfg_.d, cfg_.d, rng));
      add_mat("fuse_concat.b", Mat(1, cfg_.d));
    }
    {
      LstmParams lstm = LstmParams::init(cfg_.d, cfg_.d_h, s);
      add_mat("lstm.wx", lstm.wx);
      add_mat("lstm.wh", lstm.wh);
      add_mat("lstm.b", lstm.b);
    }
    {
      GlobalFuseParams gf = GlobalFuseParams::init(cfg_.d_h, cfg_.d_text, cfg_.d_f, s);
      add_mat("gfuse.w_video", gf.w_video);
      add_mat("gfuse.w_text", gf.w_text);
      add_mat("gfuse.wo", gf.wo);
      add_mat("gfuse.bo", gf.bo);
      add_mat("gfuse.ln_gamma", gf.ln_gamma);
      add_mat("gfuse.ln_beta", gf.ln_beta);
    }
    {
      ClassifierParams cls = ClassifierParams::init(cfg_.d_f, cfg_.n_classes, s);
      add_mat("cls.w", cls.w);
      add_mat("cls.b", cls.b);
    }
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  struct Bound {
    std::vector<ad::Var> vars;  // aligned to store indices
    ad::Var operator[](int id) const { return vars[static_cast<size_t>(id)]; }
  };

  Bound bind(ad::Tape& tape, bool needs_grad) const {
    Bound b;
    b.vars.reserve(static_cast<size_t>(store_.count()));
    for (int i = 0; i < store_.count(); ++i)
      b.vars.push_back(tape.leaf(store_.value(i), needs_grad && !store_.frozen(i)));
    return b;
  }

  std::vector<const Mat*> gradients(const ad::Tape& tape, const Bound& b) const {
    std::vector<const Mat*> out(static_cast<size_t>(store_.count()), nullptr);
    for (int i = 0; i < store_.count(); ++i) {
      ad::Var v = b.vars[static_cast<size_t>(i)];
      if (tape.requires_grad(v)) out[static_cast<size_t>(i)] = &tape.grad(v);
    }
    return out;
  }

  // Builds the forward graph for one video and returns the 1×C logits.
  ad::Var forward(ad::Tape& tape, const Bound& b, const ModelInput& in, bool training = false,
                  Rng* rng = nullptr, const ModalityUse& use = {},
                  ForwardTrace* trace = nullptr) const {
    check_contract(in.k >= 1, "model forward: input has no clips");
    const bool video_on = in.video_present && use.video;
    const bool audio_on = in.audio_present && use.audio;
    const bool text_on = in.text_present && use.text;
    if (!video_on && !audio_on)
      fail_validation("model forward: both video and audio are masked or absent");
    const int k = in.k;

    // Clip vectors from the trainable heads; a masked modality's
    // features never enter the tape.
    ad::Var v_seq = video_on
                        ? head_forward(tape, tape.constant(in.video_pooled), head_vars(b, "i3d_head"),
                                       cfg_.ln_eps)
                        : tape.constant(Mat(k, cfg_.d));
    ad::Var a_seq = audio_on
                        ? head_forward(tape, tape.constant(in.audio_pooled),
                                       head_vars(b, "audio_head"), cfg_.ln_eps)
                        : tape.constant(Mat(k, cfg_.d));

    // Per-clip modality weights.
    ad::Var w_v, w_a;
    if (!video_on || !audio_on) {
      w_v = tape.constant(Mat(k, 1, video_on ? 1.0 : 0.0));
      w_a = tape.constant(Mat(k, 1, audio_on ? 1.0 : 0.0));
    } else if (cfg_.use_decision_net && cfg_.fusion != FusionKind::cross_attn) {
      ad::Var p_bar = pool_and_norm_tape(tape, tape.constant(in.patch_pooled), training,
                                         cfg_.dropout, rng, cfg_.ln_eps);
      ad::Var t_bar = pool_and_norm_tape(tape, tape.constant(in.tokens_pooled), training,
                                         cfg_.dropout, rng, cfg_.ln_eps);
      DecisionNetVars dn{b[store_.id_of("decision.conv1_w")], b[store_.id_of("decision.conv1_b")],
                         b[store_.id_of("decision.conv2_w")], b[store_.id_of("decision.conv2_b")]};
      ad::Var w = decision_forward_tape(tape, p_bar, t_bar, dn);
      w_v = tape.slice_cols(w, 0, 1);
      w_a = tape.slice_cols(w, 1, 2);
    } else {
      w_v = tape.constant(Mat(k, 1, 1.0));
      w_a = tape.constant(Mat(k, 1, 1.0));
    }
    if (trace) {
      trace->w_v.assign(tape.value(w_v).a.begin(), tape.value(w_v).a.end());
      trace->w_a.assign(tape.value(w_a).a.begin(), tape.value(w_a).a.end());
    }

    // Fusion.
    ad::Var fused;
    switch (cfg_.fusion) {
      case FusionKind::wmff:
      case FusionKind::cross_attn: {
        AttentionVars at{b[store_.id_of("attn.wq")],       b[store_.id_of("attn.wk")],
                         b[store_.id_of("attn.wv")],       b[store_.id_of("attn.wo")],
                         b[store_.id_of("attn.bo")],       b[store_.id_of("attn.ln_gamma")],
                         b[store_.id_of("attn.ln_beta")]};
        fused = wmff_forward_tape(tape, v_seq, a_seq, w_v, w_a, at, cfg_.n_heads, in.clip_index,
                                  in.pad_mask, training, cfg_.dropout, rng, cfg_.ln_eps);
        break;
      }
      case FusionKind::concat: {
        ad::Var x = tape.concat_cols(tape.scale_rows(v_seq, w_v), tape.scale_rows(a_seq, w_a));
        fused = tape.add_row_broadcast(tape.matmul(x, b[store_.id_of("fuse_concat.w")]),
                                       b[store_.id_of("fuse_concat.b")]);
        fused = zero_pad_rows(tape, fused, in.pad_mask);
        break;
      }
      case FusionKind::add: {
        fused = tape.add(tape.scale_rows(v_seq, w_v), tape.scale_rows(a_seq, w_a));
        fused = zero_pad_rows(tape, fused, in.pad_mask);
        break;
      }
    }

    // Temporal aggregation and the global text fusion.
    LstmVars lstm{b[store_.id_of("lstm.wx")], b[store_.id_of("lstm.wh")], b[store_.id_of("lstm.b")]};
    LstmTapeOut lo = lstm_forward_tape(tape, fused, lstm, cfg_.d_h, in.pad_mask);
    GlobalFuseVars gf{b[store_.id_of("gfuse.w_video")], b[store_.id_of("gfuse.w_text")],
                      b[store_.id_of("gfuse.wo")],      b[store_.id_of("gfuse.bo")],
                      b[store_.id_of("gfuse.ln_gamma")], b[store_.id_of("gfuse.ln_beta")]};
    ad::Var text = text_on ? tape.constant(in.text_vec) : tape.constant(Mat(1, cfg_.d_text));
    ad::Var f_att = fuse_global_tape(tape, lo.final, text, text_on, gf, cfg_.ln_eps);
    return classify_tape(tape, f_att, b[store_.id_of("cls.w")], b[store_.id_of("cls.b")]);
  }

  Prediction predict(const ModelInput& in, const ModalityUse& use = {},
                     ForwardTrace* trace = nullptr) const {
    ad::Tape tape;
    Bound b = bind(tape, false);
    ad::Var logits = forward(tape, b, in, false, nullptr, use, trace);
    return prediction_from_logits(tape.value(logits));
  }

  // Mean cross entropy over a batch; one shared binding.
  ad::Var batch_loss(ad::Tape& tape, const Bound& b, const std::vector<const ModelInput*>& batch,
                     bool training, Rng* rng) const {
    check_contract(!batch.empty(), "batch_loss: empty batch");
    ad::Var total;
    for (size_t i = 0; i < batch.size(); ++i) {
      ad::Var logits = forward(tape, b, *batch[i], training, rng);
      ad::Var loss = tape.softmax_xent(logits, batch[i]->target);
      total = i == 0 ? loss : tape.add(total, loss);
    }
    return tape.scale(total, 1.0 / static_cast<double>(batch.size()));
  }

 private:
  ModelConfig cfg_;
  ParamStore store_;

  HeadVars head_vars(const Bound& b, const std::string& prefix) const {
    return HeadVars{b[store_.id_of(prefix + ".w1")], b[store_.id_of(prefix + ".b1")],
                    b[store_.id_of(prefix + ".w2")], b[store_.id_of(prefix + ".b2")]};
  }

  ad::Var zero_pad_rows(ad::Tape& tape, ad::Var seq, const std::vector<uint8_t>& pad_mask) const {
    bool any = false;
    for (uint8_t m : pad_mask) any = any || m != 0;
    if (!any) return seq;
    const Mat& v = tape.value(seq);
    Mat keep(v.rows, v.cols, 1.0);
    for (int i = 0; i < keep.rows; ++i)
      if (pad_mask[static_cast<size_t>(i)])
        for (int j = 0; j < keep.cols; ++j) keep(i, j) = 0.0;
    return tape.mul_const(seq, keep);
  }
};

}  // namespace hfn
