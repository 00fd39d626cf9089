/// Training protocol: cross-entropy objective, Adam with decoupled
/// weight decay, cosine-annealed learning rate updated at the end of
/// each epoch, early stopping on validation macro F1, and the
/// three-repetition six-part experiment driver.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hfn/dataset.hpp"
#include "hfn/evaluation.hpp"
#include "hfn/model.hpp"
#include "hfn/params.hpp"

namespace hfn {

struct TrainConfig {
  int batch_size = 8;
  int max_epochs = 150;
  int patience = 30;
  double lr = 1e-4;
  double lr_min = 1e-6;
  double weight_decay = 5e-5;
  uint64_t seed = 0;
  int crop = 224;
  int fps = 3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    check_contract(batch_size >= 1, "train config: batch_size must be positive");
    check_contract(lr_min < lr, "train config: lr_min must be below lr");
    check_contract(patience < max_epochs, "train config: patience must be below max_epochs");
  }
};

// lr(e) = lr_min + ½ (lr − lr_min) (1 + cos(π e / max_epochs)).
// Exact at both endpoints: lr(0) = lr, lr(max_epochs) = lr_min.
inline double cosine_lr(int epoch, const TrainConfig& cfg) {
  check_contract(epoch >= 0 && epoch <= cfg.max_epochs,
                 "cosine_lr: epoch " + std::to_string(epoch) + " outside [0, max_epochs]");
  double phase = static_cast<double>(epoch) / static_cast<double>(cfg.max_epochs);
  return cfg.lr_min + (cfg.lr - cfg.lr_min) * 0.5 * (1.0 + std::cos(M_PI * phase));
}

// True iff the best value is `patience` or more epochs behind the end
// of the history (ties resolve to the earliest occurrence).
inline bool early_stop(const std::vector<double>& history, int patience = 30) {
  check_contract(!history.empty(), "early_stop: empty history");
  size_t best = 0;
  for (size_t i = 1; i < history.size(); ++i)
    if (history[i] > history[best]) best = i;
  return static_cast<int>(history.size() - 1 - best) >= patience;
}

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double lr = 0.0;
  double val_accuracy = 0.0;
  double val_macro_f1 = 0.0;
};

inline nlohmann::json epoch_log_to_json(const EpochLog& e) {
  return {{"epoch", e.epoch},
          {"loss", e.train_loss},
          {"lr", e.lr},
          {"val_accuracy", e.val_accuracy},
          {"val_macro_f1", e.val_macro_f1}};
}

struct TrainState {
  int epoch = 0;
  int best_epoch = -1;
  double best_val_macro_f1 = -1.0;
  int epochs_since_improvement = 0;
  std::vector<Mat> best_params;  // snapshot aligned to the model store
  uint64_t rng_state = 0;
  bool stopped_early = false;
};

struct TrainResult {
  TrainState state;
  std::vector<EpochLog> history;
};

// Trains one fold. The best-validation-epoch parameters (ties to the
// earlier epoch) are restored into the model before returning.
inline TrainResult train_fold(HfnModel& model, const std::vector<ModelInput>& train_set,
                              const std::vector<ModelInput>& val_set, const TrainConfig& cfg) {
  cfg.validate();
  check_contract(!train_set.empty() && !val_set.empty(),
                 "train_fold: train and val sets must be non-empty");
  AdamOptimizer opt(cfg.lr, cfg.weight_decay, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  Rng shuffle_rng = Rng::derive(cfg.seed, "train/shuffle");
  Rng dropout_rng = Rng::derive(cfg.seed, "train/dropout");

  TrainResult result;
  std::vector<double> f1_history;
  std::vector<int> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  const std::vector<std::string> classes = class_names(model.config().n_classes, false);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    opt.set_lr(cosine_lr(epoch, cfg));
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<const ModelInput*> batch;
      batch.reserve(end - start);
      for (size_t i = start; i < end; ++i)
        batch.push_back(&train_set[static_cast<size_t>(order[i])]);
      ad::Tape tape;
      HfnModel::Bound bound = model.bind(tape, true);
      ad::Var loss = model.batch_loss(tape, bound, batch, true, &dropout_rng);
      double loss_val = tape.value(loss)(0, 0);
      if (!std::isfinite(loss_val))
        fail_numeric("training diverged: non-finite loss at epoch " + std::to_string(epoch));
      tape.backward(loss);
      opt.step(model.params(), model.gradients(tape, bound));
      loss_sum += loss_val;
      ++batches;
    }

    EvalOutcome val = evaluate_model(model, val_set);
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / std::max(1, batches);
    log.lr = opt.lr();
    log.val_accuracy = val.metrics.accuracy;
    log.val_macro_f1 = val.metrics.macro_f1;
    result.history.push_back(log);
    f1_history.push_back(log.val_macro_f1);

    TrainState& st = result.state;
    st.epoch = epoch;
    if (log.val_macro_f1 > st.best_val_macro_f1) {
      st.best_val_macro_f1 = log.val_macro_f1;
      st.best_epoch = epoch;
      st.epochs_since_improvement = 0;
      st.best_params.clear();
      for (int i = 0; i < model.params().count(); ++i)
        st.best_params.push_back(model.params().value(i));
    } else {
      ++st.epochs_since_improvement;
    }
    if (early_stop(f1_history, cfg.patience)) {
      st.stopped_early = true;
      break;
    }
  }

  result.state.rng_state = shuffle_rng.state();
  // Restore the best snapshot.
  check_contract(!result.state.best_params.empty(), "train_fold: no best epoch recorded");
  for (int i = 0; i < model.params().count(); ++i)
    model.params().value(i) = result.state.best_params[static_cast<size_t>(i)];
  return result;
}

// ---------------------------------------------------------------------------
// Experiment protocol: three repetitions, each a fresh random 6-part
// split (one part test, one validation, four training), averaged.

struct RepetitionResult {
  FoldPlan plan;
  TrainResult train;
  MetricsReport test_metrics;
  double mean_w_v = 0.0;
  double mean_w_a = 0.0;
};

struct ProtocolResult {
  std::vector<RepetitionResult> repetitions;
  double mean_accuracy = 0.0;
  double mean_macro_f1 = 0.0;
  double mean_w_v = 0.0;
  double mean_w_a = 0.0;
};

inline ProtocolResult run_protocol(const std::vector<ModelInput>& dataset, ModelConfig model_cfg,
                                   const TrainConfig& train_cfg, int repetitions = 3,
                                   const std::function<void(int, const RepetitionResult&,
                                                            const HfnModel&)>& on_repetition = {}) {
  check_contract(static_cast<int>(dataset.size()) >= kFoldParts,
                 "run_protocol: dataset smaller than the number of parts");
  std::vector<FoldPlan> plans =
      make_folds(static_cast<int>(dataset.size()), train_cfg.seed, repetitions);
  ProtocolResult result;
  auto subset = [&](const std::vector<int>& idx) {
    std::vector<ModelInput> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(dataset[static_cast<size_t>(i)]);
    return out;
  };
  for (int rep = 0; rep < repetitions; ++rep) {
    const FoldPlan& plan = plans[static_cast<size_t>(rep)];
    ModelConfig mc = model_cfg;
    mc.seed = Rng::derive(train_cfg.seed, "protocol/model/" + std::to_string(rep)).next_u64();
    HfnModel model(mc);
    TrainConfig tc = train_cfg;
    tc.seed = Rng::derive(train_cfg.seed, "protocol/train/" + std::to_string(rep)).next_u64();
    RepetitionResult rr;
    rr.plan = plan;
    rr.train = train_fold(model, subset(plan.train_indices()), subset(plan.val_indices()), tc);
    EvalOutcome test = evaluate_model(model, subset(plan.test_indices()));
    rr.test_metrics = test.metrics;
    rr.test_metrics.repetition = rep;
    rr.mean_w_v = test.mean_w_v;
    rr.mean_w_a = test.mean_w_a;
    if (on_repetition) on_repetition(rep, rr, model);
    result.repetitions.push_back(std::move(rr));
  }
  for (const auto& rr : result.repetitions) {
    result.mean_accuracy += rr.test_metrics.accuracy;
    result.mean_macro_f1 += rr.test_metrics.macro_f1;
    result.mean_w_v += rr.mean_w_v;
    result.mean_w_a += rr.mean_w_a;
  }
  double inv = 1.0 / static_cast<double>(result.repetitions.size());
  result.mean_accuracy *= inv;
  result.mean_macro_f1 *= inv;
  result.mean_w_v *= inv;
  result.mean_w_a *= inv;
  return result;
}

}  // namespace hfn
