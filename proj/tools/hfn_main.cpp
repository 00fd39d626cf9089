// hfn command-line tool: ingest, train, eval, ablate, profile, report.
//
// Exit codes: 0 success, 2 missing inputs, 3 validation failure,
// 4 runtime or numeric failure.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hfn/hfn.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMissingInput = 2;
constexpr int kExitValidation = 3;
constexpr int kExitRuntime = 4;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string checkpoint;
};

hfn::RunConfig resolve_config(const CommonArgs& args) {
  hfn::RunConfig cfg = hfn::parse_config(args.config_path, args.overrides);
  if (!args.out_dir.empty()) {
    cfg.set("out_dir", args.out_dir);
    cfg.validate();
  }
  return cfg;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) hfn::fail_io("cannot write " + path);
  os << content;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Every command that produces outputs drops the resolved configuration
// and its hashes next to them.
void write_run_artifacts(const hfn::RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  write_text(cfg.out_dir + "/resolved_config.txt", cfg.canonical());
  write_text(cfg.out_dir + "/config_hash.txt",
             "config_hash=" + cfg.hash() + "\nmodel_hash=" + cfg.model_hash() + "\n");
}

struct DatasetBundle {
  std::vector<hfn::VideoRecord> records;
  std::vector<hfn::ModelInput> inputs;
};

DatasetBundle build_dataset(const hfn::RunConfig& cfg, const hfn::Featurizer& featurizer) {
  DatasetBundle ds;
  if (cfg.dataset == "synthetic") {
    ds.records = hfn::make_synthetic(cfg.synthetic_spec()).records;
  } else {
    if (cfg.manifest.empty())
      hfn::fail_io("no manifest configured (set manifest=PATH or dataset=synthetic)");
    ds.records = hfn::load_manifest(cfg.manifest);
  }
  ds.inputs = featurizer.featurize_all(ds.records);
  return ds;
}

std::string default_checkpoint_path(const hfn::RunConfig& cfg) {
  return cfg.out_dir + "/checkpoint.hfnc";
}

hfn::HfnModel load_model_from_checkpoint(const hfn::RunConfig& cfg, const std::string& path) {
  if (!fs::exists(path)) hfn::fail_io("checkpoint not found: " + path);
  hfn::Checkpoint ck = hfn::load_checkpoint(path);
  if (ck.config_hash != cfg.model_hash())
    hfn::fail_validation("checkpoint " + path + " was produced with a different model shape (hash " +
                         ck.config_hash + ", current " + cfg.model_hash() + ")");
  hfn::HfnModel model(cfg.model_config());
  hfn::restore_params(model.params(), ck);
  return model;
}

json predictions_json(const std::vector<hfn::ModelInput>& inputs,
                      const std::vector<hfn::Prediction>& preds,
                      const std::vector<hfn::ForwardTrace>& traces) {
  json lines = json::array();
  for (size_t i = 0; i < inputs.size(); ++i) {
    json weights = json::array();
    for (size_t c = 0; c < traces[i].w_v.size(); ++c)
      weights.push_back({{"clip", c}, {"w_v", traces[i].w_v[c]}, {"w_a", traces[i].w_a[c]}});
    lines.push_back({{"id", inputs[i].id},
                     {"label", hfn::label_name(inputs[i].label)},
                     {"probs", preds[i].probs},
                     {"predicted", preds[i].predicted},
                     {"decision_weights", weights}});
  }
  return lines;
}

int cmd_ingest(const CommonArgs& args) {
  hfn::RunConfig cfg = resolve_config(args);
  if (cfg.cache_dir.empty()) {
    cfg.set("cache_dir", cfg.out_dir + "/cache");
    cfg.validate();
  }
  write_run_artifacts(cfg);
  hfn::Featurizer featurizer(cfg.pipeline_config());
  DatasetBundle ds = build_dataset(cfg, featurizer);
  json summary;
  summary["n_records"] = ds.records.size();
  summary["cache_dir"] = cfg.cache_dir;
  json per_record = json::array();
  for (size_t i = 0; i < ds.inputs.size(); ++i) {
    const auto& in = ds.inputs[i];
    per_record.push_back({{"id", in.id},
                          {"clips", in.k},
                          {"video", in.video_present},
                          {"audio", in.audio_present},
                          {"text", in.text_present},
                          {"label", hfn::label_name(in.label)}});
  }
  summary["records"] = per_record;
  write_json(cfg.out_dir + "/ingest_summary.json", summary);
  std::cout << "ingested " << ds.records.size() << " records; features cached under "
            << cfg.cache_dir << "\n";
  return kExitOk;
}

int cmd_train(const CommonArgs& args) {
  hfn::RunConfig cfg = resolve_config(args);
  write_run_artifacts(cfg);
  hfn::Featurizer featurizer(cfg.pipeline_config());
  DatasetBundle ds = build_dataset(cfg, featurizer);

  double best_val = -1.0;
  int best_rep = 0;
  auto on_rep = [&](int rep, const hfn::RepetitionResult& rr, const hfn::HfnModel& model) {
    std::string tag = "_rep" + std::to_string(rep);
    hfn::save_checkpoint(cfg.out_dir + "/checkpoint" + tag + ".hfnc", model.params(),
                         cfg.model_hash());
    std::string log;
    for (const auto& e : rr.train.history) log += hfn::epoch_log_to_json(e).dump() + "\n";
    write_text(cfg.out_dir + "/train_log" + tag + ".jsonl", log);
    write_json(cfg.out_dir + "/fold_plan" + tag + ".json", hfn::fold_plan_to_json(rr.plan));
    if (rr.train.state.best_val_macro_f1 > best_val) {
      best_val = rr.train.state.best_val_macro_f1;
      best_rep = rep;
      hfn::save_checkpoint(default_checkpoint_path(cfg), model.params(), cfg.model_hash());
    }
    std::cout << "repetition " << rep << ": best val macro F1 "
              << rr.train.state.best_val_macro_f1 << " (epoch " << rr.train.state.best_epoch
              << "), test macro F1 " << rr.test_metrics.macro_f1 << "\n";
  };

  hfn::ProtocolResult result = hfn::run_protocol(ds.inputs, cfg.model_config(),
                                                 cfg.train_config(), cfg.repetitions, on_rep);
  json summary;
  summary["mean_accuracy"] = result.mean_accuracy;
  summary["mean_macro_f1"] = result.mean_macro_f1;
  summary["mean_w_v"] = result.mean_w_v;
  summary["mean_w_a"] = result.mean_w_a;
  summary["best_repetition"] = best_rep;
  summary["config_hash"] = cfg.hash();
  json reps = json::array();
  for (const auto& rr : result.repetitions) {
    json r = hfn::metrics_to_json(rr.test_metrics);
    r["best_epoch"] = rr.train.state.best_epoch;
    r["best_val_macro_f1"] = rr.train.state.best_val_macro_f1;
    r["stopped_early"] = rr.train.state.stopped_early;
    r["mean_w_v"] = rr.mean_w_v;
    r["mean_w_a"] = rr.mean_w_a;
    reps.push_back(r);
  }
  summary["repetitions"] = reps;
  write_json(cfg.out_dir + "/protocol_summary.json", summary);
  std::cout << "mean test accuracy " << result.mean_accuracy << ", mean macro F1 "
            << result.mean_macro_f1 << "\n";
  return kExitOk;
}

int cmd_eval(const CommonArgs& args) {
  hfn::RunConfig cfg = resolve_config(args);
  std::string ckpt = args.checkpoint.empty() ? default_checkpoint_path(cfg) : args.checkpoint;
  hfn::HfnModel model = load_model_from_checkpoint(cfg, ckpt);
  write_run_artifacts(cfg);
  hfn::Featurizer featurizer(cfg.pipeline_config());
  DatasetBundle ds = build_dataset(cfg, featurizer);
  hfn::EvalOptions opt;
  opt.merge_ambiguous = cfg.merge_ambiguous;
  hfn::EvalOutcome out = hfn::evaluate_model(model, ds.inputs, opt);
  out.metrics.config_hash = cfg.hash();
  write_json(cfg.out_dir + "/metrics.json", hfn::metrics_to_json(out.metrics));
  std::string csv = hfn::metrics_csv_header(out.metrics.class_order) + "\n" +
                    hfn::metrics_csv_row("eval", out.metrics) + "\n";
  write_text(cfg.out_dir + "/metrics.csv", csv);
  std::string preds;
  json lines = predictions_json(ds.inputs, out.predictions, out.traces);
  for (const auto& l : lines) preds += l.dump() + "\n";
  write_text(cfg.out_dir + "/predictions.jsonl", preds);
  std::cout << "accuracy " << out.metrics.accuracy << ", macro F1 " << out.metrics.macro_f1
            << " over " << out.metrics.n << " samples\n";
  return kExitOk;
}

int cmd_ablate(const CommonArgs& args) {
  hfn::RunConfig cfg = resolve_config(args);
  std::string ckpt = args.checkpoint.empty() ? default_checkpoint_path(cfg) : args.checkpoint;
  hfn::HfnModel model = load_model_from_checkpoint(cfg, ckpt);
  write_run_artifacts(cfg);
  hfn::Featurizer featurizer(cfg.pipeline_config());
  DatasetBundle ds = build_dataset(cfg, featurizer);
  hfn::AblationTable table = hfn::ablate_modalities(model, ds.inputs,
                                                    hfn::modality_ablation_configs(),
                                                    cfg.merge_ambiguous);
  write_json(cfg.out_dir + "/ablation.json", hfn::ablation_to_json(table));
  std::string csv;
  bool first = true;
  for (const auto& name : table.order) {
    const auto& m = table.rows.at(name);
    if (first) {
      csv += hfn::metrics_csv_header(m.class_order, "configuration") + "\n";
      first = false;
    }
    csv += hfn::metrics_csv_row(name, m) + "\n";
  }
  write_text(cfg.out_dir + "/ablation.csv", csv);
  for (const auto& name : table.order)
    std::cout << name << ": macro F1 " << table.rows.at(name).macro_f1 << "\n";
  return kExitOk;
}

int cmd_profile(const CommonArgs& args) {
  hfn::RunConfig cfg = resolve_config(args);
  hfn::Featurizer featurizer(cfg.pipeline_config());
  hfn::HfnModel model = [&]() {
    if (!args.checkpoint.empty()) return load_model_from_checkpoint(cfg, args.checkpoint);
    return hfn::HfnModel(cfg.model_config());
  }();
  write_run_artifacts(cfg);
  DatasetBundle ds = build_dataset(cfg, featurizer);
  size_t probe_n = std::min<size_t>(8, ds.inputs.size());
  std::vector<hfn::ModelInput> probe(ds.inputs.begin(),
                                     ds.inputs.begin() + static_cast<long>(probe_n));
  std::vector<hfn::VideoRecord> probe_records(ds.records.begin(),
                                              ds.records.begin() + static_cast<long>(probe_n));
  hfn::EfficiencyProfile prof = hfn::efficiency_profile(model, probe, &featurizer, &probe_records);
  json j;
  j["trainable_params"] = prof.trainable_params;
  j["frozen_params"] = prof.frozen_params;
  j["total_params"] = prof.total_params;
  j["param_mb"] = prof.param_mb;
  j["probe_size"] = probe_n;
  j["infer_seconds_cached_features"] = prof.infer_seconds_cached;
  j["infer_seconds_with_extraction"] = prof.infer_seconds_extracted;
  write_json(cfg.out_dir + "/profile.json", j);
  std::cout << "trainable params " << prof.trainable_params << ", frozen params "
            << prof.frozen_params << " (" << std::fixed << std::setprecision(2) << prof.param_mb
            << " MB total)\n"
            << "inference (cached features) " << std::setprecision(4)
            << prof.infer_seconds_cached << " s/probe, with extraction "
            << prof.infer_seconds_extracted << " s/probe\n";
  return kExitOk;
}

void print_metrics_table(const std::string& title, const json& rows) {
  std::cout << "\n" << title << "\n";
  std::cout << std::left << std::setw(16) << "row" << std::right << std::setw(10) << "accuracy"
            << std::setw(10) << "macroF1";
  bool header_done = false;
  std::vector<std::string> class_cols;
  for (auto it = rows.begin(); it != rows.end(); ++it) {
    const json& m = it.value();
    if (!header_done && m.contains("classes")) {
      for (auto c = m["classes"].begin(); c != m["classes"].end(); ++c) {
        class_cols.push_back(c.key());
        std::cout << std::setw(24) << (c.key() + " P/R/F1");
      }
      header_done = true;
    }
    break;
  }
  std::cout << "\n";
  for (auto it = rows.begin(); it != rows.end(); ++it) {
    const json& m = it.value();
    std::cout << std::left << std::setw(16) << it.key() << std::right << std::fixed
              << std::setprecision(4) << std::setw(10) << m.value("accuracy", 0.0)
              << std::setw(10) << m.value("macro_f1", 0.0);
    for (const auto& c : class_cols) {
      const json& cm = m["classes"][c];
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.2f/%.2f/%.2f", cm.value("precision", 0.0),
                    cm.value("recall", 0.0), cm.value("f1", 0.0));
      std::cout << std::setw(24) << buf;
    }
    std::cout << "\n";
  }
}

int cmd_report(const std::string& in_dir) {
  if (!fs::exists(in_dir)) hfn::fail_io("report: no such directory: " + in_dir);
  bool found = false;
  auto read = [](const std::string& p) {
    std::ifstream is(p);
    json j;
    is >> j;
    return j;
  };
  if (fs::exists(in_dir + "/protocol_summary.json")) {
    found = true;
    json s = read(in_dir + "/protocol_summary.json");
    std::cout << "protocol summary (" << s.value("config_hash", std::string("?")) << ")\n"
              << "  mean accuracy  " << std::fixed << std::setprecision(4)
              << s.value("mean_accuracy", 0.0) << "\n"
              << "  mean macro F1  " << s.value("mean_macro_f1", 0.0) << "\n"
              << "  mean w_v / w_a " << s.value("mean_w_v", 0.0) << " / "
              << s.value("mean_w_a", 0.0) << "\n";
    json rows = json::object();
    int i = 0;
    for (const auto& r : s["repetitions"]) rows["repetition " + std::to_string(i++)] = r;
    print_metrics_table("per-repetition test metrics", rows);
  }
  if (fs::exists(in_dir + "/metrics.json")) {
    found = true;
    json rows = json::object();
    rows["eval"] = read(in_dir + "/metrics.json");
    print_metrics_table("evaluation", rows);
  }
  if (fs::exists(in_dir + "/ablation.json")) {
    found = true;
    print_metrics_table("modality ablations", read(in_dir + "/ablation.json"));
  }
  if (fs::exists(in_dir + "/profile.json")) {
    found = true;
    json p = read(in_dir + "/profile.json");
    std::cout << "\nefficiency profile\n"
              << "  trainable params " << p.value("trainable_params", 0) << "\n"
              << "  frozen params    " << p.value("frozen_params", 0) << "\n"
              << "  total size       " << std::fixed << std::setprecision(2)
              << p.value("param_mb", 0.0) << " MB\n"
              << "  inference        " << std::setprecision(4)
              << p.value("infer_seconds_cached_features", 0.0) << " s cached, "
              << p.value("infer_seconds_with_extraction", 0.0) << " s with extraction\n";
  }
  if (!found) hfn::fail_io("report: no report artifacts under " + in_dir);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hfn: clip-wise multimodal fake-news detection"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string report_dir;

  auto add_common = [&](CLI::App* cmd, bool with_checkpoint) {
    cmd->add_option("--config", args.config_path, "configuration file (key = value lines)");
    cmd->add_option("--set", args.overrides, "override a config key, e.g. --set lr=0.001");
    cmd->add_option("--out", args.out_dir, "output directory (overrides out_dir)");
    if (with_checkpoint)
      cmd->add_option("--checkpoint", args.checkpoint, "checkpoint file to load");
  };

  CLI::App* ingest = app.add_subcommand("ingest", "validate a manifest and build the feature cache");
  add_common(ingest, false);
  CLI::App* train = app.add_subcommand("train", "run the full training protocol");
  add_common(train, false);
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, true);
  CLI::App* ablate = app.add_subcommand("ablate", "modality-loss ablation table");
  add_common(ablate, true);
  CLI::App* profile = app.add_subcommand("profile", "parameter counts and inference timing");
  add_common(profile, true);
  CLI::App* report = app.add_subcommand("report", "print human-readable summaries");
  report->add_option("--in", report_dir, "directory with run outputs")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) return cmd_ingest(args);
    if (train->parsed()) return cmd_train(args);
    if (eval->parsed()) return cmd_eval(args);
    if (ablate->parsed()) return cmd_ablate(args);
    if (profile->parsed()) return cmd_profile(args);
    if (report->parsed()) return cmd_report(report_dir);
  } catch (const hfn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case hfn::ErrorKind::io: return kExitMissingInput;
      case hfn::ErrorKind::validation: return kExitValidation;
      default: return kExitRuntime;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
