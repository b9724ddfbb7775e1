// Command-line front end: synth | features | train | score | eval.
// Exit codes: 0 success, 1 runtime I/O, 2 usage or config, 3 numerical.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssdpt/checkpoint.hpp"
#include "ssdpt/config.hpp"
#include "ssdpt/dataset.hpp"
#include "ssdpt/io.hpp"
#include "ssdpt/pipeline.hpp"
#include "ssdpt/scoring.hpp"
#include "ssdpt/threading.hpp"
#include "ssdpt/training.hpp"

namespace fs = std::filesystem;
using namespace ssdpt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct CommonOpts {
  std::string config_path;
  int threads = 1;
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg = opts.config_path.empty() ? default_config()
                                           : load_config(opts.config_path);
  cfg.training.threads = opts.threads;
  return cfg;
}

int run_synth(const std::string& out_dir, const SynthSpec& spec) {
  synth_corpus(out_dir, spec);
  std::cout << "wrote corpus to " << out_dir << "\n";
  return kExitOk;
}

int run_features(const std::string& data_dir, const std::string& out_dir,
                 const RunConfig& cfg) {
  cfg.validate();
  std::vector<std::string> warnings;
  const auto clips = scan_dcase(data_dir, &warnings);
  for (const auto& w : warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  const MelFilterbank fb = make_filterbank(cfg.features);

  parallel_for(static_cast<int>(clips.size()), cfg.training.threads, [&](int i) {
    const ClipMeta& clip = clips[i];
    const LogMelFeature feat = extract_feature(clip, cfg.features, fb);
    const fs::path rel = fs::relative(clip.path, data_dir);
    const fs::path dst = fs::path(out_dir) / rel.parent_path();
    fs::create_directories(dst);
    const std::string stem = fs::path(clip.path).stem().string();
    save_feature((dst / (stem + ".lmel")).string(), feat);
    save_feature_manifest((dst / (stem + ".json")).string(), clip);
  });
  std::cout << "wrote " << clips.size() << " features to " << out_dir << "\n";
  return kExitOk;
}

int run_train(const std::string& data_dir, const std::string& out_dir,
              const std::string& machine, const RunConfig& cfg) {
  cfg.validate();
  std::vector<std::string> warnings;
  const auto clips = scan_dcase(data_dir, &warnings);
  for (const auto& w : warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  const LabelSpace space = label_space(clips);
  fs::create_directories(out_dir);
  const auto results = train_corpus(clips, space, cfg, machine, out_dir, out_dir);
  for (const auto& r : results) {
    const auto& h = r.state.history;
    std::cout << r.machine_type << ": "
              << r.state.model.parameter_count() << " parameters, "
              << h.size() << " epochs";
    if (!h.empty()) {
      std::cout << ", final L " << h.back().loss;
    }
    std::cout << "\n";
  }
  return kExitOk;
}

int run_score(const std::string& data_dir, const std::string& ckpt_dir,
              const std::string& out_csv, const RunConfig& cfg, double beta,
              const std::string& split, std::optional<double> fit_gamma_fpr) {
  cfg.validate();
  std::vector<std::string> warnings;
  const auto clips = scan_dcase(data_dir, &warnings);
  const LabelSpace space = label_space(clips);

  std::map<std::string, DptModel> loaded;
  std::map<std::string, const DptModel*> models;
  for (const auto& machine : space.machine_types) {
    const fs::path path = fs::path(ckpt_dir) / (machine + ".ckpt");
    if (!fs::exists(path)) {
      std::cerr << "warning: no checkpoint for " << machine << ", skipping\n";
      continue;
    }
    DptModel model = load_checkpoint(path.string());
    if (model.config.frame_length != cfg.segmentation.frame_length ||
        model.config.bands != cfg.features.n_mels) {
      throw ConfigError("checkpoint " + path.string() +
                        " shape does not match the feature/segmentation config");
    }
    loaded.emplace(machine, std::move(model));
  }
  if (loaded.empty()) {
    throw ConfigError("no usable checkpoints in " + ckpt_dir);
  }
  for (const auto& [name, model] : loaded) {
    models[name] = &model;
  }

  const auto records =
      score_corpus(clips, space, models, cfg, beta, split, cfg.training.threads);
  int failed = 0;
  for (const auto& r : records) {
    if (!r.valid) {
      ++failed;
      std::cerr << "warning: could not score " << r.clip_id << ": " << r.error
                << "\n";
    }
  }
  save_scores_csv(out_csv, records);
  std::cout << "scored " << (records.size() - failed) << " clips";
  if (failed > 0) {
    std::cout << " (" << failed << " failed)";
  }
  std::cout << " -> " << out_csv << "\n";

  if (fit_gamma_fpr.has_value()) {
    std::vector<double> totals;
    for (const auto& r : records) {
      if (r.valid) {
        totals.push_back(r.score_total);
      }
    }
    const double tau = fit_gamma_threshold(totals, *fit_gamma_fpr);
    std::printf("{\"tau\":%.12g,\"fpr\":%.12g}\n", tau, *fit_gamma_fpr);
  }
  return kExitOk;
}

int run_eval(const std::string& scores_csv, const std::string& out_json,
             const std::string& out_csv, const std::string& roc_csv,
             const RunConfig& cfg) {
  const auto records = load_scores_csv(scores_csv);
  int skipped = 0;
  for (const auto& r : records) {
    if (!r.valid) {
      ++skipped;
    }
  }
  if (skipped > 0) {
    std::cerr << "warning: skipping " << skipped << " unscored rows\n";
  }
  const EvalReport report =
      build_report(records, cfg.evaluation.p, cfg.evaluation.tie_policy);
  if (!out_json.empty()) {
    save_report_json(out_json, report);
  }
  if (!out_csv.empty()) {
    save_report_csv(out_csv, report);
  }
  if (!roc_csv.empty()) {
    save_roc_csv(roc_csv, records);
  }
  std::printf("h-AUC %.6f  h-pAUC %.6f  (%zu cells, p=%g, ties=%s)\n",
              report.h_auc, report.h_pauc, report.cells.size(), report.p,
              to_string(report.tie_policy).c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SSDPT anomalous-sound-detection pipeline"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string synth_out;
  SynthSpec spec;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--machines", spec.machine_types, "machine type count");
  synth->add_option("--sections", spec.sections, "sections per machine");
  synth->add_option("--clips", spec.clips_per_section,
                    "train clips per section (test emits the same count)");
  synth->add_option("--anomaly-fraction", spec.anomaly_fraction_test,
                    "anomalous fraction of test clips");
  synth->add_option("--seed", spec.seed, "corpus seed");
  synth->add_option("--duration", spec.duration_s, "clip length in seconds");
  synth->add_option("--target-train-clips", spec.target_train_clips,
                    "extra scarce target-domain train clips per section");

  // features
  auto* features = app.add_subcommand("features", "extract log-mel features");
  std::string feat_data, feat_out;
  CommonOpts feat_opts;
  features->add_option("--data", feat_data, "corpus directory")->required();
  features->add_option("--out", feat_out, "output directory")->required();
  features->add_option("--config", feat_opts.config_path, "config JSON");
  features->add_option("--threads", feat_opts.threads, "worker threads");

  // train
  auto* train = app.add_subcommand("train", "train one model per machine type");
  std::string train_data, train_out, train_machine;
  CommonOpts train_opts;
  std::optional<int> train_epochs;
  std::optional<uint64_t> train_seed;
  std::optional<double> train_lr;
  train->add_option("--data", train_data, "corpus directory")->required();
  train->add_option("--out", train_out, "checkpoint/log directory")->required();
  train->add_option("--config", train_opts.config_path, "config JSON");
  train->add_option("--machine", train_machine, "train only this machine type");
  train->add_option("--epochs", train_epochs, "override epoch count");
  train->add_option("--seed", train_seed, "override training seed");
  train->add_option("--lr", train_lr, "override learning rate");
  train->add_option("--threads", train_opts.threads, "worker threads");

  // score
  auto* score = app.add_subcommand("score", "score clips with trained models");
  std::string score_data, score_ckpt, score_out, score_split = "test";
  CommonOpts score_opts;
  std::optional<double> score_beta;
  std::optional<double> score_gamma_fpr;
  score->add_option("--data", score_data, "corpus directory")->required();
  score->add_option("--ckpt", score_ckpt, "checkpoint directory")->required();
  score->add_option("--out", score_out, "output CSV")->required();
  score->add_option("--config", score_opts.config_path, "config JSON");
  score->add_option("--beta", score_beta, "reconstruction score weight");
  score->add_option("--split", score_split, "clip split to score (test|train)")
      ->check(CLI::IsMember({"test", "train"}));
  score->add_option("--fit-gamma-fpr", score_gamma_fpr,
                    "fit a gamma threshold at this false-positive rate and "
                    "print it");
  score->add_option("--threads", score_opts.threads, "worker threads");

  // eval
  auto* eval = app.add_subcommand("eval", "AUC/pAUC report from a score CSV");
  std::string eval_scores, eval_json, eval_csv, eval_roc, eval_tie;
  CommonOpts eval_opts;
  std::optional<double> eval_p;
  eval->add_option("--scores", eval_scores, "score CSV")->required();
  eval->add_option("--out-json", eval_json, "report JSON path");
  eval->add_option("--out-csv", eval_csv, "report CSV path");
  eval->add_option("--roc", eval_roc, "per-cell ROC points CSV");
  eval->add_option("--config", eval_opts.config_path, "config JSON");
  eval->add_option("--p", eval_p, "pAUC false-positive-rate budget");
  eval->add_option("--tie", eval_tie, "tie policy (half|strict)")
      ->check(CLI::IsMember({"half", "strict"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      return run_synth(synth_out, spec);
    }
    if (features->parsed()) {
      return run_features(feat_data, feat_out, resolve_config(feat_opts));
    }
    if (train->parsed()) {
      RunConfig cfg = resolve_config(train_opts);
      if (train_epochs.has_value()) {
        cfg.training.epochs = *train_epochs;
      }
      if (train_seed.has_value()) {
        cfg.training.seed = *train_seed;
      }
      if (train_lr.has_value()) {
        cfg.training.learning_rate = *train_lr;
      }
      return run_train(train_data, train_out, train_machine, cfg);
    }
    if (score->parsed()) {
      RunConfig cfg = resolve_config(score_opts);
      const double beta =
          score_beta.has_value() ? *score_beta : cfg.scoring.beta;
      if (beta < 0.0) {
        throw ConfigError("beta must be >= 0");
      }
      return run_score(score_data, score_ckpt, score_out, cfg, beta,
                       score_split, score_gamma_fpr);
    }
    if (eval->parsed()) {
      RunConfig cfg = resolve_config(eval_opts);
      if (eval_p.has_value()) {
        cfg.evaluation.p = *eval_p;
      }
      if (!eval_tie.empty()) {
        cfg.evaluation.tie_policy = tie_policy_from_string(eval_tie);
      }
      if (cfg.evaluation.p <= 0.0 || cfg.evaluation.p > 1.0) {
        throw ConfigError("p must be in (0, 1]");
      }
      return run_eval(eval_scores, eval_json, eval_csv, eval_roc, cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TrainingDiverged& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
