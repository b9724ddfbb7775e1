#include "ssdpt/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "ssdpt/checkpoint.hpp"
#include "ssdpt/scoring.hpp"
#include "ssdpt/segmentation.hpp"
#include "ssdpt/threading.hpp"
#include "ssdpt/wav.hpp"

namespace fs = std::filesystem;

namespace ssdpt {

MelFilterbank make_filterbank(const FeatureConfig& cfg) {
  return mel_filterbank(cfg.n_mels, cfg.window, cfg.sample_rate, cfg.f_min,
                        cfg.f_max);
}

LogMelFeature extract_feature(const ClipMeta& clip, const FeatureConfig& cfg,
                              const MelFilterbank& fb) {
  const Waveform w = load_wav(clip.path);
  if (w.sample_rate != cfg.sample_rate) {
    throw std::runtime_error("extract_feature: " + clip.path + " has sample rate " +
                             std::to_string(w.sample_rate) + ", expected " +
                             std::to_string(cfg.sample_rate));
  }
  const Matrix spec = stft_magnitude(w, cfg.window, cfg.hop);
  return log_mel(spec, fb, clip.clip_id);
}

uint64_t machine_seed(uint64_t base, const std::string& machine_type) {
  // FNV-1a over the machine name keeps per-machine streams independent of
  // the order machines are trained in.
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : machine_type) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return derive_seed(base, h);
}

std::vector<MachineTrainResult> train_corpus(
    const std::vector<ClipMeta>& clips, const LabelSpace& space,
    const RunConfig& cfg, const std::string& machine_filter,
    const std::string& log_dir, const std::string& checkpoint_dir) {
  const MelFilterbank fb = make_filterbank(cfg.features);

  std::vector<MachineTrainResult> results;
  for (const auto& machine : space.machine_types) {
    if (!machine_filter.empty() && machine != machine_filter) {
      continue;
    }

    std::vector<const ClipMeta*> train_clips;
    for (const auto& clip : clips) {
      if (clip.machine_type == machine && clip.split == "train") {
        train_clips.push_back(&clip);
      }
    }
    if (train_clips.empty()) {
      throw std::runtime_error("train_corpus: no training clips for " + machine);
    }

    std::vector<SegmentBatch> batches(train_clips.size());
    parallel_for(static_cast<int>(train_clips.size()), cfg.training.threads,
                 [&](int i) {
                   const LogMelFeature feat =
                       extract_feature(*train_clips[i], cfg.features, fb);
                   batches[i] = segment(feat, cfg.segmentation.frame_length,
                                        cfg.segmentation.hop_train,
                                        cfg.segmentation.mode,
                                        space.id_of(machine, train_clips[i]->section));
                 });

    DptConfig model_cfg = cfg.model;
    model_cfg.frame_length = cfg.segmentation.frame_length;
    model_cfg.bands = cfg.features.n_mels;
    if (model_cfg.num_ids == 0) {
      model_cfg.num_ids = space.id_count(machine);
    }

    TrainConfig train_cfg = cfg.training;
    train_cfg.mask = cfg.mask;
    train_cfg.mixup_a = cfg.mixup_a;
    train_cfg.seed = machine_seed(cfg.training.seed, machine);

    FitSinks sinks;
    std::ofstream log_file;
    if (!log_dir.empty()) {
      const fs::path log_path = fs::path(log_dir) / (machine + "_train_log.jsonl");
      log_file.open(log_path);
      if (!log_file.is_open()) {
        throw std::runtime_error("train_corpus: cannot open log " + log_path.string());
      }
      sinks.log = &log_file;
    }
    if (!checkpoint_dir.empty() && cfg.checkpoint_every > 0) {
      sinks.checkpoint_prefix =
          (fs::path(checkpoint_dir) / (machine + ".")).string();
      sinks.checkpoint_every = cfg.checkpoint_every;
    }

    MachineTrainResult result;
    result.machine_type = machine;
    result.state = fit(batches, model_cfg, train_cfg, sinks);
    if (!checkpoint_dir.empty()) {
      save_checkpoint((fs::path(checkpoint_dir) / (machine + ".ckpt")).string(),
                      result.state.model);
    }
    results.push_back(std::move(result));
  }
  if (results.empty()) {
    throw std::runtime_error("train_corpus: no machine matched " + machine_filter);
  }
  return results;
}

std::vector<ScoreRecord> score_corpus(
    const std::vector<ClipMeta>& clips, const LabelSpace& space,
    const std::map<std::string, const DptModel*>& models, const RunConfig& cfg,
    double beta, const std::string& split, int threads) {
  const MelFilterbank fb = make_filterbank(cfg.features);

  std::vector<const ClipMeta*> targets;
  for (const auto& clip : clips) {
    if (clip.split == split && models.count(clip.machine_type) > 0) {
      targets.push_back(&clip);
    }
  }

  std::vector<ScoreRecord> records(targets.size());
  parallel_for(static_cast<int>(targets.size()), threads, [&](int i) {
    const ClipMeta& clip = *targets[i];
    ScoreRecord r;
    r.clip_id = clip.clip_id;
    r.machine_type = clip.machine_type;
    r.section = clip.section;
    r.domain = clip.domain;
    r.label = clip.condition;
    try {
      const DptModel& model = *models.at(clip.machine_type);
      const LogMelFeature feat = extract_feature(clip, cfg.features, fb);
      // Test-time segmentation is strict with hop_test.
      const SegmentBatch segs =
          segment(feat, cfg.segmentation.frame_length, cfg.segmentation.hop_test,
                  SegmentMode::kStrict, space.id_of(clip.machine_type, clip.section));
      const ClipScore s = score_clip(segs, model, segs.machine_id);
      r.score_cls = s.cls;
      r.score_rec = s.rec;
      r.score_total = total_score(s.cls, s.rec, beta);
    } catch (const std::exception& e) {
      r.valid = false;
      r.error = e.what();
    }
    records[i] = std::move(r);
  });
  return records;
}

}  // namespace ssdpt
