#pragma once

#include <map>
#include <string>
#include <vector>

#include "ssdpt/config.hpp"
#include "ssdpt/dataset.hpp"
#include "ssdpt/io.hpp"
#include "ssdpt/model.hpp"
#include "ssdpt/training.hpp"

namespace ssdpt {

// Wav -> log-mel for one clip. The clip must match the configured sample
// rate; there is no resampling.
LogMelFeature extract_feature(const ClipMeta& clip, const FeatureConfig& cfg,
                              const MelFilterbank& fb);

MelFilterbank make_filterbank(const FeatureConfig& cfg);

struct MachineTrainResult {
  std::string machine_type;
  TrainState state;
};

// Trains one model per machine type (sections are the class labels).
// Per-machine seeds derive from the configured seed and the machine name.
// When log_dir is set, a "<machine>_train_log.jsonl" file is written there;
// when checkpoint_dir is set, periodic and final checkpoints land there.
std::vector<MachineTrainResult> train_corpus(
    const std::vector<ClipMeta>& clips, const LabelSpace& space,
    const RunConfig& cfg, const std::string& machine_filter = "",
    const std::string& log_dir = "", const std::string& checkpoint_dir = "");

// Scores every clip of the given split (test clips use hop_test and strict
// segmentation). Clips that cannot be scored, e.g. shorter than P frames,
// come back with valid == false and a reason.
std::vector<ScoreRecord> score_corpus(
    const std::vector<ClipMeta>& clips, const LabelSpace& space,
    const std::map<std::string, const DptModel*>& models, const RunConfig& cfg,
    double beta, const std::string& split = "test", int threads = 1);

uint64_t machine_seed(uint64_t base, const std::string& machine_type);

}  // namespace ssdpt
