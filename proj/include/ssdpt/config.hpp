#pragma once

#include <stdexcept>
#include <string>

#include "ssdpt/augment.hpp"
#include "ssdpt/evaluation.hpp"
#include "ssdpt/model.hpp"
#include "ssdpt/segmentation.hpp"
#include "ssdpt/training.hpp"

namespace ssdpt {

// Config or usage problems; the CLI maps these to exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct FeatureConfig {
  int window = 1024;
  int hop = 512;
  int n_mels = 128;
  double f_min = 0.0;
  double f_max = 8000.0;
  int sample_rate = 16000;
};

struct SegmentationConfig {
  int frame_length = 64;  // P
  int hop_train = 8;
  int hop_test = 1;
  SegmentMode mode = SegmentMode::kStrict;
};

struct ScoringConfig {
  double beta = 0.001;
};

struct EvalConfig {
  double p = 0.1;
  TiePolicy tie_policy = TiePolicy::kHalf;
};

// Whole-pipeline configuration, JSON schema version "ssdpt-config-1".
// The built-in defaults are the reference settings; a config file and then
// CLI flags override individual fields.
struct RunConfig {
  FeatureConfig features;
  SegmentationConfig segmentation;
  MaskSpec mask{MaskKind::kPatch, 3, 0, 5, 0.0};
  double mixup_a = 0.2;
  DptConfig model{1, 64, 128, 8, 1, 32, 0};  // num_ids 0 = from the data
  TrainConfig training;
  ScoringConfig scoring;
  EvalConfig evaluation;
  int checkpoint_every = 0;

  // Cross-field checks (module preconditions); throws ConfigError.
  void validate() const;
};

RunConfig default_config();

RunConfig load_config(const std::string& path);

void save_config(const std::string& path, const RunConfig& cfg);

}  // namespace ssdpt
