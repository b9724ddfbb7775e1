#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssdpt/augment.hpp"
#include "ssdpt/model.hpp"
#include "ssdpt/segmentation.hpp"

namespace ssdpt {

// Raised when a loss or gradient goes non-finite; the CLI maps it to its
// numerical-failure exit code.
struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LrSchedule { kConstant, kCosine };

LrSchedule lr_schedule_from_string(const std::string& s);
std::string to_string(LrSchedule s);

struct TrainConfig {
  double alpha = 0.001;          // reconstruction weight in the loss
  double learning_rate = 1e-4;
  double lr_final = 1e-6;        // cosine schedule floor
  LrSchedule schedule = LrSchedule::kCosine;
  int epochs = 100;
  int batch_size = 64;
  double mixup_a = 0.2;          // Beta(a, a) concentration
  MaskSpec mask;
  uint64_t seed = 0;
  bool recon_masked_only = false;  // restrict L_r to masked cells
  int threads = 1;

  // AdamW
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;      // L
  double loss_cls = 0.0;  // L_c
  double loss_rec = 0.0;  // L_r
  double lr = 0.0;
  double wall_ms = 0.0;
};

struct TrainState {
  DptModel model;
  DptModel moment1;  // AdamW first moments
  DptModel moment2;  // AdamW second moments
  long step = 0;
  std::vector<EpochStats> history;
};

// Soft-target cross-entropy; probabilities are clamped at 1e-12 before log.
double classification_loss(const std::vector<double>& probs,
                           const std::vector<double>& soft_label);

// Mean squared error over all P*F cells.
double reconstruction_loss(const Matrix& target, const Matrix& output);

double total_loss(double loss_cls, double loss_rec, double alpha);

// One AdamW update: decoupled multiplicative weight decay plus
// bias-corrected adaptive moments. Aborts on non-finite gradients.
void optimizer_step(TrainState& state, const DptModel& grads, double lr,
                    const TrainConfig& cfg);

// One assembled training example: masked input, pre-mask target, soft label.
struct BatchSample {
  Matrix input;
  Matrix target;
  std::vector<double> soft_label;
  MaskMap mask;
};

struct BatchStats {
  double loss = 0.0;
  double loss_cls = 0.0;
  double loss_rec = 0.0;
};

// Forward/backward over a batch plus one optimizer step. Gradients are
// reduced over per-sample buffers in sample order, so results do not depend
// on the number of worker threads.
BatchStats train_step(TrainState& state, const std::vector<BatchSample>& batch,
                      const TrainConfig& cfg, double lr);

// Optional outputs of fit().
struct FitSinks {
  std::ostream* log = nullptr;       // line-delimited JSON, one line per epoch
  std::ostream* warnings = nullptr;  // defaults to stderr
  std::string checkpoint_prefix;     // "<prefix>epochN.ckpt" when set
  int checkpoint_every = 0;          // epochs between checkpoints, 0 = off
};

// Joint training loop: mixup pairing within each shuffled batch, masking,
// forward, cross-entropy plus weighted reconstruction loss, AdamW updates
// under the configured learning-rate schedule.
TrainState fit(const std::vector<SegmentBatch>& data, const DptConfig& model_cfg,
               const TrainConfig& cfg, const FitSinks& sinks = {});

double lr_at_step(const TrainConfig& cfg, long step, long total_steps);

}  // namespace ssdpt
