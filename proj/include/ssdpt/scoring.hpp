#pragma once

#include <string>
#include <vector>

#include "ssdpt/model.hpp"
#include "ssdpt/segmentation.hpp"

namespace ssdpt {

// Per-clip anomaly scores. score_total = score_cls + beta * score_rec for
// the beta recorded in the score file alongside.
struct ScoreRecord {
  std::string clip_id;
  std::string machine_type;
  int section = 0;
  std::string domain;
  std::string label;  // "normal", "anomaly" or "unknown"
  double score_cls = 0.0;  // A_c
  double score_rec = 0.0;  // A_r
  double score_total = 0.0;  // A
  bool valid = true;
  std::string error;  // reason when !valid
};

// A_c: mean over segments of log((1 - p_b) / p_b), where p_b is the
// probability the model assigns to the clip's own machine ID. Probabilities
// are clamped to [1e-12, 1 - 1e-12] before the log-odds.
double score_classification(const SegmentBatch& segments, const DptModel& model,
                            int true_id);

// A_r: mean over segments of the reconstruction MSE. Test inputs are fed
// unmasked.
double score_reconstruction(const SegmentBatch& segments, const DptModel& model);

double total_score(double score_cls, double score_rec, double beta);

enum class Decision { kNormal, kAnomaly };

// Anomaly iff score >= tau (boundary inclusive).
Decision decide(double score, double tau);

// Both per-clip scores from a single pass over the segments.
struct ClipScore {
  double cls = 0.0;
  double rec = 0.0;
};
ClipScore score_clip(const SegmentBatch& segments, const DptModel& model,
                     int true_id);

struct GammaFit {
  double shape = 0.0;
  double scale = 0.0;
  bool converged = false;  // false when Newton fell back to moment matching
};

// Maximum-likelihood gamma fit (Newton on the shape equation with a
// moment-matching start) over strictly positive samples.
GammaFit fit_gamma_mle(const std::vector<double>& xs);

// Threshold at the (1 - fpr) quantile of a gamma fitted to the scores.
// Non-positive scores are shifted to positive support first and the shift
// is undone on the returned threshold.
double fit_gamma_threshold(const std::vector<double>& scores, double fpr);

// Regularized lower incomplete gamma P(a, x); exposed for tests.
double gamma_cdf_regularized(double a, double x);

}  // namespace ssdpt
