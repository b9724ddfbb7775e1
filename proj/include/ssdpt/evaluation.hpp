#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ssdpt/scoring.hpp"

namespace ssdpt {

enum class TiePolicy {
  kStrict,  // tied pairs count 0
  kHalf,    // tied pairs count 0.5
};

TiePolicy tie_policy_from_string(const std::string& s);
std::string to_string(TiePolicy p);

// Fraction of (anomalous, normal) pairs where the anomalous clip scores
// higher; ties per policy.
double auc(const std::vector<double>& anomaly_scores,
           const std::vector<double>& normal_scores, TiePolicy tie);

// Same pair count restricted to the floor(p * N-) highest-scoring normals,
// with denominator floor(p * N-) * N+.
double pauc(const std::vector<double>& anomaly_scores,
            const std::vector<double>& normal_scores, double p, TiePolicy tie);

// n / sum(1 / v); every value must be strictly positive.
double harmonic_mean(const std::vector<double>& values);

struct EvalCell {
  std::string machine_type;
  int section = 0;
  std::string domain;
  double auc = 0.0;
  double pauc = 0.0;
  int n_normal = 0;
  int n_anomaly = 0;
};

struct MachineSummary {
  std::string machine_type;
  double h_auc = 0.0;
  double h_pauc = 0.0;
};

struct EvalReport {
  double p = 0.1;
  TiePolicy tie_policy = TiePolicy::kHalf;
  std::vector<EvalCell> cells;        // per (machine, section, domain)
  std::vector<MachineSummary> machines;
  double h_auc = 0.0;   // harmonic mean over all cells
  double h_pauc = 0.0;
};

// Groups records into (machine, section, domain) cells; every cell needs at
// least one normal and one anomalous record with ground truth.
EvalReport build_report(const std::vector<ScoreRecord>& records, double p,
                        TiePolicy tie);

// (FPR, TPR) points of the ROC curve, from (0,0) to (1,1).
std::vector<std::pair<double, double>> roc_points(
    const std::vector<double>& anomaly_scores,
    const std::vector<double>& normal_scores);

}  // namespace ssdpt
