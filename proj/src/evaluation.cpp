#include "ssdpt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace ssdpt {

TiePolicy tie_policy_from_string(const std::string& s) {
  if (s == "strict") {
    return TiePolicy::kStrict;
  }
  if (s == "half") {
    return TiePolicy::kHalf;
  }
  throw std::invalid_argument("unknown tie policy: " + s);
}

std::string to_string(TiePolicy p) {
  return p == TiePolicy::kStrict ? "strict" : "half";
}

double auc(const std::vector<double>& anomaly_scores,
           const std::vector<double>& normal_scores, TiePolicy tie) {
  if (anomaly_scores.empty() || normal_scores.empty()) {
    throw std::invalid_argument("auc: both score lists must be non-empty");
  }
  std::vector<double> sorted_normals = normal_scores;
  std::sort(sorted_normals.begin(), sorted_normals.end());
  double wins = 0.0;
  for (double a : anomaly_scores) {
    const auto lo = std::lower_bound(sorted_normals.begin(), sorted_normals.end(), a);
    wins += static_cast<double>(lo - sorted_normals.begin());
    if (tie == TiePolicy::kHalf) {
      const auto hi = std::upper_bound(lo, sorted_normals.end(), a);
      wins += 0.5 * static_cast<double>(hi - lo);
    }
  }
  return wins / (static_cast<double>(anomaly_scores.size()) *
                 static_cast<double>(normal_scores.size()));
}

double pauc(const std::vector<double>& anomaly_scores,
            const std::vector<double>& normal_scores, double p, TiePolicy tie) {
  if (anomaly_scores.empty() || normal_scores.empty()) {
    throw std::invalid_argument("pauc: both score lists must be non-empty");
  }
  const int keep = static_cast<int>(std::floor(p * normal_scores.size()));
  if (keep < 1) {
    throw std::invalid_argument("pauc: floor(p * N-) must be >= 1");
  }
  // The hardest normals: the false-positive candidates at FPR <= p.
  std::vector<double> hardest = normal_scores;
  std::sort(hardest.begin(), hardest.end(), std::greater<double>());
  hardest.resize(keep);
  return auc(anomaly_scores, hardest, tie);
}

double harmonic_mean(const std::vector<double>& values) {
  if (values.empty()) {
    throw std::invalid_argument("harmonic_mean: empty input");
  }
  double denom = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] <= 0.0) {
      throw std::domain_error("harmonic_mean: value at index " +
                              std::to_string(i) + " is not positive");
    }
    denom += 1.0 / values[i];
  }
  return static_cast<double>(values.size()) / denom;
}

EvalReport build_report(const std::vector<ScoreRecord>& records, double p,
                        TiePolicy tie) {
  using Key = std::tuple<std::string, int, std::string>;
  struct CellScores {
    std::vector<double> normal;
    std::vector<double> anomaly;
  };
  std::map<Key, CellScores> cells;
  for (const auto& r : records) {
    if (!r.valid) {
      continue;
    }
    if (r.label != "normal" && r.label != "anomaly") {
      throw std::invalid_argument("build_report: record " + r.clip_id +
                                  " has no ground truth label");
    }
    auto& cell = cells[{r.machine_type, r.section, r.domain}];
    if (r.label == "anomaly") {
      cell.anomaly.push_back(r.score_total);
    } else {
      cell.normal.push_back(r.score_total);
    }
  }
  if (cells.empty()) {
    throw std::invalid_argument("build_report: no scored records");
  }

  EvalReport report;
  report.p = p;
  report.tie_policy = tie;

  std::map<std::string, std::vector<double>> machine_aucs, machine_paucs;
  std::vector<double> all_aucs, all_paucs;
  for (const auto& [key, scores] : cells) {
    const auto& [machine, section, domain] = key;
    const std::string cell_name =
        machine + "/section" + std::to_string(section) + "/" + domain;
    if (scores.normal.empty() || scores.anomaly.empty()) {
      throw std::invalid_argument("build_report: cell " + cell_name +
                                  " is missing a class");
    }
    EvalCell cell;
    cell.machine_type = machine;
    cell.section = section;
    cell.domain = domain;
    cell.n_normal = static_cast<int>(scores.normal.size());
    cell.n_anomaly = static_cast<int>(scores.anomaly.size());
    cell.auc = auc(scores.anomaly, scores.normal, tie);
    cell.pauc = pauc(scores.anomaly, scores.normal, p, tie);
    if (cell.auc <= 0.0 || cell.pauc <= 0.0) {
      throw std::domain_error(
          "build_report: cell " + cell_name +
          " has a zero metric; the strict tie policy can produce this — "
          "switch to the half policy or exclude the cell");
    }
    machine_aucs[machine].push_back(cell.auc);
    machine_paucs[machine].push_back(cell.pauc);
    all_aucs.push_back(cell.auc);
    all_paucs.push_back(cell.pauc);
    report.cells.push_back(std::move(cell));
  }

  for (const auto& [machine, aucs] : machine_aucs) {
    MachineSummary m;
    m.machine_type = machine;
    m.h_auc = harmonic_mean(aucs);
    m.h_pauc = harmonic_mean(machine_paucs[machine]);
    report.machines.push_back(std::move(m));
  }
  report.h_auc = harmonic_mean(all_aucs);
  report.h_pauc = harmonic_mean(all_paucs);
  return report;
}

std::vector<std::pair<double, double>> roc_points(
    const std::vector<double>& anomaly_scores,
    const std::vector<double>& normal_scores) {
  if (anomaly_scores.empty() || normal_scores.empty()) {
    throw std::invalid_argument("roc_points: both score lists must be non-empty");
  }
  struct Entry {
    double score;
    bool anomaly;
  };
  std::vector<Entry> entries;
  entries.reserve(anomaly_scores.size() + normal_scores.size());
  for (double s : anomaly_scores) {
    entries.push_back({s, true});
  }
  for (double s : normal_scores) {
    entries.push_back({s, false});
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.score > b.score; });

  std::vector<std::pair<double, double>> points;
  points.emplace_back(0.0, 0.0);
  const double np = static_cast<double>(anomaly_scores.size());
  const double nn = static_cast<double>(normal_scores.size());
  int tp = 0, fp = 0;
  size_t i = 0;
  while (i < entries.size()) {
    // Consume all entries tied at this score before emitting a point.
    const double s = entries[i].score;
    while (i < entries.size() && entries[i].score == s) {
      if (entries[i].anomaly) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    points.emplace_back(fp / nn, tp / np);
  }
  return points;
}

}  // namespace ssdpt
