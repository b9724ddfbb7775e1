#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>

#include "ssdpt/evaluation.hpp"
#include "ssdpt/rng.hpp"

using namespace ssdpt;

namespace {

// O(n^2) brute-force pair counter, the oracle for auc/pauc.
double brute_auc(const std::vector<double>& anomaly,
                 const std::vector<double>& normal, TiePolicy tie) {
  double wins = 0.0;
  for (double a : anomaly) {
    for (double n : normal) {
      if (a > n) {
        wins += 1.0;
      } else if (a == n && tie == TiePolicy::kHalf) {
        wins += 0.5;
      }
    }
  }
  return wins / (static_cast<double>(anomaly.size()) * normal.size());
}

double brute_pauc(const std::vector<double>& anomaly,
                  std::vector<double> normal, double p, TiePolicy tie) {
  const int keep = static_cast<int>(std::floor(p * normal.size()));
  std::sort(normal.begin(), normal.end(), std::greater<double>());
  normal.resize(keep);
  return brute_auc(anomaly, normal, tie);
}

ScoreRecord record(const std::string& machine, int section,
                   const std::string& domain, const std::string& label,
                   double score) {
  ScoreRecord r;
  r.clip_id = machine + "/" + std::to_string(section) + domain + label +
              std::to_string(score);
  r.machine_type = machine;
  r.section = section;
  r.domain = domain;
  r.label = label;
  r.score_total = score;
  return r;
}

}  // namespace

TEST_CASE("auc fixtures") {
  CHECK(auc({3.0, 4.0}, {1.0, 2.0}, TiePolicy::kHalf) == 1.0);
  CHECK(auc({1.0, 1.0}, {1.0, 1.0}, TiePolicy::kStrict) == 0.0);
  CHECK(auc({1.0, 1.0}, {1.0, 1.0}, TiePolicy::kHalf) == 0.5);
  CHECK(auc({3.0, 1.0}, {2.0, 0.0}, TiePolicy::kStrict) ==
        doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(auc({}, {1.0}, TiePolicy::kHalf), std::invalid_argument);
}

TEST_CASE("auc matches the brute-force pair counter exactly") {
  Rng rng(61);
  for (int trial = 0; trial < 1000; ++trial) {
    const int na = 1 + rng.uniform_int(50);
    const int nn = 1 + rng.uniform_int(50);
    std::vector<double> anomaly(na), normal(nn);
    for (double& v : anomaly) {
      v = rng.uniform_int(20);  // integer scores force plenty of ties
    }
    for (double& v : normal) {
      v = rng.uniform_int(20);
    }
    for (TiePolicy tie : {TiePolicy::kStrict, TiePolicy::kHalf}) {
      CHECK(auc(anomaly, normal, tie) == brute_auc(anomaly, normal, tie));
    }
  }
}

TEST_CASE("pauc restricts to the hardest normals") {
  // Top-1 normal is 3; both anomalies beat it.
  std::vector<double> anomaly = {5.0, 4.0};
  std::vector<double> normal = {3.0, 2.0, 1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005};
  CHECK(pauc(anomaly, normal, 0.1, TiePolicy::kHalf) == 1.0);
  CHECK(pauc(anomaly, normal, 1.0, TiePolicy::kHalf) ==
        auc(anomaly, normal, TiePolicy::kHalf));
  CHECK_THROWS_AS(pauc(anomaly, {1.0, 2.0}, 0.1, TiePolicy::kHalf),
                  std::invalid_argument);
}

TEST_CASE("pauc(p=1) is identical to auc and matches brute force") {
  Rng rng(62);
  for (int trial = 0; trial < 1000; ++trial) {
    const int na = 1 + rng.uniform_int(30);
    const int nn = 2 + rng.uniform_int(30);
    std::vector<double> anomaly(na), normal(nn);
    for (double& v : anomaly) {
      v = rng.normal();
    }
    for (double& v : normal) {
      v = rng.normal();
    }
    CHECK(pauc(anomaly, normal, 1.0, TiePolicy::kHalf) ==
          auc(anomaly, normal, TiePolicy::kHalf));
    const double p = 0.3 + 0.7 * rng.uniform01();
    if (static_cast<int>(std::floor(p * nn)) >= 1) {
      CHECK(pauc(anomaly, normal, p, TiePolicy::kHalf) ==
            brute_pauc(anomaly, normal, p, TiePolicy::kHalf));
    }
  }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
  Rng rng(63);
  std::vector<double> anomaly(25), normal(25);
  for (double& v : anomaly) {
    v = rng.normal();
  }
  for (double& v : normal) {
    v = rng.normal();
  }
  const double base = auc(anomaly, normal, TiePolicy::kHalf);
  const auto warp = [](double v) { return std::exp(0.5 * v) + 3.0; };
  std::vector<double> wa, wn;
  for (double v : anomaly) {
    wa.push_back(warp(v));
  }
  for (double v : normal) {
    wn.push_back(warp(v));
  }
  CHECK(auc(wa, wn, TiePolicy::kHalf) == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("swapping the score lists reflects auc around one half") {
  Rng rng(64);
  std::vector<double> a(20), n(20);
  for (double& v : a) {
    v = rng.uniform_int(10);
  }
  for (double& v : n) {
    v = rng.uniform_int(10);
  }
  const double fwd = auc(a, n, TiePolicy::kHalf);
  const double rev = auc(n, a, TiePolicy::kHalf);
  CHECK(fwd == doctest::Approx(1.0 - rev).epsilon(1e-15));
}

TEST_CASE("harmonic mean fixtures") {
  CHECK(harmonic_mean({0.7, 0.7, 0.7}) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(harmonic_mean({0.5, 1.0}) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(harmonic_mean({0.619}) == doctest::Approx(0.619).epsilon(1e-15));
  CHECK_THROWS_AS(harmonic_mean({0.5, 0.0}), std::domain_error);
  CHECK_THROWS_AS(harmonic_mean({}), std::invalid_argument);
}

TEST_CASE("build_report groups cells and aggregates harmonically") {
  std::vector<ScoreRecord> records;
  // Machine A, one perfectly separated cell.
  for (int i = 0; i < 5; ++i) {
    records.push_back(record("A", 0, "source", "normal", i));
    records.push_back(record("A", 0, "source", "anomaly", 10.0 + i));
  }
  EvalReport single = build_report(records, 0.2, TiePolicy::kHalf);
  CHECK(single.cells.size() == 1);
  CHECK(single.h_auc == 1.0);
  CHECK(single.h_pauc == 1.0);

  // Add a second cell with AUC 0.5 (fully tied scores).
  for (int i = 0; i < 5; ++i) {
    records.push_back(record("A", 1, "source", "normal", 1.0));
    records.push_back(record("A", 1, "source", "anomaly", 1.0));
  }
  EvalReport two = build_report(records, 0.2, TiePolicy::kHalf);
  CHECK(two.cells.size() == 2);
  CHECK(two.machines.size() == 1);
  CHECK(two.machines[0].h_auc == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(two.h_auc == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("build_report rejects cells missing a class or ground truth") {
  std::vector<ScoreRecord> missing_class;
  missing_class.push_back(record("A", 0, "source", "normal", 1.0));
  CHECK_THROWS_AS(build_report(missing_class, 0.5, TiePolicy::kHalf),
                  std::invalid_argument);

  std::vector<ScoreRecord> unknown;
  unknown.push_back(record("A", 0, "source", "unknown", 1.0));
  unknown.push_back(record("A", 0, "source", "anomaly", 2.0));
  CHECK_THROWS_AS(build_report(unknown, 0.5, TiePolicy::kHalf),
                  std::invalid_argument);

  // Unscored rows are skipped, not fatal.
  std::vector<ScoreRecord> with_invalid;
  for (int i = 0; i < 4; ++i) {
    with_invalid.push_back(record("A", 0, "source", "normal", i));
    with_invalid.push_back(record("A", 0, "source", "anomaly", 10.0 + i));
  }
  ScoreRecord bad = record("A", 0, "source", "anomaly", 0.0);
  bad.valid = false;
  with_invalid.push_back(bad);
  CHECK(build_report(with_invalid, 0.25, TiePolicy::kHalf).h_auc == 1.0);
}

TEST_CASE("roc_points spans (0,0) to (1,1) and is monotone") {
  Rng rng(65);
  std::vector<double> anomaly(15), normal(15);
  for (double& v : anomaly) {
    v = rng.normal() + 1.0;
  }
  for (double& v : normal) {
    v = rng.normal();
  }
  const auto points = roc_points(anomaly, normal);
  CHECK(points.front() == std::pair<double, double>(0.0, 0.0));
  CHECK(points.back() == std::pair<double, double>(1.0, 1.0));
  for (size_t i = 1; i < points.size(); ++i) {
    CHECK(points[i].first >= points[i - 1].first);
    CHECK(points[i].second >= points[i - 1].second);
  }
}

TEST_CASE("tie policy parsing") {
  CHECK(tie_policy_from_string("half") == TiePolicy::kHalf);
  CHECK(tie_policy_from_string("strict") == TiePolicy::kStrict);
  CHECK_THROWS_AS(tie_policy_from_string("maybe"), std::invalid_argument);
}
