#include "ssdpt/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssdpt {

namespace {

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

double digamma(double x) {
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)));
  return result;
}

double trigamma(double x) {
  double result = 0.0;
  while (x < 6.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += inv * (1.0 + inv * (0.5 + inv * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 / 42.0))));
  return result;
}

}  // namespace

double gamma_cdf_regularized(double a, double x) {
  if (x <= 0.0) {
    return 0.0;
  }
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // Series expansion.
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) {
        break;
      }
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // Continued fraction for Q(a, x) (modified Lentz).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) {
      break;
    }
  }
  const double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

double score_classification(const SegmentBatch& segments, const DptModel& model,
                            int true_id) {
  if (segments.count() < 1) {
    throw std::invalid_argument("score_classification: empty segment batch");
  }
  if (true_id < 0 || true_id >= model.config.num_ids) {
    throw std::invalid_argument("score_classification: machine id out of range");
  }
  double acc = 0.0;
  ForwardCache cache;
  for (const auto& seg : segments.segments) {
    const ForwardOutput out = model.forward(seg, cache);
    const double p = clamp_prob(out.probabilities[true_id]);
    acc += std::log((1.0 - p) / p);
  }
  return acc / segments.count();
}

double score_reconstruction(const SegmentBatch& segments, const DptModel& model) {
  if (segments.count() < 1) {
    throw std::invalid_argument("score_reconstruction: empty segment batch");
  }
  double acc = 0.0;
  ForwardCache cache;
  for (const auto& seg : segments.segments) {
    const ForwardOutput out = model.forward(seg, cache);
    const double* t = seg.data();
    const double* o = out.reconstruction.data();
    double mse = 0.0;
    for (size_t i = 0; i < seg.size(); ++i) {
      const double d = t[i] - o[i];
      mse += d * d;
    }
    acc += mse / static_cast<double>(seg.size());
  }
  return acc / segments.count();
}

double total_score(double score_cls, double score_rec, double beta) {
  return score_cls + beta * score_rec;
}

Decision decide(double score, double tau) {
  return score >= tau ? Decision::kAnomaly : Decision::kNormal;
}

ClipScore score_clip(const SegmentBatch& segments, const DptModel& model,
                     int true_id) {
  if (segments.count() < 1) {
    throw std::invalid_argument("score_clip: empty segment batch");
  }
  if (true_id < 0 || true_id >= model.config.num_ids) {
    throw std::invalid_argument("score_clip: machine id out of range");
  }
  ClipScore s;
  ForwardCache cache;
  for (const auto& seg : segments.segments) {
    const ForwardOutput out = model.forward(seg, cache);
    const double p = clamp_prob(out.probabilities[true_id]);
    s.cls += std::log((1.0 - p) / p);
    const double* t = seg.data();
    const double* o = out.reconstruction.data();
    double mse = 0.0;
    for (size_t i = 0; i < seg.size(); ++i) {
      const double d = t[i] - o[i];
      mse += d * d;
    }
    s.rec += mse / static_cast<double>(seg.size());
  }
  s.cls /= segments.count();
  s.rec /= segments.count();
  return s;
}

GammaFit fit_gamma_mle(const std::vector<double>& xs) {
  const int n = static_cast<int>(xs.size());
  double mean = 0.0, mean_log = 0.0;
  for (double x : xs) {
    if (x <= 0.0) {
      throw std::invalid_argument("fit_gamma_mle: samples must be positive");
    }
    mean += x;
    mean_log += std::log(x);
  }
  mean /= n;
  mean_log /= n;

  double var = 0.0;
  for (double x : xs) {
    var += (x - mean) * (x - mean);
  }
  var /= n;
  if (var <= 0.0) {
    throw std::domain_error("fit_gamma_mle: zero-variance samples");
  }

  const double s = std::log(mean) - mean_log;  // > 0 by Jensen
  GammaFit fit;
  if (s <= 0.0) {
    fit.shape = mean * mean / var;
    fit.scale = var / mean;
    fit.converged = false;
    return fit;
  }

  double k = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    const double f = std::log(k) - digamma(k) - s;
    const double fp = 1.0 / k - trigamma(k);
    const double next = k - f / fp;
    if (!(next > 0.0) || !std::isfinite(next)) {
      break;
    }
    const double delta = std::abs(next - k);
    k = next;
    if (delta < 1e-12 * k) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    fit.shape = mean * mean / var;
    fit.scale = var / mean;
    fit.converged = false;
    return fit;
  }
  fit.shape = k;
  fit.scale = mean / k;
  fit.converged = true;
  return fit;
}

double fit_gamma_threshold(const std::vector<double>& scores, double fpr) {
  if (scores.size() < 10) {
    throw std::invalid_argument("fit_gamma_threshold: need at least 10 scores");
  }
  if (fpr <= 0.0 || fpr >= 1.0) {
    throw std::invalid_argument("fit_gamma_threshold: fpr must be in (0, 1)");
  }

  const double mn = *std::min_element(scores.begin(), scores.end());
  const double mx = *std::max_element(scores.begin(), scores.end());
  if (mx <= mn) {
    throw std::domain_error("fit_gamma_threshold: constant scores");
  }
  double shift = 0.0;
  if (mn <= 0.0) {
    const double eps = std::max(1e-12, 1e-6 * (mx - mn));
    shift = mn - eps;
  }
  std::vector<double> shifted;
  shifted.reserve(scores.size());
  for (double v : scores) {
    shifted.push_back(v - shift);
  }

  const GammaFit fit = fit_gamma_mle(shifted);
  const double target = 1.0 - fpr;

  // Bisection on the regularized CDF; monotone and cheap.
  double lo = 0.0;
  double hi = fit.shape * fit.scale;
  while (gamma_cdf_regularized(fit.shape, hi / fit.scale) < target) {
    hi *= 2.0;
    if (hi > 1e300) {
      throw std::domain_error("fit_gamma_threshold: quantile out of range");
    }
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_cdf_regularized(fit.shape, mid / fit.scale) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi) + shift;
}

}  // namespace ssdpt
