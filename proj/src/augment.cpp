#include "ssdpt/augment.hpp"

#include <algorithm>
#include <stdexcept>

namespace ssdpt {

MaskKind mask_kind_from_string(const std::string& s) {
  if (s == "NM") return MaskKind::kNone;
  if (s == "TM") return MaskKind::kTime;
  if (s == "FM") return MaskKind::kFreq;
  if (s == "SpecAugment") return MaskKind::kSpecAugment;
  if (s == "PM") return MaskKind::kPatch;
  throw std::invalid_argument("unknown mask kind: " + s);
}

std::string to_string(MaskKind k) {
  switch (k) {
    case MaskKind::kNone: return "NM";
    case MaskKind::kTime: return "TM";
    case MaskKind::kFreq: return "FM";
    case MaskKind::kSpecAugment: return "SpecAugment";
    case MaskKind::kPatch: return "PM";
  }
  return "NM";
}

int MaskMap::popcount() const {
  int n = 0;
  for (uint8_t v : mask) {
    n += v;
  }
  return n;
}

std::pair<Matrix, std::vector<double>> mixup(const Matrix& xi, const Matrix& xj,
                                             const std::vector<double>& li,
                                             const std::vector<double>& lj,
                                             double lambda) {
  if (!xi.same_shape(xj)) {
    throw std::invalid_argument("mixup: feature shapes differ");
  }
  if (li.size() != lj.size()) {
    throw std::invalid_argument("mixup: label lengths differ");
  }
  if (lambda < 0.0 || lambda > 1.0) {
    throw std::invalid_argument("mixup: lambda outside [0, 1]");
  }
  // Exact identity at the endpoints.
  if (lambda == 1.0) {
    return {xi, li};
  }
  if (lambda == 0.0) {
    return {xj, lj};
  }
  Matrix mixed(xi.rows(), xi.cols());
  const double* a = xi.data();
  const double* b = xj.data();
  double* m = mixed.data();
  for (size_t i = 0; i < mixed.size(); ++i) {
    m[i] = lambda * a[i] + (1.0 - lambda) * b[i];
  }
  std::vector<double> label(li.size());
  for (size_t i = 0; i < li.size(); ++i) {
    label[i] = lambda * li[i] + (1.0 - lambda) * lj[i];
  }
  return {std::move(mixed), std::move(label)};
}

double draw_lambda(double a, Rng& rng) {
  if (a <= 0.0) {
    throw std::invalid_argument("draw_lambda: concentration must be positive");
  }
  return std::clamp(rng.beta(a, a), 0.0, 1.0);
}

namespace {

void add_time_runs(MaskMap& map, int k, int width, Rng& rng) {
  for (int i = 0; i < k; ++i) {
    const int start = rng.uniform_int(map.frames - width + 1);
    for (int p = start; p < start + width; ++p) {
      for (int f = 0; f < map.bands; ++f) {
        map.set(p, f);
      }
    }
  }
}

void add_freq_runs(MaskMap& map, int k, int width, Rng& rng) {
  for (int i = 0; i < k; ++i) {
    const int start = rng.uniform_int(map.bands - width + 1);
    for (int p = 0; p < map.frames; ++p) {
      for (int f = start; f < start + width; ++f) {
        map.set(p, f);
      }
    }
  }
}

}  // namespace

MaskMap generate_mask(const MaskSpec& spec, int frames, int bands, Rng& rng) {
  MaskMap map;
  map.frames = frames;
  map.bands = bands;
  map.mask.assign(static_cast<size_t>(frames) * bands, 0);

  if (spec.kind == MaskKind::kNone) {
    return map;
  }
  if (spec.count < 0) {
    throw std::invalid_argument("generate_mask: negative mask count");
  }
  switch (spec.kind) {
    case MaskKind::kTime:
      if (spec.width < 1 || spec.width > frames) {
        throw std::invalid_argument("generate_mask: TM width outside [1, P]");
      }
      add_time_runs(map, spec.count, spec.width, rng);
      break;
    case MaskKind::kFreq:
      if (spec.width < 1 || spec.width > bands) {
        throw std::invalid_argument("generate_mask: FM width outside [1, F]");
      }
      add_freq_runs(map, spec.count, spec.width, rng);
      break;
    case MaskKind::kSpecAugment:
      if (spec.width < 1 || spec.width > std::min(frames, bands)) {
        throw std::invalid_argument(
            "generate_mask: SpecAugment width outside [1, min(P, F)]");
      }
      add_time_runs(map, spec.count, spec.width, rng);
      add_freq_runs(map, spec.count, spec.width, rng);
      break;
    case MaskKind::kPatch: {
      const int r = spec.patch_size;
      if (r < 1 || r > std::min(frames, bands)) {
        throw std::invalid_argument(
            "generate_mask: PM size outside [1, min(P, F)]");
      }
      for (int i = 0; i < spec.count; ++i) {
        const int top = rng.uniform_int(frames - r + 1);
        const int left = rng.uniform_int(bands - r + 1);
        for (int p = top; p < top + r; ++p) {
          for (int f = left; f < left + r; ++f) {
            map.set(p, f);
          }
        }
      }
      break;
    }
    case MaskKind::kNone:
      break;
  }
  return map;
}

Matrix apply_mask(const Matrix& x, const MaskMap& map, double fill_value) {
  if (x.rows() != map.frames || x.cols() != map.bands) {
    throw std::invalid_argument("apply_mask: mask shape does not match input");
  }
  Matrix out = x;
  double* p = out.data();
  for (size_t i = 0; i < out.size(); ++i) {
    if (map.mask[i]) {
      p[i] = fill_value;
    }
  }
  return out;
}

}  // namespace ssdpt
