#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssdpt/matrix.hpp"
#include "ssdpt/rng.hpp"

namespace ssdpt {

enum class MaskKind { kNone, kTime, kFreq, kSpecAugment, kPatch };

// Config tokens: "NM", "TM", "FM", "SpecAugment", "PM".
MaskKind mask_kind_from_string(const std::string& s);
std::string to_string(MaskKind k);

struct MaskSpec {
  MaskKind kind = MaskKind::kNone;
  int count = 0;       // k masks
  int width = 0;       // frames (TM) or bins (FM); both for SpecAugment
  int patch_size = 0;  // r, PM squares are r x r
  double fill_value = 0.0;
};

// P x F boolean map, true = masked.
struct MaskMap {
  std::vector<uint8_t> mask;
  int frames = 0;  // P
  int bands = 0;   // F

  bool at(int p, int f) const {
    return mask[static_cast<size_t>(p) * bands + f] != 0;
  }
  void set(int p, int f) { mask[static_cast<size_t>(p) * bands + f] = 1; }
  int popcount() const;
};

// feature = lambda*xi + (1-lambda)*xj; label mixed with the same weight.
std::pair<Matrix, std::vector<double>> mixup(const Matrix& xi, const Matrix& xj,
                                             const std::vector<double>& li,
                                             const std::vector<double>& lj,
                                             double lambda);

// Beta(a, a) draw in [0, 1].
double draw_lambda(double a, Rng& rng);

MaskMap generate_mask(const MaskSpec& spec, int frames, int bands, Rng& rng);

// Masked cells replaced by fill_value; the rest copied bit-identically.
Matrix apply_mask(const Matrix& x, const MaskMap& map, double fill_value);

}  // namespace ssdpt
