#pragma once

#include <string>
#include <vector>

#include "ssdpt/features.hpp"
#include "ssdpt/matrix.hpp"

namespace ssdpt {

enum class SegmentMode {
  // Offsets 0, H, 2H, ... while offset + P <= T, so B = floor((T-P)/H) + 1.
  // Every segment is an exact submatrix of the feature.
  kStrict,
  // B = floor(T/H) segments; segments running past the last frame are filled
  // by repeating the final frame.
  kPadded,
};

SegmentMode segment_mode_from_string(const std::string& s);
std::string to_string(SegmentMode m);

// Overlapped fixed-length windows cut from one clip's feature, all carrying
// the clip's machine-ID label.
struct SegmentBatch {
  std::vector<Matrix> segments;  // each P x F
  int frame_length = 0;          // P
  int hop_length = 0;            // H
  int machine_id = 0;            // l in [0, I)
  std::string clip_id;

  int count() const { return static_cast<int>(segments.size()); }
};

SegmentBatch segment(const LogMelFeature& feat, int frame_length, int hop,
                     SegmentMode mode, int machine_id = 0);

}  // namespace ssdpt
