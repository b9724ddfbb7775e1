#include "ssdpt/segmentation.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace ssdpt {

SegmentMode segment_mode_from_string(const std::string& s) {
  if (s == "strict") {
    return SegmentMode::kStrict;
  }
  if (s == "padded") {
    return SegmentMode::kPadded;
  }
  throw std::invalid_argument("unknown segment mode: " + s);
}

std::string to_string(SegmentMode m) {
  return m == SegmentMode::kStrict ? "strict" : "padded";
}

SegmentBatch segment(const LogMelFeature& feat, int frame_length, int hop,
                     SegmentMode mode, int machine_id) {
  const int t = feat.frame_count();
  const int f = feat.band_count();
  if (t < 1) {
    throw std::invalid_argument("segment: feature has no frames");
  }
  if (frame_length < 1 || hop < 1) {
    throw std::invalid_argument("segment: frame length and hop must be >= 1");
  }

  int count = 0;
  if (mode == SegmentMode::kStrict) {
    if (t < frame_length) {
      throw std::invalid_argument(
          "segment: clip has " + std::to_string(t) +
          " frames, fewer than frame length " + std::to_string(frame_length));
    }
    count = (t - frame_length) / hop + 1;
  } else {
    count = t / hop;
    if (count < 1) {
      throw std::invalid_argument("segment: hop larger than frame count");
    }
  }

  SegmentBatch batch;
  batch.frame_length = frame_length;
  batch.hop_length = hop;
  batch.machine_id = machine_id;
  batch.clip_id = feat.source_id;
  batch.segments.reserve(count);
  for (int b = 0; b < count; ++b) {
    Matrix seg(frame_length, f);
    const int start = b * hop;
    for (int r = 0; r < frame_length; ++r) {
      const int src = std::min(start + r, t - 1);  // clamp only in padded mode
      std::memcpy(seg.row(r), feat.values.row(src), sizeof(double) * f);
    }
    batch.segments.push_back(std::move(seg));
  }
  return batch;
}

}  // namespace ssdpt
