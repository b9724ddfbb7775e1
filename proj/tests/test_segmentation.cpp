#include <doctest.h>

#include <stdexcept>

#include "ssdpt/rng.hpp"
#include "ssdpt/segmentation.hpp"

using namespace ssdpt;

namespace {

LogMelFeature ramp_feature(int frames, int bands) {
  LogMelFeature feat;
  feat.values = Matrix(frames, bands);
  for (int t = 0; t < frames; ++t) {
    for (int f = 0; f < bands; ++f) {
      feat.values(t, f) = t * 1000.0 + f;
    }
  }
  return feat;
}

// Count by explicit enumeration, independent of the closed forms.
int enumerate_strict(int t, int p, int h) {
  int count = 0;
  for (int start = 0; start + p <= t; start += h) {
    ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("segment counts: strict 32 and padded 39 for T=313, P=64, H=8") {
  const LogMelFeature feat = ramp_feature(313, 16);
  CHECK(segment(feat, 64, 8, SegmentMode::kStrict).count() == 32);
  CHECK(segment(feat, 64, 8, SegmentMode::kPadded).count() == 39);
}

TEST_CASE("segment with T == P yields the whole feature") {
  const LogMelFeature feat = ramp_feature(24, 8);
  const SegmentBatch batch = segment(feat, 24, 5, SegmentMode::kStrict, 2);
  REQUIRE(batch.count() == 1);
  CHECK(batch.machine_id == 2);
  CHECK(batch.segments[0] == feat.values);
}

TEST_CASE("strict segments are exact submatrices at arithmetic offsets") {
  const LogMelFeature feat = ramp_feature(100, 6);
  const int p = 16, h = 7;
  const SegmentBatch batch = segment(feat, p, h, SegmentMode::kStrict);
  REQUIRE(batch.count() == (100 - p) / h + 1);
  for (int b = 0; b < batch.count(); ++b) {
    for (int o = 0; o < p; ++o) {
      for (int f = 0; f < 6; ++f) {
        CHECK(batch.segments[b](o, f) == feat.values(b * h + o, f));
      }
    }
  }
}

TEST_CASE("padded segments repeat the final frame past the end") {
  const LogMelFeature feat = ramp_feature(20, 4);
  const SegmentBatch batch = segment(feat, 16, 8, SegmentMode::kPadded);
  REQUIRE(batch.count() == 2);  // floor(20 / 8)
  const Matrix& last = batch.segments[1];  // starts at frame 8, runs to 23
  for (int o = 0; o < 16; ++o) {
    const int src = std::min(8 + o, 19);
    for (int f = 0; f < 4; ++f) {
      CHECK(last(o, f) == feat.values(src, f));
    }
  }
}

TEST_CASE("segment counts match enumeration for random shapes") {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const int t = 1 + rng.uniform_int(400);
    const int p = 1 + rng.uniform_int(64);
    const int h = 1 + rng.uniform_int(32);
    const LogMelFeature feat = ramp_feature(t, 3);
    if (t >= p) {
      const SegmentBatch strict = segment(feat, p, h, SegmentMode::kStrict);
      CHECK(strict.count() == (t - p) / h + 1);
      CHECK(strict.count() == enumerate_strict(t, p, h));
    }
    if (t / h >= 1) {
      CHECK(segment(feat, p, h, SegmentMode::kPadded).count() == t / h);
    }
  }
}

TEST_CASE("segment rejects invalid inputs") {
  const LogMelFeature feat = ramp_feature(10, 4);
  CHECK_THROWS_AS(segment(feat, 20, 2, SegmentMode::kStrict),
                  std::invalid_argument);
  CHECK_THROWS_AS(segment(feat, 4, 0, SegmentMode::kStrict),
                  std::invalid_argument);
  CHECK_THROWS_AS(segment(feat, 4, 11, SegmentMode::kPadded),
                  std::invalid_argument);
  LogMelFeature empty;
  CHECK_THROWS_AS(segment(empty, 4, 2, SegmentMode::kStrict),
                  std::invalid_argument);
}

TEST_CASE("segment mode parsing") {
  CHECK(segment_mode_from_string("strict") == SegmentMode::kStrict);
  CHECK(segment_mode_from_string("padded") == SegmentMode::kPadded);
  CHECK_THROWS_AS(segment_mode_from_string("other"), std::invalid_argument);
}
