#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ssdpt {

struct ClipMeta {
  std::string path;          // absolute or root-relative wav path
  std::string clip_id;       // "<machine>/<file stem>", unique in a corpus
  std::string machine_type;
  int section = 0;
  std::string domain;        // "source" or "target"
  std::string split;         // "train" or "test"
  std::string condition;     // "normal", "anomaly" or "unknown"
};

// Classification targets per machine type: section IDs mapped to [0, I).
struct LabelSpace {
  std::vector<std::string> machine_types;                  // sorted
  std::map<std::string, std::vector<int>> sections;        // sorted per machine
  int id_of(const std::string& machine, int section) const;
  int id_count(const std::string& machine) const;          // I
};

// Walks <root>/<machine>/{train,source_test,target_test} and parses
// section_<SS>_<domain>_<split>_<condition>_<index>*.wav names. Non-wav
// files are skipped with a warning; malformed wav names, metadata that
// contradicts the directory, or anomalous train clips are hard errors.
std::vector<ClipMeta> scan_dcase(const std::string& root,
                                 std::vector<std::string>* warnings = nullptr);

LabelSpace label_space(const std::vector<ClipMeta>& clips);

struct SynthSpec {
  int machine_types = 3;
  int sections = 3;
  int clips_per_section = 10;        // train clips; test emits the same count
  double anomaly_fraction_test = 0.5;
  uint64_t seed = 0;
  double duration_s = 2.2;
  int target_train_clips = 0;        // extra scarce target-domain train clips
};

// Writes a deterministic desk-scale corpus in the directory layout above.
// Normal clips are a section-specific harmonic stack (fundamental
// 90 + 37 * section Hz, 4 harmonics) over pink noise at -20 dB; anomalies
// add an inharmonic tone at 1.37x the fundamental at -6 dB plus 3 click
// transients.
void synth_corpus(const std::string& out_dir, const SynthSpec& spec);

}  // namespace ssdpt
