#include "ssdpt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <regex>
#include <set>
#include <stdexcept>

#include "ssdpt/rng.hpp"
#include "ssdpt/wav.hpp"

namespace fs = std::filesystem;

namespace ssdpt {

int LabelSpace::id_of(const std::string& machine, int section) const {
  const auto it = sections.find(machine);
  if (it == sections.end()) {
    throw std::invalid_argument("label space: unknown machine type " + machine);
  }
  const auto pos = std::find(it->second.begin(), it->second.end(), section);
  if (pos == it->second.end()) {
    throw std::invalid_argument("label space: unknown section " +
                                std::to_string(section) + " for " + machine);
  }
  return static_cast<int>(pos - it->second.begin());
}

int LabelSpace::id_count(const std::string& machine) const {
  const auto it = sections.find(machine);
  if (it == sections.end()) {
    throw std::invalid_argument("label space: unknown machine type " + machine);
  }
  return static_cast<int>(it->second.size());
}

std::vector<ClipMeta> scan_dcase(const std::string& root,
                                 std::vector<std::string>* warnings) {
  if (!fs::is_directory(root)) {
    throw std::runtime_error("scan_dcase: not a directory: " + root);
  }
  static const std::regex name_re(
      R"(section_(\d+)_(source|target)_(train|test)_(normal|anomaly)_(\d+).*\.wav)");
  static const char* kSplitDirs[] = {"train", "source_test", "target_test"};

  std::vector<ClipMeta> clips;
  std::vector<fs::path> machine_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) {
      machine_dirs.push_back(entry.path());
    }
  }
  std::sort(machine_dirs.begin(), machine_dirs.end());

  for (const auto& machine_dir : machine_dirs) {
    const std::string machine = machine_dir.filename().string();
    for (const char* split_dir : kSplitDirs) {
      const fs::path dir = machine_dir / split_dir;
      if (!fs::is_directory(dir)) {
        continue;
      }
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) {
          files.push_back(entry.path());
        }
      }
      std::sort(files.begin(), files.end());
      for (const auto& file : files) {
        const std::string name = file.filename().string();
        if (file.extension() != ".wav") {
          if (warnings != nullptr) {
            warnings->push_back("skipping non-wav file " + file.string());
          }
          continue;
        }
        std::smatch m;
        if (!std::regex_match(name, m, name_re)) {
          throw std::runtime_error("scan_dcase: unparseable clip name: " +
                                   file.string());
        }
        ClipMeta meta;
        meta.path = file.string();
        meta.machine_type = machine;
        meta.section = std::stoi(m[1].str());
        meta.domain = m[2].str();
        meta.split = m[3].str();
        meta.condition = m[4].str();
        meta.clip_id = machine + "/" + file.stem().string();

        const bool in_train_dir = std::string(split_dir) == "train";
        if (in_train_dir != (meta.split == "train")) {
          throw std::runtime_error("scan_dcase: split field contradicts directory: " +
                                   file.string());
        }
        if (!in_train_dir) {
          const std::string expected_domain =
              std::string(split_dir) == "source_test" ? "source" : "target";
          if (meta.domain != expected_domain) {
            throw std::runtime_error(
                "scan_dcase: domain field contradicts directory: " + file.string());
          }
        }
        if (meta.split == "train" && meta.condition != "normal") {
          throw std::runtime_error(
              "scan_dcase: training clip with anomalous condition: " + file.string());
        }
        clips.push_back(std::move(meta));
      }
    }
  }
  if (clips.empty()) {
    throw std::runtime_error("scan_dcase: no clips found under " + root);
  }
  return clips;
}

LabelSpace label_space(const std::vector<ClipMeta>& clips) {
  LabelSpace space;
  std::map<std::string, std::set<int>> sections;
  for (const auto& clip : clips) {
    sections[clip.machine_type].insert(clip.section);
  }
  for (const auto& [machine, secs] : sections) {
    space.machine_types.push_back(machine);
    space.sections[machine] = std::vector<int>(secs.begin(), secs.end());
  }
  return space;
}

namespace {

constexpr double kTwoPi = 6.283185307179586;

// Paul Kellet's economy pink-noise filter over white noise.
std::vector<double> pink_noise(size_t n, Rng& rng) {
  std::vector<double> out(n);
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double white = rng.normal();
    b0 = 0.99765 * b0 + white * 0.0990460;
    b1 = 0.96300 * b1 + white * 0.2965164;
    b2 = 0.57000 * b2 + white * 1.0526913;
    out[i] = b0 + b1 + b2 + white * 0.1848;
  }
  return out;
}

double rms(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) {
    acc += x * x;
  }
  return std::sqrt(acc / xs.size());
}

void scale_to_rms(std::vector<double>& xs, double target) {
  const double r = rms(xs);
  if (r > 0.0) {
    const double s = target / r;
    for (double& x : xs) {
      x *= s;
    }
  }
}

Waveform synth_clip(int section, bool anomaly, double duration_s, Rng& rng) {
  const int sr = 16000;
  const size_t n = static_cast<size_t>(std::lround(duration_s * sr));
  const double f0 = 90.0 + 37.0 * section;
  static const double kHarmonicAmps[4] = {1.0, 0.55, 0.35, 0.22};
  const double stack_rms = 0.12;

  std::vector<double> stack(n, 0.0);
  for (int h = 0; h < 4; ++h) {
    const double freq = f0 * (h + 1);
    const double phase = rng.uniform(0.0, kTwoPi);
    for (size_t i = 0; i < n; ++i) {
      stack[i] += kHarmonicAmps[h] * std::sin(kTwoPi * freq * i / sr + phase);
    }
  }
  scale_to_rms(stack, stack_rms);
  const double gain = rng.uniform(0.9, 1.1);
  for (double& x : stack) {
    x *= gain;
  }

  std::vector<double> noise = pink_noise(n, rng);
  scale_to_rms(noise, stack_rms * std::pow(10.0, -20.0 / 20.0));

  Waveform w;
  w.sample_rate = sr;
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    w.samples[i] = stack[i] + noise[i];
  }

  if (anomaly) {
    const double tone_amp = stack_rms * std::pow(10.0, -6.0 / 20.0) * std::sqrt(2.0);
    const double tone_freq = 1.37 * f0;
    const double phase = rng.uniform(0.0, kTwoPi);
    for (size_t i = 0; i < n; ++i) {
      w.samples[i] += tone_amp * std::sin(kTwoPi * tone_freq * i / sr + phase);
    }
    // Click transients: short decaying noise bursts.
    for (int c = 0; c < 3; ++c) {
      const size_t pos = static_cast<size_t>(
          rng.uniform(0.05, 0.90) * static_cast<double>(n));
      for (size_t i = 0; i < 160 && pos + i < n; ++i) {
        w.samples[pos + i] += 0.9 * std::exp(-static_cast<double>(i) / 28.0) *
                              rng.normal();
      }
    }
  }

  double peak = 0.0;
  for (double x : w.samples) {
    peak = std::max(peak, std::abs(x));
  }
  if (peak > 0.98) {
    const double s = 0.95 / peak;
    for (double& x : w.samples) {
      x *= s;
    }
  }
  return w;
}

std::string clip_name(int section, const std::string& domain,
                      const std::string& split, const std::string& condition,
                      int index) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "section_%02d_%s_%s_%s_%04d.wav", section,
                domain.c_str(), split.c_str(), condition.c_str(), index);
  return buf;
}

}  // namespace

void synth_corpus(const std::string& out_dir, const SynthSpec& spec) {
  if (spec.machine_types < 1 || spec.sections < 1 || spec.clips_per_section < 1) {
    throw std::invalid_argument("synth_corpus: counts must be >= 1");
  }
  if (spec.anomaly_fraction_test < 0.0 || spec.anomaly_fraction_test > 1.0) {
    throw std::invalid_argument("synth_corpus: anomaly fraction outside [0, 1]");
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw std::runtime_error("synth_corpus: cannot create output directory " +
                             out_dir);
  }

  for (int m = 0; m < spec.machine_types; ++m) {
    char machine[32];
    std::snprintf(machine, sizeof(machine), "machine%02d", m);
    const fs::path machine_dir = fs::path(out_dir) / machine;
    for (const char* d : {"train", "source_test", "target_test"}) {
      fs::create_directories(machine_dir / d, ec);
      if (ec) {
        throw std::runtime_error("synth_corpus: cannot create " +
                                 (machine_dir / d).string());
      }
    }

    for (int s = 0; s < spec.sections; ++s) {
      // One generator per (machine, section); clip order below is fixed, so
      // the corpus is byte-identical for a given seed.
      Rng rng(derive_seed(spec.seed, (static_cast<uint64_t>(m) << 16) | s));

      for (int i = 0; i < spec.clips_per_section; ++i) {
        const Waveform w = synth_clip(s, false, spec.duration_s, rng);
        write_wav((machine_dir / "train" / clip_name(s, "source", "train", "normal", i))
                      .string(),
                  w);
      }
      for (int i = 0; i < spec.target_train_clips; ++i) {
        const Waveform w = synth_clip(s, false, spec.duration_s, rng);
        write_wav((machine_dir / "train" / clip_name(s, "target", "train", "normal", i))
                      .string(),
                  w);
      }

      const int test_total = spec.clips_per_section;
      const int n_anomaly = static_cast<int>(
          std::lround(spec.anomaly_fraction_test * test_total));
      const int n_normal = test_total - n_anomaly;
      int counters[4] = {0, 0, 0, 0};  // (domain, condition) pairs
      for (int i = 0; i < test_total; ++i) {
        const bool anomaly = i >= n_normal;
        const bool target = i % 2 != 0;
        const std::string domain = target ? "target" : "source";
        const std::string dir = target ? "target_test" : "source_test";
        int& idx = counters[(target ? 2 : 0) + (anomaly ? 1 : 0)];
        const Waveform w = synth_clip(s, anomaly, spec.duration_s, rng);
        write_wav((machine_dir / dir /
                   clip_name(s, domain, "test", anomaly ? "anomaly" : "normal", idx))
                      .string(),
                  w);
        ++idx;
      }
    }
  }
}

}  // namespace ssdpt
