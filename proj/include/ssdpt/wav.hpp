#pragma once

#include <string>
#include <vector>

namespace ssdpt {

// Mono audio clip with samples scaled to [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  size_t length() const { return samples.size(); }
};

// Reads a RIFF WAV file (16-bit PCM or 32-bit IEEE float, any channel count)
// and averages channels down to mono.
Waveform load_wav(const std::string& path);

// Writes a mono 16-bit PCM WAV file.
void write_wav(const std::string& path, const Waveform& w);

}  // namespace ssdpt
