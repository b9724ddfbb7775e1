#include "ssdpt/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ssdpt {

namespace {

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void write_u32(std::ofstream& out, uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                  static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u16(std::ofstream& out, uint16_t v) {
  uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

Waveform load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) {
    throw std::runtime_error("load_wav: cannot open " + path);
  }
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("load_wav: not a RIFF WAV file: " + path);
  }

  // Walk chunks for fmt and data.
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  const uint8_t* data = nullptr;
  uint32_t data_size = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* hdr = bytes.data() + pos;
    const uint32_t chunk_size = read_u32(hdr + 4);
    const size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0 && body + 16 <= bytes.size()) {
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      sample_rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = static_cast<uint32_t>(
          std::min<size_t>(chunk_size, bytes.size() - body));
    }
    pos = body + chunk_size + (chunk_size & 1);
  }
  if (channels == 0 || data == nullptr) {
    throw std::runtime_error("load_wav: missing fmt or data chunk: " + path);
  }

  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32) {
    throw std::runtime_error("load_wav: unsupported format (want 16-bit PCM or "
                             "32-bit float): " + path);
  }

  const int bytes_per_sample = bits / 8;
  const size_t frame_size = static_cast<size_t>(channels) * bytes_per_sample;
  const size_t frames = data_size / frame_size;

  Waveform w;
  w.sample_rate = static_cast<int>(sample_rate);
  w.samples.resize(frames);
  for (size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    const uint8_t* fp = data + f * frame_size;
    for (int c = 0; c < channels; ++c) {
      const uint8_t* sp = fp + static_cast<size_t>(c) * bytes_per_sample;
      if (pcm16) {
        const int16_t s = static_cast<int16_t>(sp[0] | (sp[1] << 8));
        acc += static_cast<double>(s) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, sp, 4);
        acc += static_cast<double>(v);
      }
    }
    if (!std::isfinite(acc)) {
      throw std::runtime_error("load_wav: non-finite sample in " + path);
    }
    w.samples[f] = acc / channels;
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out.is_open()) {
    throw std::runtime_error("write_wav: cannot open " + path);
  }
  const uint32_t data_size = static_cast<uint32_t>(w.samples.size() * 2);
  out.write("RIFF", 4);
  write_u32(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<uint32_t>(w.sample_rate));
  write_u32(out, static_cast<uint32_t>(w.sample_rate) * 2);
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_size);
  for (double s : w.samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    const int v = static_cast<int>(std::lround(clamped * 32767.0));
    write_u16(out, static_cast<uint16_t>(static_cast<int16_t>(v)));
  }
  if (!out.good()) {
    throw std::runtime_error("write_wav: write failed: " + path);
  }
}

}  // namespace ssdpt
