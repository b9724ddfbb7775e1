#include "ssdpt/features.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace ssdpt {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT.
void fft(std::vector<std::complex<double>>& a) {
  const int n = static_cast<int>(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) {
      j ^= bit;
    }
    j ^= bit;
    if (i < j) {
      std::swap(a[i], a[j]);
    }
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / len;
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Reflect index into [0, n) without repeating the edge sample.
long reflect_index(long i, long n) {
  if (n == 1) {
    return 0;
  }
  const long period = 2 * (n - 1);
  long m = i % period;
  if (m < 0) {
    m += period;
  }
  return m < n ? m : period - m;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

}  // namespace

Matrix stft_magnitude(const Waveform& w, int window_size, int hop) {
  if (w.samples.empty()) {
    throw std::invalid_argument("stft_magnitude: empty waveform");
  }
  if (!is_power_of_two(window_size)) {
    throw std::invalid_argument("stft_magnitude: window size must be a power of two");
  }
  if (hop <= 0) {
    throw std::invalid_argument("stft_magnitude: hop must be positive");
  }

  const long n = static_cast<long>(w.samples.size());
  const int frames = 1 + static_cast<int>(n / hop);
  const int bins = window_size / 2 + 1;
  const int half = window_size / 2;

  std::vector<double> window(window_size);
  for (int i = 0; i < window_size; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / window_size);
  }

  Matrix out(frames, bins);
  std::vector<std::complex<double>> buf(window_size);
  for (int t = 0; t < frames; ++t) {
    const long start = static_cast<long>(t) * hop - half;
    for (int i = 0; i < window_size; ++i) {
      const long src = reflect_index(start + i, n);
      buf[i] = {w.samples[src] * window[i], 0.0};
    }
    fft(buf);
    double* row = out.row(t);
    for (int k = 0; k < bins; ++k) {
      row[k] = std::abs(buf[k]);
    }
  }
  return out;
}

MelFilterbank mel_filterbank(int n_mels, int n_fft, int sample_rate,
                             double f_min, double f_max) {
  if (n_mels < 1) {
    throw std::invalid_argument("mel_filterbank: n_mels must be >= 1");
  }
  if (!(f_min < f_max) || f_max > sample_rate / 2.0) {
    throw std::invalid_argument(
        "mel_filterbank: need f_min < f_max <= sample_rate/2");
  }

  const int bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);

  // n_mels + 2 corner frequencies, evenly spaced in mel.
  std::vector<double> corner_hz(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    corner_hz[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }

  MelFilterbank fb;
  fb.n_mels = n_mels;
  fb.n_fft = n_fft;
  fb.sample_rate = sample_rate;
  fb.weights = Matrix(n_mels, bins);
  fb.center_hz.resize(n_mels);

  for (int m = 0; m < n_mels; ++m) {
    const double left = corner_hz[m];
    const double center = corner_hz[m + 1];
    const double right = corner_hz[m + 2];
    fb.center_hz[m] = center;
    double* row = fb.weights.row(m);
    double peak = 0.0;
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      double v = 0.0;
      if (f > left && f < center) {
        v = (f - left) / (center - left);
      } else if (f >= center && f < right) {
        v = (right - f) / (right - center);
      }
      row[k] = v;
      peak = std::max(peak, v);
    }
    if (peak <= 0.0) {
      throw std::invalid_argument(
          "mel_filterbank: filter " + std::to_string(m) +
          " covers no FFT bin; n_mels too large for this resolution");
    }
    for (int k = 0; k < bins; ++k) {
      row[k] /= peak;
    }
  }
  return fb;
}

LogMelFeature log_mel(const Matrix& spec, const MelFilterbank& fb,
                      const std::string& source_id) {
  if (spec.cols() != fb.weights.cols()) {
    throw std::invalid_argument("log_mel: spectrogram bin count " +
                                std::to_string(spec.cols()) +
                                " does not match filterbank " +
                                std::to_string(fb.weights.cols()));
  }
  LogMelFeature feat;
  feat.source_id = source_id;
  feat.values = Matrix(spec.rows(), fb.n_mels);
  const int bins = spec.cols();
  for (int t = 0; t < spec.rows(); ++t) {
    const double* srow = spec.row(t);
    double* frow = feat.values.row(t);
    for (int m = 0; m < fb.n_mels; ++m) {
      const double* w = fb.weights.row(m);
      double acc = 0.0;
      for (int k = 0; k < bins; ++k) {
        acc += w[k] * srow[k] * srow[k];
      }
      frow[m] = std::log(acc + kLogMelEps);
    }
  }
  return feat;
}

}  // namespace ssdpt
