#pragma once

#include <string>
#include <vector>

#include "ssdpt/matrix.hpp"
#include "ssdpt/wav.hpp"

namespace ssdpt {

// Floor added to mel power before the natural log.
inline constexpr double kLogMelEps = 1e-8;

// Triangular mel filterbank on the HTK mel scale, each row peak-normalized
// to 1 and ordered by ascending center frequency.
struct MelFilterbank {
  Matrix weights;                 // n_mels x (n_fft/2 + 1)
  std::vector<double> center_hz;  // per filter, strictly increasing
  int n_mels = 0;
  int n_fft = 0;
  int sample_rate = 0;
};

// T x F matrix of natural-log mel power for one clip.
struct LogMelFeature {
  Matrix values;  // T x F
  std::string source_id;

  int frame_count() const { return values.rows(); }
  int band_count() const { return values.cols(); }
};

// Magnitude spectrogram with a periodic Hann window and reflect padding of
// window_size/2 on both ends, so frame count is 1 + floor(len / hop).
// Rows are frames, columns the window_size/2 + 1 bins.
Matrix stft_magnitude(const Waveform& w, int window_size, int hop);

MelFilterbank mel_filterbank(int n_mels, int n_fft, int sample_rate,
                             double f_min, double f_max);

// values = ln(weights * spec^2 + kLogMelEps), shape T x n_mels.
LogMelFeature log_mel(const Matrix& spec, const MelFilterbank& fb,
                      const std::string& source_id = {});

}  // namespace ssdpt
