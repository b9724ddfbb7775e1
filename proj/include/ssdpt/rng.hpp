#pragma once

#include <cstdint>
#include <random>

namespace ssdpt {

// Deterministic random source. mt19937_64 output is pinned by the C++
// standard; the distributions below are hand-rolled because the std::*
// distribution classes produce library-dependent streams.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n), unbiased via bitmask rejection.
  int uniform_int(int n);

  double normal(double mu = 0.0, double sigma = 1.0);

  // Gamma(shape, 1) via Marsaglia-Tsang, with the standard boost for shape < 1.
  double gamma(double shape);

  double beta(double a, double b);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      std::swap(v[i], v[uniform_int(i + 1)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a label into a seed so sub-generators get independent streams.
uint64_t derive_seed(uint64_t seed, uint64_t stream);

}  // namespace ssdpt
