#include "ssdpt/rng.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace ssdpt {

int Rng::uniform_int(int n) {
  if (n <= 0) {
    throw std::invalid_argument("uniform_int: n must be positive");
  }
  if (n == 1) {
    return 0;
  }
  const uint64_t un = static_cast<uint64_t>(n);
  const int bits = std::bit_width(un - 1);
  uint64_t r;
  do {
    r = engine_() >> (64 - bits);
  } while (r >= un);
  return static_cast<int>(r);
}

double Rng::normal(double mu, double sigma) {
  if (has_spare_) {
    has_spare_ = false;
    return mu + spare_ * sigma;
  }
  // Box-Muller; 1 - u keeps the log argument away from zero.
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  const double two_pi = 6.283185307179586;
  spare_ = mag * std::sin(two_pi * u2);
  has_spare_ = true;
  return mu + mag * std::cos(two_pi * u2) * sigma;
}

double Rng::gamma(double shape) {
  if (shape <= 0.0) {
    throw std::invalid_argument("gamma: shape must be positive");
  }
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0);
    const double u = 1.0 - uniform01();
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - uniform01();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      return d * v;
    }
  }
}

double Rng::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  // splitmix64 finalizer over the pair
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace ssdpt
