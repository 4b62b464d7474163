#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlrestore {

// Mono waveform. Samples are dimensionless amplitudes, nominally in [-1, 1].
struct Signal {
  std::vector<double> samples;
  int sample_rate = 0;

  Signal() = default;
  Signal(std::vector<double> s, int rate) : samples(std::move(s)), sample_rate(rate) {}

  std::size_t length() const { return samples.size(); }
  double* data() { return samples.data(); }
  const double* data() const { return samples.data(); }
};

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void check_signal(const Signal& s, const char* what = "signal") {
  if (s.samples.empty()) throw std::invalid_argument(std::string(what) + ": empty signal");
  if (!all_finite(s.samples))
    throw std::invalid_argument(std::string(what) + ": non-finite sample");
}

inline double energy(std::span<const double> v) {
  double e = 0.0;
  for (double x : v) e += x * x;
  return e;
}

inline double rms(std::span<const double> v) {
  return v.empty() ? 0.0 : std::sqrt(energy(v) / static_cast<double>(v.size()));
}

inline double norm2(std::span<const double> v) { return std::sqrt(energy(v)); }

inline double peak_abs(std::span<const double> v) {
  double p = 0.0;
  for (double x : v) p = std::max(p, std::abs(x));
  return p;
}

}  // namespace nlrestore
