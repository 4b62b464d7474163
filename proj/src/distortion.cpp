#include "nlrestore/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nlrestore {

std::string to_string(DistortionKind kind) {
  switch (kind) {
    case DistortionKind::hard_clip: return "hard_clip";
    case DistortionKind::soft_clip: return "soft_clip";
    case DistortionKind::wavefold: return "wavefold";
    case DistortionKind::quantize: return "quantize";
    case DistortionKind::half_wave_rectify: return "half_wave_rectify";
  }
  throw std::logic_error("unknown DistortionKind");
}

DistortionKind distortion_kind_from_string(const std::string& name) {
  if (name == "hard_clip") return DistortionKind::hard_clip;
  if (name == "soft_clip") return DistortionKind::soft_clip;
  if (name == "wavefold") return DistortionKind::wavefold;
  if (name == "quantize") return DistortionKind::quantize;
  if (name == "half_wave_rectify") return DistortionKind::half_wave_rectify;
  throw std::invalid_argument("unknown distortion kind: " + name);
}

void check_distortion_spec(const DistortionSpec& spec) {
  const bool needs_threshold = spec.kind == DistortionKind::hard_clip ||
                               spec.kind == DistortionKind::soft_clip ||
                               spec.kind == DistortionKind::wavefold;
  if (needs_threshold && !(spec.threshold > 0.0 && std::isfinite(spec.threshold)))
    throw std::invalid_argument("distortion: threshold must be positive and finite");
  if (spec.kind == DistortionKind::soft_clip &&
      !(spec.hardness >= 0.0 && spec.hardness <= 1.0))
    throw std::invalid_argument("distortion: hardness must lie in [0, 1]");
  if (spec.kind == DistortionKind::quantize && spec.levels < 2)
    throw std::invalid_argument("distortion: need at least 2 quantization levels");
}

namespace {

double wavefold_sample(double x, double c) {
  // Triangle reflection about +-c, period 4c.
  double m = std::fmod(x + c, 4.0 * c);
  if (m < 0.0) m += 4.0 * c;
  return m <= 2.0 * c ? m - c : 3.0 * c - m;
}

double quantize_sample(double x, int levels) {
  // Midtread levels linearly spaced on [-1, 1]; nearest level, ties toward zero.
  const double step = 2.0 / (levels - 1);
  const double t = (x + 1.0) / step;
  const int lo = std::clamp(static_cast<int>(std::floor(t)), 0, levels - 1);
  const int hi = std::min(lo + 1, levels - 1);
  const double vlo = -1.0 + lo * step, vhi = -1.0 + hi * step;
  const double dlo = std::abs(x - vlo), dhi = std::abs(x - vhi);
  if (dlo < dhi) return vlo;
  if (dhi < dlo) return vhi;
  return std::abs(vlo) <= std::abs(vhi) ? vlo : vhi;
}

}  // namespace

double apply_distortion_sample(const DistortionSpec& spec, double x) {
  const double c = spec.threshold;
  switch (spec.kind) {
    case DistortionKind::hard_clip:
      return std::clamp(x, -c, c);
    case DistortionKind::soft_clip:
      return (1.0 - spec.hardness) * c * std::tanh(x / c) +
             spec.hardness * std::clamp(x, -c, c);
    case DistortionKind::wavefold:
      return wavefold_sample(x, c);
    case DistortionKind::quantize:
      return quantize_sample(x, spec.levels);
    case DistortionKind::half_wave_rectify:
      return x > 0.0 ? x : 0.0;
  }
  throw std::logic_error("unknown DistortionKind");
}

Signal apply_distortion(const Signal& x, const DistortionSpec& spec) {
  check_signal(x);
  check_distortion_spec(spec);
  Signal y;
  y.sample_rate = x.sample_rate;
  y.samples.resize(x.length());
  for (std::size_t i = 0; i < x.length(); ++i)
    y.samples[i] = apply_distortion_sample(spec, x.samples[i]);
  return y;
}

std::vector<double> distortion_vjp_input(const DistortionSpec& spec, std::span<const double> x,
                                         std::span<const double> upstream) {
  if (x.size() != upstream.size())
    throw std::invalid_argument("distortion_vjp_input: length mismatch");
  check_distortion_spec(spec);
  const double c = spec.threshold;
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = 0.0;
    switch (spec.kind) {
      case DistortionKind::hard_clip:
        d = std::abs(x[i]) < c ? 1.0 : 0.0;
        break;
      case DistortionKind::soft_clip: {
        const double t = std::tanh(x[i] / c);
        d = (1.0 - spec.hardness) * (1.0 - t * t) +
            (std::abs(x[i]) < c ? spec.hardness : 0.0);
        break;
      }
      case DistortionKind::wavefold: {
        double m = std::fmod(x[i] + c, 4.0 * c);
        if (m < 0.0) m += 4.0 * c;
        d = m < 2.0 * c ? 1.0 : -1.0;
        break;
      }
      case DistortionKind::quantize:
        d = 0.0;  // piecewise constant
        break;
      case DistortionKind::half_wave_rectify:
        d = x[i] > 0.0 ? 1.0 : 0.0;
        break;
    }
    out[i] = d * upstream[i];
  }
  return out;
}

double input_sdr(const Signal& x, const Signal& y) {
  if (x.length() != y.length()) throw std::invalid_argument("input_sdr: length mismatch");
  const double ex = energy(x.samples);
  if (ex <= 0.0) throw std::invalid_argument("input_sdr: reference signal has zero energy");
  double er = 0.0;
  for (std::size_t i = 0; i < x.length(); ++i) {
    const double d = x.samples[i] - y.samples[i];
    er += d * d;
  }
  if (er == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ex / er);
}

DistortionSpec solve_threshold_for_sdr(const Signal& x, DistortionKind kind, double target_sdr_db,
                                       double hardness) {
  if (kind != DistortionKind::hard_clip && kind != DistortionKind::soft_clip &&
      kind != DistortionKind::wavefold)
    throw std::invalid_argument("solve_threshold_for_sdr: kind has no threshold to solve");
  check_signal(x);
  const double peak = peak_abs(x.samples);
  if (peak <= 0.0) throw std::invalid_argument("solve_threshold_for_sdr: zero signal");

  DistortionSpec spec;
  spec.kind = kind;
  spec.hardness = hardness;
  const auto sdr_at = [&](double c) {
    spec.threshold = c;
    return input_sdr(x, apply_distortion(x, spec));
  };

  double lo = 1e-9 * peak, hi = peak;
  if (sdr_at(lo) > target_sdr_db)
    throw std::invalid_argument("solve_threshold_for_sdr: target below achievable range");
  constexpr double tol = 0.01;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double sdr = sdr_at(mid);
    if (std::abs(sdr - target_sdr_db) < tol) {
      spec.threshold = mid;
      return spec;
    }
    (sdr < target_sdr_db ? lo : hi) = mid;
  }
  throw std::runtime_error("solve_threshold_for_sdr: did not converge to target SDR");
}

void to_json(nlohmann::json& j, const DistortionSpec& spec) {
  j = nlohmann::json{{"kind", to_string(spec.kind)},
                     {"threshold", spec.threshold},
                     {"hardness", spec.hardness},
                     {"levels", spec.levels}};
}

void from_json(const nlohmann::json& j, DistortionSpec& spec) {
  spec.kind = distortion_kind_from_string(j.at("kind").get<std::string>());
  spec.threshold = j.value("threshold", 1.0);
  spec.hardness = j.value("hardness", 0.5);
  spec.levels = j.value("levels", 3);
}

}  // namespace nlrestore
