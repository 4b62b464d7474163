#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlrestore/signal.hpp"

namespace nlrestore {

enum class DistortionKind { hard_clip, soft_clip, wavefold, quantize, half_wave_rectify };

std::string to_string(DistortionKind kind);
DistortionKind distortion_kind_from_string(const std::string& name);

struct DistortionSpec {
  DistortionKind kind = DistortionKind::hard_clip;
  double threshold = 1.0;  // c, used by clip/fold kinds
  double hardness = 0.5;   // r in [0, 1], soft clip blend
  int levels = 3;          // quantize
};

void check_distortion_spec(const DistortionSpec& spec);

double apply_distortion_sample(const DistortionSpec& spec, double x);
Signal apply_distortion(const Signal& x, const DistortionSpec& spec);

// df/dx pointwise (subgradient 0 at kinks); used by the informed sampler.
std::vector<double> distortion_vjp_input(const DistortionSpec& spec, std::span<const double> x,
                                         std::span<const double> upstream);

// 10*log10(||x||^2 / ||x - y||^2). x == y maps to +inf.
double input_sdr(const Signal& x, const Signal& y);

// Bisects the threshold c until |input_sdr - target| < 0.01 dB (<= 100 iterations).
DistortionSpec solve_threshold_for_sdr(const Signal& x, DistortionKind kind, double target_sdr_db,
                                       double hardness = 0.5);

void to_json(nlohmann::json& j, const DistortionSpec& spec);
void from_json(const nlohmann::json& j, DistortionSpec& spec);

}  // namespace nlrestore
