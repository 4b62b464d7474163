#pragma once

#include <functional>
#include <vector>

#include "nlrestore/signal.hpp"
#include "nlrestore/stft.hpp"

namespace nlrestore {

struct RampSpec {
  int points = 1000;
  double sigma_data = 1.0 / 3.0;  // ramp spans [-3*sigma_data, 3*sigma_data]
};

std::vector<double> ramp_points(const RampSpec& spec);

// Mean over all frames and bins of (log10(|Y|^2 + eps) - log10(|Y_hat|^2 + eps))^2.
double lsd(const Signal& reference, const Signal& estimate, const StftConfig& cfg,
           double epsilon = 1e-10);

// Conventional dB-scaled variant: per-frame RMS of the 10*log10 power
// difference, averaged over frames.
double lsd_db(const Signal& reference, const Signal& estimate, const StftConfig& cfg,
              double epsilon = 1e-10);

struct RrMseResult {
  double mse = 0.0;      // linear, after the sign-flip minimum rule
  double db = 0.0;       // 10*log10(mse), floored at -120 dB
  bool used_flip = false;
};

// (1/P) * sum_p (f(r_p) - f_hat(r_p))^2, also evaluated with the sign-flipped
// estimate f_flip(r) = -f_hat(-r); the smaller of the two is reported.
RrMseResult rr_mse(const std::function<double(double)>& true_op,
                   const std::function<double(double)>& estimated_op, const RampSpec& spec);

// Same formula as input_sdr; restoration progress metric.
double waveform_sdr(const Signal& reference, const Signal& estimate);

double to_db_floored(double linear, double floor_db = -120.0);

}  // namespace nlrestore
