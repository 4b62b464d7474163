#include "nlrestore/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "nlrestore/distortion.hpp"

namespace nlrestore {

std::vector<double> ramp_points(const RampSpec& spec) {
  if (spec.points < 2) throw std::invalid_argument("ramp: need at least 2 points");
  if (!(spec.sigma_data > 0.0)) throw std::invalid_argument("ramp: sigma_data must be > 0");
  const double lo = -3.0 * spec.sigma_data, hi = 3.0 * spec.sigma_data;
  std::vector<double> r(spec.points);
  for (int p = 0; p < spec.points; ++p)
    r[p] = lo + (hi - lo) * p / (spec.points - 1);
  return r;
}

double lsd(const Signal& reference, const Signal& estimate, const StftConfig& cfg,
           double epsilon) {
  if (reference.length() != estimate.length())
    throw std::invalid_argument("lsd: length mismatch");
  const auto ref = stft(reference, cfg);
  const auto est = stft(estimate, cfg);
  double acc = 0.0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    const double d = std::log10(std::norm(ref.data[i]) + epsilon) -
                     std::log10(std::norm(est.data[i]) + epsilon);
    acc += d * d;
  }
  return acc / static_cast<double>(ref.data.size());
}

double lsd_db(const Signal& reference, const Signal& estimate, const StftConfig& cfg,
              double epsilon) {
  if (reference.length() != estimate.length())
    throw std::invalid_argument("lsd_db: length mismatch");
  const auto ref = stft(reference, cfg);
  const auto est = stft(estimate, cfg);
  double acc = 0.0;
  for (int m = 0; m < ref.frames; ++m) {
    double frame_acc = 0.0;
    for (int k = 0; k < ref.bins; ++k) {
      const double d = 10.0 * (std::log10(std::norm(ref.at(m, k)) + epsilon) -
                               std::log10(std::norm(est.at(m, k)) + epsilon));
      frame_acc += d * d;
    }
    acc += std::sqrt(frame_acc / ref.bins);
  }
  return acc / ref.frames;
}

double to_db_floored(double linear, double floor_db) {
  if (!(linear > 0.0)) return floor_db;
  return std::max(10.0 * std::log10(linear), floor_db);
}

RrMseResult rr_mse(const std::function<double(double)>& true_op,
                   const std::function<double(double)>& estimated_op, const RampSpec& spec) {
  const auto ramp = ramp_points(spec);
  double direct = 0.0, flipped = 0.0;
  for (double r : ramp) {
    const double t = true_op(r);
    const double d = t - estimated_op(r);
    const double f = t + estimated_op(-r);  // t - (-f_hat(-r))
    direct += d * d;
    flipped += f * f;
  }
  direct /= ramp.size();
  flipped /= ramp.size();
  RrMseResult res;
  res.used_flip = flipped < direct;
  res.mse = res.used_flip ? flipped : direct;
  res.db = to_db_floored(res.mse);
  return res;
}

double waveform_sdr(const Signal& reference, const Signal& estimate) {
  return input_sdr(reference, estimate);
}

}  // namespace nlrestore
