#include "nlrestore/prior.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "nlrestore/fft.hpp"

namespace nlrestore {

Signal tweedie_score(const Signal& denoised, const Signal& noisy, double sigma) {
  if (denoised.length() != noisy.length())
    throw std::invalid_argument("tweedie_score: length mismatch");
  if (!(sigma > 0.0)) throw std::invalid_argument("tweedie_score: sigma must be positive");
  Signal score;
  score.sample_rate = noisy.sample_rate;
  score.samples.resize(noisy.length());
  const double inv = 1.0 / (sigma * sigma);
  for (std::size_t i = 0; i < noisy.length(); ++i)
    score.samples[i] = (denoised.samples[i] - noisy.samples[i]) * inv;
  return score;
}

GaussianPrior::GaussianPrior(Signal mean, std::vector<double> spectrum)
    : mean_(std::move(mean)), spectrum_(std::move(spectrum)) {
  check_signal(mean_, "gaussian prior mean");
  if (spectrum_.size() != mean_.length())
    throw std::invalid_argument("gaussian prior: spectrum size must equal signal length");
  const std::size_t n = spectrum_.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (!(spectrum_[k] > 0.0) || !std::isfinite(spectrum_[k]))
      throw std::invalid_argument("gaussian prior: power spectrum must be strictly positive");
    if (std::abs(spectrum_[k] - spectrum_[(n - k) % n]) >
        1e-12 * std::max(spectrum_[k], spectrum_[(n - k) % n]))
      throw std::invalid_argument("gaussian prior: spectrum must have even symmetry");
  }
}

GaussianPrior GaussianPrior::white(std::size_t length, int sample_rate, double variance) {
  if (!(variance > 0.0)) throw std::invalid_argument("gaussian prior: variance must be > 0");
  Signal mean;
  mean.sample_rate = sample_rate;
  mean.samples.assign(length, 0.0);
  return GaussianPrior(std::move(mean), std::vector<double>(length, variance));
}

GaussianPrior GaussianPrior::line_spectrum(std::size_t length, int sample_rate,
                                           const std::vector<int>& bins, double sigma_data,
                                           double floor) {
  if (bins.empty()) throw std::invalid_argument("gaussian prior: need at least one line bin");
  if (!(floor > 0.0)) throw std::invalid_argument("gaussian prior: floor must be > 0");
  std::vector<double> spectrum(length, floor);
  std::size_t line_count = 0;
  for (int b : bins) {
    if (b <= 0 || static_cast<std::size_t>(b) >= (length + 1) / 2)
      throw std::invalid_argument("gaussian prior: line bin out of range");
    line_count += 2;  // bin and its mirror
  }
  // mean power sigma_data^2 = (1/L) * sum_k spectrum[k]
  const double budget =
      length * sigma_data * sigma_data - (length - line_count) * floor;
  if (!(budget > 0.0))
    throw std::invalid_argument("gaussian prior: sigma_data too small for the floor");
  const double height = budget / line_count;
  for (int b : bins) {
    spectrum[b] = height;
    spectrum[length - b] = height;
  }
  Signal mean;
  mean.sample_rate = sample_rate;
  mean.samples.assign(length, 0.0);
  return GaussianPrior(std::move(mean), std::move(spectrum));
}

Signal GaussianPrior::sample(std::mt19937_64& rng) const {
  const std::size_t n = length();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::complex<double>> w(n);
  for (auto& v : w) v = normal(rng);
  auto freq = fft_forward(w);
  for (std::size_t k = 0; k < n; ++k) freq[k] *= std::sqrt(spectrum_[k]);
  auto time = fft_inverse(freq);
  Signal out;
  out.sample_rate = mean_.sample_rate;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = mean_.samples[i] + time[i].real();
  return out;
}

std::vector<double> GaussianPrior::filter(std::span<const double> x, double sigma) const {
  const std::size_t n = length();
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = x[i];
  auto freq = fft_forward(buf);
  const double s2 = sigma * sigma;
  for (std::size_t k = 0; k < n; ++k) freq[k] *= spectrum_[k] / (spectrum_[k] + s2);
  auto time = fft_inverse(freq);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = time[i].real();
  return out;
}

Signal GaussianPrior::denoise(const Signal& noisy, double sigma) const {
  if (noisy.length() != length())
    throw std::invalid_argument("gaussian prior: signal length does not match prior length");
  if (sigma < 0.0) throw std::invalid_argument("gaussian prior: sigma must be >= 0");
  if (sigma == 0.0) return noisy;
  std::vector<double> centered(noisy.length());
  for (std::size_t i = 0; i < centered.size(); ++i)
    centered[i] = noisy.samples[i] - mean_.samples[i];
  auto shrunk = filter(centered, sigma);
  Signal out;
  out.sample_rate = noisy.sample_rate;
  out.samples.resize(shrunk.size());
  for (std::size_t i = 0; i < shrunk.size(); ++i)
    out.samples[i] = mean_.samples[i] + shrunk[i];
  return out;
}

Signal GaussianPrior::adjoint(const Signal& noisy, double sigma, const Signal& upstream) const {
  (void)noisy;  // the map is linear; the adjoint is the same symmetric filter
  if (upstream.length() != length())
    throw std::invalid_argument("gaussian prior: upstream length does not match prior length");
  if (sigma == 0.0) return upstream;
  Signal out;
  out.sample_rate = upstream.sample_rate;
  out.samples = filter(upstream.samples, sigma);
  return out;
}

double GaussianPrior::sigma_data() const {
  const double mean_power =
      std::accumulate(spectrum_.begin(), spectrum_.end(), 0.0) / spectrum_.size();
  return std::sqrt(mean_power);
}

}  // namespace nlrestore
