#pragma once

#include <random>
#include <vector>

#include "nlrestore/signal.hpp"

namespace nlrestore {

// Behavioral contract for score priors: a deterministic denoiser plus the
// vector-Jacobian product of denoise() with respect to the noisy input.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Signal denoise(const Signal& noisy, double sigma) const = 0;
  virtual Signal adjoint(const Signal& noisy, double sigma, const Signal& upstream) const = 0;
};

// score = (denoised - noisy) / sigma^2
Signal tweedie_score(const Signal& denoised, const Signal& noisy, double sigma);

// Stationary Gaussian prior with circulant covariance, diagonal per DFT bin.
// denoise() is the exact posterior mean mu + S/(S + sigma^2) applied in the
// frequency domain; the adjoint is the same (self-adjoint) filter.
class GaussianPrior : public Denoiser {
 public:
  // spectrum holds the covariance eigenvalue per DFT bin (size = length,
  // even symmetry enforced, all entries > 0).
  GaussianPrior(Signal mean, std::vector<double> spectrum);

  static GaussianPrior white(std::size_t length, int sample_rate, double variance);
  // A handful of spectral lines over a small floor; sigma_data sets the
  // time-domain standard deviation. Samples are random sinusoid mixtures.
  static GaussianPrior line_spectrum(std::size_t length, int sample_rate,
                                     const std::vector<int>& bins, double sigma_data,
                                     double floor = 1e-8);

  Signal sample(std::mt19937_64& rng) const;

  Signal denoise(const Signal& noisy, double sigma) const override;
  Signal adjoint(const Signal& noisy, double sigma, const Signal& upstream) const override;

  std::size_t length() const { return mean_.length(); }
  const std::vector<double>& spectrum() const { return spectrum_; }
  const Signal& mean() const { return mean_; }
  // Time-domain standard deviation implied by the spectrum.
  double sigma_data() const;

 private:
  std::vector<double> filter(std::span<const double> x, double sigma) const;

  Signal mean_;
  std::vector<double> spectrum_;
};

}  // namespace nlrestore
