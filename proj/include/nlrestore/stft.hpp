#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "nlrestore/signal.hpp"

namespace nlrestore {

enum class WindowKind { hann, rect };

struct StftConfig {
  int window_length = 1024;
  int hop = 256;
  int fft_size = 1024;
  WindowKind window = WindowKind::hann;
  bool center_padding = true;
};

void check_stft_config(const StftConfig& cfg);

struct ComplexSpectrogram {
  int frames = 0;
  int bins = 0;  // fft_size/2 + 1
  std::vector<std::complex<double>> data;  // row-major, frames x bins
  StftConfig cfg;
  std::size_t signal_length = 0;
  int sample_rate = 0;

  std::complex<double>& at(int m, int k) { return data[static_cast<std::size_t>(m) * bins + k]; }
  const std::complex<double>& at(int m, int k) const {
    return data[static_cast<std::size_t>(m) * bins + k];
  }
};

ComplexSpectrogram stft(const Signal& signal, const StftConfig& cfg);

// Window-weighted overlap-add synthesis with envelope normalization; exact
// inverse of stft() wherever the window envelope is nonzero.
Signal istft(const ComplexSpectrogram& spec);

// S_comp = |S|^(2/3) * exp(j*angle(S)), phase kept bit-exact.
ComplexSpectrogram compress_spectrogram(const ComplexSpectrogram& spec);

// C(y, y_hat) = (1/M) * sum_{m,k} |S_comp(y) - S_comp(y_hat)|^2  over one-sided bins.
double spectral_cost(const Signal& y, const Signal& y_hat, const StftConfig& cfg);

// dC/d(y_hat) as a time-domain signal. At spectrogram elements with zero
// magnitude the |.|^(2/3) derivative is singular; the subgradient 0 is used.
Signal cost_adjoint(const Signal& y, const Signal& y_hat, const StftConfig& cfg);

void spectrogram_to_csv(const ComplexSpectrogram& spec, std::ostream& out);

namespace detail {
// Precompressed-target variants so optimization loops can reuse S_comp(y).
struct CostResult {
  double cost;
  Signal gradient;
};
double spectral_cost_pre(const ComplexSpectrogram& comp_y, const Signal& y_hat,
                         const StftConfig& cfg);
CostResult cost_and_adjoint_pre(const ComplexSpectrogram& comp_y, const Signal& y_hat,
                                const StftConfig& cfg);
std::vector<double> make_window(const StftConfig& cfg);
}  // namespace detail

}  // namespace nlrestore
