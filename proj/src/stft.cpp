#include "nlrestore/stft.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "nlrestore/fft.hpp"

namespace nlrestore {

void check_stft_config(const StftConfig& cfg) {
  if (cfg.hop < 1 || cfg.window_length < 1 || cfg.fft_size < 1)
    throw std::invalid_argument("stft: window/hop/fft sizes must be positive");
  if (cfg.hop > cfg.window_length || cfg.window_length > cfg.fft_size)
    throw std::invalid_argument("stft: need hop <= window_length <= fft_size");
  if (cfg.fft_size % 2 != 0) throw std::invalid_argument("stft: fft_size must be even");
}

namespace detail {

std::vector<double> make_window(const StftConfig& cfg) {
  std::vector<double> w(cfg.window_length, 1.0);
  if (cfg.window == WindowKind::hann) {
    const double step = 2.0 * std::numbers::pi / cfg.window_length;  // periodic Hann
    for (int n = 0; n < cfg.window_length; ++n) w[n] = 0.5 - 0.5 * std::cos(step * n);
  }
  return w;
}

}  // namespace detail

namespace {

struct FrameLayout {
  int pad = 0;         // zeros prepended (and at least this many appended)
  int frames = 0;
  std::size_t padded_len = 0;
};

FrameLayout layout_for(std::size_t length, const StftConfig& cfg) {
  FrameLayout lay;
  if (cfg.center_padding) {
    lay.pad = cfg.window_length / 2;
    lay.frames = static_cast<int>(length / cfg.hop) + 1;
  } else {
    if (length < static_cast<std::size_t>(cfg.window_length))
      throw std::invalid_argument("stft: signal shorter than one window (center_padding off)");
    lay.frames = static_cast<int>((length - cfg.window_length) / cfg.hop) + 1;
  }
  std::size_t needed = static_cast<std::size_t>(lay.frames - 1) * cfg.hop + cfg.window_length;
  lay.padded_len = std::max(needed, length + 2 * static_cast<std::size_t>(lay.pad));
  return lay;
}

}  // namespace

ComplexSpectrogram stft(const Signal& signal, const StftConfig& cfg) {
  check_signal(signal);
  check_stft_config(cfg);
  const FrameLayout lay = layout_for(signal.length(), cfg);
  const auto window = detail::make_window(cfg);
  const int n = cfg.fft_size;
  const int bins = n / 2 + 1;

  std::vector<double> padded(lay.padded_len, 0.0);
  std::copy(signal.samples.begin(), signal.samples.end(), padded.begin() + lay.pad);

  ComplexSpectrogram spec;
  spec.frames = lay.frames;
  spec.bins = bins;
  spec.cfg = cfg;
  spec.signal_length = signal.length();
  spec.sample_rate = signal.sample_rate;
  spec.data.resize(static_cast<std::size_t>(lay.frames) * bins);

  std::vector<std::complex<double>> buf(n);
  for (int m = 0; m < lay.frames; ++m) {
    const std::size_t start = static_cast<std::size_t>(m) * cfg.hop;
    std::fill(buf.begin(), buf.end(), std::complex<double>{});
    for (int i = 0; i < cfg.window_length; ++i) buf[i] = window[i] * padded[start + i];
    auto freq = fft_forward(buf);
    for (int k = 0; k < bins; ++k) spec.at(m, k) = freq[k];
  }
  return spec;
}

Signal istft(const ComplexSpectrogram& spec) {
  check_stft_config(spec.cfg);
  const StftConfig& cfg = spec.cfg;
  const auto window = detail::make_window(cfg);
  const FrameLayout lay = layout_for(spec.signal_length, cfg);
  if (lay.frames != spec.frames)
    throw std::invalid_argument("istft: frame count inconsistent with stored signal length");
  const int n = cfg.fft_size;
  const int bins = spec.bins;

  std::vector<double> acc(lay.padded_len, 0.0);
  std::vector<double> env(lay.padded_len, 0.0);
  std::vector<std::complex<double>> full(n);
  for (int m = 0; m < spec.frames; ++m) {
    for (int k = 0; k < bins; ++k) full[k] = spec.at(m, k);
    for (int k = 1; k < bins - 1; ++k) full[n - k] = std::conj(spec.at(m, k));
    auto time = fft_inverse(full);
    const std::size_t start = static_cast<std::size_t>(m) * cfg.hop;
    for (int i = 0; i < cfg.window_length; ++i) {
      acc[start + i] += window[i] * time[i].real();
      env[start + i] += window[i] * window[i];
    }
  }

  Signal out;
  out.sample_rate = spec.sample_rate;
  out.samples.resize(spec.signal_length, 0.0);
  for (std::size_t i = 0; i < spec.signal_length; ++i) {
    const double e = env[i + lay.pad];
    out.samples[i] = e > 1e-12 ? acc[i + lay.pad] / e : 0.0;
  }
  return out;
}

ComplexSpectrogram compress_spectrogram(const ComplexSpectrogram& spec) {
  ComplexSpectrogram out = spec;
  for (auto& v : out.data) {
    const double mag = std::abs(v);
    if (mag > 0.0) v *= std::pow(mag, 2.0 / 3.0) / mag;
  }
  return out;
}

namespace detail {

double spectral_cost_pre(const ComplexSpectrogram& comp_y, const Signal& y_hat,
                         const StftConfig& cfg) {
  const auto comp_hat = compress_spectrogram(stft(y_hat, cfg));
  if (comp_hat.data.size() != comp_y.data.size())
    throw std::invalid_argument("spectral_cost: spectrogram shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < comp_y.data.size(); ++i) {
    const std::complex<double> d = comp_y.data[i] - comp_hat.data[i];
    acc += std::norm(d);
  }
  return acc / comp_y.frames;
}

CostResult cost_and_adjoint_pre(const ComplexSpectrogram& comp_y, const Signal& y_hat,
                                const StftConfig& cfg) {
  const auto spec_hat = stft(y_hat, cfg);
  if (spec_hat.data.size() != comp_y.data.size())
    throw std::invalid_argument("cost_adjoint: spectrogram shape mismatch");
  const auto window = make_window(cfg);
  const FrameLayout lay = layout_for(y_hat.length(), cfg);
  const int n = cfg.fft_size;
  const int bins = spec_hat.bins;
  const double inv_m = 1.0 / spec_hat.frames;

  double cost = 0.0;
  std::vector<double> grad_padded(lay.padded_len, 0.0);
  std::vector<std::complex<double>> dspec(n);
  for (int m = 0; m < spec_hat.frames; ++m) {
    std::fill(dspec.begin(), dspec.end(), std::complex<double>{});
    for (int k = 0; k < bins; ++k) {
      const std::complex<double> s = spec_hat.at(m, k);
      const double a = s.real(), b = s.imag();
      const double mag2 = a * a + b * b;
      const double mag = std::sqrt(mag2);
      std::complex<double> comp{};
      if (mag > 0.0) comp = s * (std::pow(mag, 2.0 / 3.0) / mag);
      const std::complex<double> diff = comp - comp_y.at(m, k);
      cost += std::norm(diff) * inv_m;
      if (mag == 0.0) continue;  // stated subgradient convention
      const double du = 2.0 * inv_m * diff.real();
      const double dv = 2.0 * inv_m * diff.imag();
      const double r13 = std::pow(mag, -1.0 / 3.0);
      const double r73 = std::pow(mag, -7.0 / 3.0) / 3.0;
      const double da = du * (r13 - a * a * r73) + dv * (-a * b * r73);
      const double db = du * (-a * b * r73) + dv * (r13 - b * b * r73);
      dspec[k] = {da, db};
    }
    // Adjoint of the one-sided real-input DFT: grad_n = Re(sum_k D_k e^{+j2pikn/N}).
    auto time = fft_inverse_unscaled(dspec);
    const std::size_t start = static_cast<std::size_t>(m) * cfg.hop;
    for (int i = 0; i < cfg.window_length; ++i)
      grad_padded[start + i] += window[i] * time[i].real();
  }

  CostResult res;
  res.cost = cost;
  res.gradient.sample_rate = y_hat.sample_rate;
  res.gradient.samples.assign(grad_padded.begin() + lay.pad,
                              grad_padded.begin() + lay.pad + y_hat.length());
  return res;
}

}  // namespace detail

double spectral_cost(const Signal& y, const Signal& y_hat, const StftConfig& cfg) {
  if (y.length() != y_hat.length())
    throw std::invalid_argument("spectral_cost: signal length mismatch");
  const auto comp_y = compress_spectrogram(stft(y, cfg));
  return detail::spectral_cost_pre(comp_y, y_hat, cfg);
}

Signal cost_adjoint(const Signal& y, const Signal& y_hat, const StftConfig& cfg) {
  if (y.length() != y_hat.length())
    throw std::invalid_argument("cost_adjoint: signal length mismatch");
  const auto comp_y = compress_spectrogram(stft(y, cfg));
  return detail::cost_and_adjoint_pre(comp_y, y_hat, cfg).gradient;
}

void spectrogram_to_csv(const ComplexSpectrogram& spec, std::ostream& out) {
  out << "frame,bin,real,imag\n";
  char line[96];
  for (int m = 0; m < spec.frames; ++m)
    for (int k = 0; k < spec.bins; ++k) {
      const auto& v = spec.at(m, k);
      std::snprintf(line, sizeof line, "%d,%d,%.17g,%.17g\n", m, k, v.real(), v.imag());
      out << line;
    }
}

}  // namespace nlrestore
