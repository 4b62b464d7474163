#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "nlrestore/prior.hpp"
#include "nlrestore/signal.hpp"

namespace nlrestore {

struct TrainConfig {
  double sigma_data = 0.25;   // standard deviation of the (normalized) clean data
  double sigma_min = 1e-4;    // training noise range, log-uniform
  double sigma_max = 1.0;
  int batch_size = 16;
  int iterations = 3000;
  double ema_rate = 0.995;
  double lr = 1e-3;
  int frame = 512;
  int hop = 256;
  int hidden = 128;
  std::uint64_t seed = 1234;
  int log_interval = 50;
};

void check_train_config(const TrainConfig& cfg);

struct EdmPrecond {
  double c_skip, c_out, c_in, c_noise;
};

EdmPrecond edm_preconditioning(double sigma, double sigma_data);
// lambda(sigma) = 1 / c_out(sigma)^2, so lambda * c_out^2 == 1 identically.
double edm_loss_weight(double sigma, double sigma_data);

// sigma-conditioned fully connected net over overlapping frames with
// windowed overlap-add synthesis. D(x) = c_skip*x + c_out*Net(c_in*x, c_noise)
// applied per frame.
class FrameDenoiser : public Denoiser {
 public:
  FrameDenoiser(int frame, int hop, int hidden, double sigma_data, std::uint64_t seed);

  Signal denoise(const Signal& noisy, double sigma) const override;
  Signal adjoint(const Signal& noisy, double sigma, const Signal& upstream) const override;

  int frame() const { return frame_; }
  int hop() const { return hop_; }
  int hidden() const { return hidden_; }
  double sigma_data() const { return sigma_data_; }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

  void save(const std::filesystem::path& path, double ema_rate = 0.0) const;
  static FrameDenoiser load(const std::filesystem::path& path);

 private:
  int frame_, hop_, hidden_;
  double sigma_data_;
  std::vector<double> weights_;  // flat: W1, b1, W2, b2, W3, b3
  std::vector<double> window_;   // strictly positive synthesis window

  friend struct FrameDenoiserOps;
};

struct TrainResult {
  FrameDenoiser denoiser;
  std::vector<double> loss_history;                  // one entry per iteration
  std::vector<std::pair<int, double>> loss_log;      // (iteration, interval mean)
};

// Denoising-objective training with EMA weight tracking; the returned
// denoiser carries the EMA weights. Throws on an empty dataset or a
// non-finite loss.
TrainResult train_toy_denoiser(const std::vector<Signal>& dataset, const TrainConfig& cfg);

}  // namespace nlrestore
