#include "nlrestore/toy_denoiser.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nlrestore/optim.hpp"

namespace nlrestore {

void check_train_config(const TrainConfig& cfg) {
  if (!(cfg.sigma_data > 0.0)) throw std::invalid_argument("train: sigma_data must be > 0");
  if (!(cfg.ema_rate > 0.0 && cfg.ema_rate < 1.0))
    throw std::invalid_argument("train: ema_rate must lie in (0, 1)");
  if (!(cfg.sigma_min > 0.0 && cfg.sigma_min < cfg.sigma_max))
    throw std::invalid_argument("train: need 0 < sigma_min < sigma_max");
  if (cfg.batch_size < 1 || cfg.iterations < 1 || cfg.log_interval < 1)
    throw std::invalid_argument("train: batch/iterations/log_interval must be positive");
  if (cfg.frame < 2 || cfg.hop < 1 || cfg.hop > cfg.frame || cfg.hidden < 1)
    throw std::invalid_argument("train: bad frame/hop/hidden sizes");
}

EdmPrecond edm_preconditioning(double sigma, double sigma_data) {
  const double s2 = sigma * sigma, d2 = sigma_data * sigma_data;
  EdmPrecond p;
  p.c_skip = d2 / (s2 + d2);
  p.c_out = sigma * sigma_data / std::sqrt(s2 + d2);
  p.c_in = 1.0 / std::sqrt(s2 + d2);
  p.c_noise = 0.25 * std::log(sigma);
  return p;
}

double edm_loss_weight(double sigma, double sigma_data) {
  const double c_out = edm_preconditioning(sigma, sigma_data).c_out;
  return 1.0 / (c_out * c_out);
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using MatMap = Eigen::Map<MatrixXd>;
using VecMap = Eigen::Map<VectorXd>;
using ConstMatMap = Eigen::Map<const MatrixXd>;
using ConstVecMap = Eigen::Map<const VectorXd>;

struct Dims {
  int in, hidden, out;
  std::size_t w1, b1, w2, b2, w3, b3, total;
};

Dims layout(int frame, int hidden) {
  Dims d;
  d.in = frame + 1;  // frame samples plus the c_noise feature
  d.hidden = hidden;
  d.out = frame;
  d.w1 = 0;
  d.b1 = d.w1 + static_cast<std::size_t>(hidden) * d.in;
  d.w2 = d.b1 + hidden;
  d.b2 = d.w2 + static_cast<std::size_t>(hidden) * hidden;
  d.w3 = d.b2 + hidden;
  d.b3 = d.w3 + static_cast<std::size_t>(frame) * hidden;
  d.total = d.b3 + frame;
  return d;
}

struct Views {
  ConstMatMap w1, w2, w3;
  ConstVecMap b1, b2, b3;
};

Views views_of(const std::vector<double>& w, const Dims& d) {
  return {ConstMatMap(w.data() + d.w1, d.hidden, d.in),
          ConstMatMap(w.data() + d.w2, d.hidden, d.hidden),
          ConstMatMap(w.data() + d.w3, d.out, d.hidden),
          ConstVecMap(w.data() + d.b1, d.hidden),
          ConstVecMap(w.data() + d.b2, d.hidden),
          ConstVecMap(w.data() + d.b3, d.out)};
}

struct Activations {
  MatrixXd z, h1, h2, out;  // columns are batch items
};

void net_forward(const Views& v, const MatrixXd& z, Activations& act) {
  act.z = z;
  act.h1 = ((v.w1 * z).colwise() + v.b1).cwiseMax(0.0);
  act.h2 = ((v.w2 * act.h1).colwise() + v.b2).cwiseMax(0.0);
  act.out = (v.w3 * act.h2).colwise() + v.b3;
}

// Backpropagates d(loss)/d(out); fills input gradient and, when param_grad is
// non-null, accumulates flat parameter gradients.
void net_backward(const Views& v, const Dims& d, const Activations& act, const MatrixXd& dout,
                  MatrixXd& dz, std::vector<double>* param_grad) {
  MatrixXd dh2 = v.w3.transpose() * dout;
  dh2.array() *= (act.h2.array() > 0.0).cast<double>();
  MatrixXd dh1 = v.w2.transpose() * dh2;
  dh1.array() *= (act.h1.array() > 0.0).cast<double>();
  dz = v.w1.transpose() * dh1;
  if (param_grad) {
    MatMap gw1(param_grad->data() + d.w1, d.hidden, d.in);
    MatMap gw2(param_grad->data() + d.w2, d.hidden, d.hidden);
    MatMap gw3(param_grad->data() + d.w3, d.out, d.hidden);
    VecMap gb1(param_grad->data() + d.b1, d.hidden);
    VecMap gb2(param_grad->data() + d.b2, d.hidden);
    VecMap gb3(param_grad->data() + d.b3, d.out);
    gw3 += dout * act.h2.transpose();
    gb3 += dout.rowwise().sum();
    gw2 += dh2 * act.h1.transpose();
    gb2 += dh2.rowwise().sum();
    gw1 += dh1 * act.z.transpose();
    gb1 += dh1.rowwise().sum();
  }
}

struct FrameGrid {
  int count = 0;
  std::size_t padded = 0;
};

FrameGrid frame_grid(std::size_t length, int frame, int hop) {
  FrameGrid g;
  g.count = length <= static_cast<std::size_t>(frame)
                ? 1
                : static_cast<int>((length - frame + hop - 1) / hop) + 1;
  g.padded = static_cast<std::size_t>(g.count - 1) * hop + frame;
  return g;
}

}  // namespace

struct FrameDenoiserOps {
  // Shared forward machinery for denoise() and adjoint().
  struct Pass {
    FrameGrid grid;
    MatrixXd frames;       // frame x count, raw noisy frames
    Activations act;
    EdmPrecond pre;
    std::vector<double> env;  // overlap-add window envelope, padded length
  };

  static Pass run_forward(const FrameDenoiser& dn, const Signal& noisy, double sigma) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("frame denoiser: sigma must be >= 0");
    check_signal(noisy, "frame denoiser input");
    Pass p;
    p.grid = frame_grid(noisy.length(), dn.frame_, dn.hop_);
    p.pre = edm_preconditioning(std::max(sigma, 1e-12), dn.sigma_data_);

    std::vector<double> padded(p.grid.padded, 0.0);
    std::copy(noisy.samples.begin(), noisy.samples.end(), padded.begin());
    p.frames.resize(dn.frame_, p.grid.count);
    for (int j = 0; j < p.grid.count; ++j)
      for (int m = 0; m < dn.frame_; ++m)
        p.frames(m, j) = padded[static_cast<std::size_t>(j) * dn.hop_ + m];

    const Dims d = layout(dn.frame_, dn.hidden_);
    MatrixXd z(d.in, p.grid.count);
    z.topRows(dn.frame_) = p.pre.c_in * p.frames;
    z.row(dn.frame_).setConstant(p.pre.c_noise);
    net_forward(views_of(dn.weights_, d), z, p.act);

    p.env.assign(p.grid.padded, 0.0);
    for (int j = 0; j < p.grid.count; ++j)
      for (int m = 0; m < dn.frame_; ++m)
        p.env[static_cast<std::size_t>(j) * dn.hop_ + m] += dn.window_[m];
    return p;
  }
};

FrameDenoiser::FrameDenoiser(int frame, int hop, int hidden, double sigma_data,
                             std::uint64_t seed)
    : frame_(frame), hop_(hop), hidden_(hidden), sigma_data_(sigma_data) {
  if (frame_ < 2 || hop_ < 1 || hop_ > frame_ || hidden_ < 1)
    throw std::invalid_argument("frame denoiser: bad frame/hop/hidden sizes");
  if (!(sigma_data_ > 0.0))
    throw std::invalid_argument("frame denoiser: sigma_data must be > 0");
  const Dims d = layout(frame_, hidden_);
  weights_.assign(d.total, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto fill = [&](std::size_t off, std::size_t count, int fan_in) {
    const double std_dev = std::sqrt(2.0 / fan_in);
    for (std::size_t i = 0; i < count; ++i) weights_[off + i] = std_dev * normal(rng);
  };
  fill(d.w1, static_cast<std::size_t>(d.hidden) * d.in, d.in);
  fill(d.w2, static_cast<std::size_t>(d.hidden) * d.hidden, d.hidden);
  fill(d.w3, static_cast<std::size_t>(d.out) * d.hidden, d.hidden);
  // half-sample-shifted Hann, strictly positive so the OLA envelope never vanishes
  window_.resize(frame_);
  for (int m = 0; m < frame_; ++m) {
    const double s = std::sin(std::numbers::pi * (m + 0.5) / frame_);
    window_[m] = s * s;
  }
}

Signal FrameDenoiser::denoise(const Signal& noisy, double sigma) const {
  auto p = FrameDenoiserOps::run_forward(*this, noisy, sigma);
  std::vector<double> acc(p.grid.padded, 0.0);
  for (int j = 0; j < p.grid.count; ++j)
    for (int m = 0; m < frame_; ++m) {
      const double dval = p.pre.c_skip * p.frames(m, j) + p.pre.c_out * p.act.out(m, j);
      acc[static_cast<std::size_t>(j) * hop_ + m] += window_[m] * dval;
    }
  Signal out;
  out.sample_rate = noisy.sample_rate;
  out.samples.resize(noisy.length());
  for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] = acc[i] / p.env[i];
  return out;
}

Signal FrameDenoiser::adjoint(const Signal& noisy, double sigma, const Signal& upstream) const {
  if (upstream.length() != noisy.length())
    throw std::invalid_argument("frame denoiser adjoint: length mismatch");
  auto p = FrameDenoiserOps::run_forward(*this, noisy, sigma);
  const Dims d = layout(frame_, hidden_);

  // upstream through the envelope-normalized overlap-add
  MatrixXd dd(frame_, p.grid.count);
  for (int j = 0; j < p.grid.count; ++j)
    for (int m = 0; m < frame_; ++m) {
      const std::size_t n = static_cast<std::size_t>(j) * hop_ + m;
      const double u = n < upstream.length() ? upstream.samples[n] / p.env[n] : 0.0;
      dd(m, j) = window_[m] * u;
    }

  MatrixXd dz;
  const MatrixXd dout = p.pre.c_out * dd;
  net_backward(views_of(weights_, d), d, p.act, dout, dz, nullptr);
  MatrixXd dframes = p.pre.c_skip * dd + p.pre.c_in * dz.topRows(frame_);

  std::vector<double> acc(p.grid.padded, 0.0);
  for (int j = 0; j < p.grid.count; ++j)
    for (int m = 0; m < frame_; ++m)
      acc[static_cast<std::size_t>(j) * hop_ + m] += dframes(m, j);
  Signal out;
  out.sample_rate = noisy.sample_rate;
  out.samples.assign(acc.begin(), acc.begin() + noisy.length());
  return out;
}

void FrameDenoiser::save(const std::filesystem::path& path, double ema_rate) const {
  nlohmann::json j;
  j["format"] = "nlrestore-frame-denoiser-v1";
  j["frame"] = frame_;
  j["hop"] = hop_;
  j["layer_dims"] = std::vector<int>{frame_ + 1, hidden_, hidden_, frame_};
  j["sigma_data"] = sigma_data_;
  j["ema_rate"] = ema_rate;
  j["weights"] = weights_;
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path.string());
  f << j.dump();
}

FrameDenoiser FrameDenoiser::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path.string());
  nlohmann::json j;
  f >> j;
  if (j.value("format", "") != "nlrestore-frame-denoiser-v1")
    throw std::runtime_error("unrecognized checkpoint format: " + path.string());
  const auto dims = j.at("layer_dims").get<std::vector<int>>();
  if (dims.size() != 4) throw std::runtime_error("checkpoint: unexpected layer_dims");
  FrameDenoiser dn(j.at("frame").get<int>(), j.at("hop").get<int>(), dims[1],
                   j.at("sigma_data").get<double>(), 0);
  auto w = j.at("weights").get<std::vector<double>>();
  if (w.size() != dn.weights_.size())
    throw std::runtime_error("checkpoint: weight count mismatch");
  dn.weights_ = std::move(w);
  return dn;
}

TrainResult train_toy_denoiser(const std::vector<Signal>& dataset, const TrainConfig& cfg) {
  check_train_config(cfg);
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  for (const auto& s : dataset) check_signal(s, "train dataset signal");

  FrameDenoiser dn(cfg.frame, cfg.hop, cfg.hidden, cfg.sigma_data, cfg.seed);
  const Dims d = layout(cfg.frame, cfg.hidden);
  std::vector<double> ema = dn.weights();
  AdamState adam(d.total, AdamConfig{.lr = cfg.lr});
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double log_min = std::log(cfg.sigma_min), log_max = std::log(cfg.sigma_max);

  TrainResult result{std::move(dn), {}, {}};
  result.loss_history.reserve(cfg.iterations);
  std::vector<double> grad(d.total, 0.0);
  MatrixXd z(d.in, cfg.batch_size), target(cfg.frame, cfg.batch_size);
  Activations act;
  double interval_sum = 0.0;

  for (int it = 0; it < cfg.iterations; ++it) {
    for (int b = 0; b < cfg.batch_size; ++b) {
      const auto& sig = dataset[static_cast<std::size_t>(uniform(rng) * dataset.size()) %
                                dataset.size()];
      const std::size_t max_off =
          sig.length() > static_cast<std::size_t>(cfg.frame) ? sig.length() - cfg.frame : 0;
      const std::size_t off =
          max_off ? static_cast<std::size_t>(uniform(rng) * (max_off + 1)) % (max_off + 1) : 0;
      const double sigma = std::exp(log_min + (log_max - log_min) * uniform(rng));
      const EdmPrecond pre = edm_preconditioning(sigma, cfg.sigma_data);
      for (int m = 0; m < cfg.frame; ++m) {
        const std::size_t n = off + m;
        const double x0 = n < sig.length() ? sig.samples[n] : 0.0;
        const double xn = x0 + sigma * normal(rng);
        z(m, b) = pre.c_in * xn;
        target(m, b) = (x0 - pre.c_skip * xn) / pre.c_out;
      }
      z(cfg.frame, b) = pre.c_noise;
    }

    net_forward(views_of(result.denoiser.weights(), d), z, act);
    const MatrixXd resid = act.out - target;
    const double loss = resid.squaredNorm() / (cfg.batch_size * cfg.frame);
    if (!std::isfinite(loss))
      throw std::runtime_error("train: non-finite loss at iteration " + std::to_string(it));
    result.loss_history.push_back(loss);
    interval_sum += loss;
    if ((it + 1) % cfg.log_interval == 0) {
      result.loss_log.emplace_back(it + 1, interval_sum / cfg.log_interval);
      interval_sum = 0.0;
    }

    std::fill(grad.begin(), grad.end(), 0.0);
    const MatrixXd dout = resid * (2.0 / (cfg.batch_size * cfg.frame));
    MatrixXd dz;
    net_backward(views_of(result.denoiser.weights(), d), d, act, dout, dz, &grad);
    adam_step(adam, result.denoiser.weights(), grad);
    for (std::size_t i = 0; i < ema.size(); ++i)
      ema[i] = cfg.ema_rate * ema[i] + (1.0 - cfg.ema_rate) * result.denoiser.weights()[i];
  }

  result.denoiser.weights() = std::move(ema);
  return result;
}

}  // namespace nlrestore
