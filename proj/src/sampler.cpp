#include "nlrestore/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <ostream>

#include "nlrestore/optim.hpp"

namespace nlrestore {

NoiseSchedule karras_schedule(int steps, double sigma_min, double sigma_max, double rho) {
  if (steps < 2) throw std::invalid_argument("karras_schedule: need at least 2 steps");
  if (!(sigma_min > 0.0 && sigma_min < sigma_max))
    throw std::invalid_argument("karras_schedule: need 0 < sigma_min < sigma_max");
  if (!(rho > 0.0)) throw std::invalid_argument("karras_schedule: rho must be positive");
  NoiseSchedule sched;
  sched.steps = steps;
  sched.sigma_min = sigma_min;
  sched.sigma_max = sigma_max;
  sched.rho = rho;
  sched.sigmas.resize(steps + 1);
  const double hi = std::pow(sigma_max, 1.0 / rho);
  const double lo = std::pow(sigma_min, 1.0 / rho);
  for (int i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / (steps - 1);
    sched.sigmas[i] = std::pow(hi + t * (lo - hi), rho);
  }
  sched.sigmas[steps] = 0.0;
  return sched;
}

Signal warm_init(const Signal& y, double sigma_T, std::mt19937_64& rng) {
  if (!(sigma_T >= 0.0)) throw std::invalid_argument("warm_init: sigma_T must be >= 0");
  check_signal(y, "warm_init measurement");
  Signal x = y;
  if (sigma_T == 0.0) return x;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : x.samples) v += sigma_T * normal(rng);
  return x;
}

Signal warm_init(const Signal& y, double sigma_T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return warm_init(y, sigma_T, rng);
}

namespace {

// Minimal operator hooks so the blind and informed paths share one loop.
struct OperatorHooks {
  std::function<Signal(const Signal&)> forward;
  std::function<std::vector<double>(std::span<const double>, std::span<const double>)> vjp_input;
};

OperatorHooks hooks_for(const Waveshaper& shaper) {
  return {[&shaper](const Signal& x) { return shaper.eval(x); },
          [&shaper](std::span<const double> x, std::span<const double> up) {
            return shaper.vjp_input(x, up);
          }};
}

OperatorHooks hooks_for(const DistortionSpec& spec) {
  return {[&spec](const Signal& x) { return apply_distortion(x, spec); },
          [&spec](std::span<const double> x, std::span<const double> up) {
            return distortion_vjp_input(spec, x, up);
          }};
}

// Chains the raw cost gradient back to x_tau and applies the Eq.-style
// normalization. grad_yhat is dC/d(f_hat(x_hat0)).
Signal scaled_likelihood_score(const Signal& grad_yhat, const OperatorHooks& op,
                               const Signal& x_hat0, const Signal& x_tau, double sigma,
                               const Denoiser& denoiser, const GuidanceConfig& cfg) {
  std::vector<double> grad_x0 = op.vjp_input(x_hat0.samples, grad_yhat.samples);
  Signal grad_xtau{std::move(grad_x0), x_tau.sample_rate};
  if (cfg.denoiser_vjp_mode == DenoiserVjpMode::exact)
    grad_xtau = denoiser.adjoint(x_tau, sigma, grad_xtau);
  const double norm = norm2(grad_xtau.samples);
  Signal out;
  out.sample_rate = x_tau.sample_rate;
  out.samples.assign(x_tau.length(), 0.0);
  if (norm == 0.0) return out;
  const double zeta =
      std::sqrt(static_cast<double>(x_tau.length())) * cfg.zeta_prime / (sigma * norm);
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] = -zeta * grad_xtau.samples[i];
  return out;
}

RestorationReport run_sampler(const Signal& y, const Denoiser& denoiser,
                              const OperatorHooks& op, Waveshaper* shaper,
                              const NoiseSchedule& schedule, const GuidanceConfig& cfg,
                              std::uint64_t seed) {
  check_signal(y, "measurement");
  if (schedule.steps < 1 || schedule.sigmas.size() != static_cast<std::size_t>(schedule.steps) + 1)
    throw std::invalid_argument("restore: invalid noise schedule");
  if (cfg.zeta_prime < 0.0 || cfg.n_op_iters < 0)
    throw std::invalid_argument("restore: invalid guidance config");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto comp_y = compress_spectrogram(stft(y, cfg.stft));

  RestorationReport report;
  report.trace.reserve(schedule.steps);
  Signal x = warm_init(y, schedule.sigmas[0], rng);

  AdamState adam;
  const bool optimize_op = shaper != nullptr && cfg.n_op_iters > 0;

  for (int i = 0; i < schedule.steps; ++i) {
    double sigma = schedule.sigmas[i];
    const double sigma_next = schedule.sigmas[i + 1];

    if (cfg.churn > 0.0 && sigma >= cfg.churn_sigma_min && sigma <= cfg.churn_sigma_max) {
      const double gamma =
          std::min(cfg.churn / schedule.steps, std::numbers::sqrt2 - 1.0);
      if (gamma > 0.0) {
        const double sigma_hat = sigma * (1.0 + gamma);
        const double extra = std::sqrt(sigma_hat * sigma_hat - sigma * sigma) * cfg.churn_noise;
        for (auto& v : x.samples) v += extra * normal(rng);
        sigma = sigma_hat;
      }
    }

    const Signal x_hat0 = denoiser.denoise(x, sigma);

    if (optimize_op) {
      // Fresh Adam moments per diffusion step; psi itself carries over.
      adam = AdamState(shaper->param_count(), AdamConfig{.lr = cfg.op_lr});
      std::vector<double> psi(shaper->params().begin(), shaper->params().end());
      for (int j = 0; j < cfg.n_op_iters; ++j) {
        const Signal y_hat = op.forward(x_hat0);
        const auto res = detail::cost_and_adjoint_pre(comp_y, y_hat, cfg.stft);
        const auto grad_psi = shaper->vjp_params(x_hat0.samples, res.gradient.samples);
        adam_step(adam, psi, grad_psi);
        shaper->set_params(psi);
      }
    }

    const Signal y_hat = op.forward(x_hat0);
    const auto res = detail::cost_and_adjoint_pre(comp_y, y_hat, cfg.stft);
    const Signal lx =
        scaled_likelihood_score(res.gradient, op, x_hat0, x, sigma, denoiser, cfg);

    StepTrace t;
    t.step = schedule.steps - i;
    t.sigma = sigma;
    t.cost = res.cost;
    t.score_norm = norm2(lx.samples);
    double resid = 0.0;
    for (std::size_t n = 0; n < x.length(); ++n) {
      const double d = x.samples[n] - x_hat0.samples[n];
      resid += d * d;
    }
    t.state_residual = std::sqrt(resid);
    report.trace.push_back(t);

    // Euler update: x_{i-1} = x_i - sigma * (sigma_next - sigma) * (score + l_x)
    const double coef = -sigma * (sigma_next - sigma);
    const double inv_s2 = 1.0 / (sigma * sigma);
    for (std::size_t n = 0; n < x.length(); ++n) {
      const double score = (x_hat0.samples[n] - x.samples[n]) * inv_s2;
      x.samples[n] += coef * (score + lx.samples[n]);
    }

    if (!all_finite(x.samples)) {
      report.restored = x;
      if (shaper) report.operator_params = *shaper;
      throw RestorationError(t.step,
                             "restore: non-finite state at step " + std::to_string(t.step),
                             std::move(report));
    }
  }

  report.restored = std::move(x);
  if (shaper) report.operator_params = *shaper;
  return report;
}

}  // namespace

Signal likelihood_score(const Signal& y, const Signal& x_hat0, const Waveshaper& op,
                        const Signal& x_tau, double sigma, const Denoiser& denoiser,
                        const GuidanceConfig& cfg) {
  if (y.length() != x_hat0.length() || y.length() != x_tau.length())
    throw std::invalid_argument("likelihood_score: length mismatch");
  const Signal y_hat = op.eval(x_hat0);
  const Signal grad_yhat = cost_adjoint(y, y_hat, cfg.stft);
  return scaled_likelihood_score(grad_yhat, hooks_for(op), x_hat0, x_tau, sigma, denoiser, cfg);
}

RestorationReport blind_restore(const Signal& y, const Denoiser& denoiser, ShaperKind model,
                                const NoiseSchedule& schedule, const GuidanceConfig& cfg,
                                std::uint64_t seed) {
  Waveshaper shaper = Waveshaper::init(model, y, seed);
  return run_sampler(y, denoiser, hooks_for(shaper), &shaper, schedule, cfg, seed);
}

RestorationReport informed_restore(const Signal& y, const Denoiser& denoiser,
                                   const DistortionSpec& true_op, const NoiseSchedule& schedule,
                                   const GuidanceConfig& cfg, std::uint64_t seed) {
  check_distortion_spec(true_op);
  GuidanceConfig informed_cfg = cfg;
  informed_cfg.n_op_iters = 0;
  return run_sampler(y, denoiser, hooks_for(true_op), nullptr, schedule, informed_cfg, seed);
}

SegmentedReport blind_restore_segmented(const Signal& y, const Denoiser& denoiser,
                                        ShaperKind model, const NoiseSchedule& schedule,
                                        const GuidanceConfig& cfg, std::uint64_t seed,
                                        std::size_t segment_length) {
  check_signal(y, "measurement");
  if (segment_length < 2) throw std::invalid_argument("restore: segment_length too small");

  SegmentedReport out;
  out.restored.sample_rate = y.sample_rate;
  Waveshaper shaper = Waveshaper::init(model, y, seed);

  for (std::size_t start = 0; start < y.length(); start += segment_length) {
    const std::size_t len = std::min(segment_length, y.length() - start);
    Signal seg;
    seg.sample_rate = y.sample_rate;
    seg.samples.assign(segment_length, 0.0);  // final partial segment is zero-padded
    std::copy(y.samples.begin() + start, y.samples.begin() + start + len, seg.samples.begin());

    auto report = run_sampler(seg, denoiser, hooks_for(shaper), &shaper, schedule, cfg,
                              seed + out.segments.size());
    out.restored.samples.insert(out.restored.samples.end(), report.restored.samples.begin(),
                                report.restored.samples.begin() + len);
    out.segments.push_back(std::move(report));
  }
  out.operator_params = shaper;
  return out;
}

void trace_to_csv(const std::vector<StepTrace>& trace, std::ostream& out) {
  out << "step,sigma,cost,score_norm\n";
  char line[128];
  for (const auto& t : trace) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", t.step, t.sigma, t.cost,
                  t.score_norm);
    out << line;
  }
}

}  // namespace nlrestore
