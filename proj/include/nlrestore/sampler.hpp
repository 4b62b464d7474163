#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "nlrestore/distortion.hpp"
#include "nlrestore/prior.hpp"
#include "nlrestore/shapers.hpp"
#include "nlrestore/signal.hpp"
#include "nlrestore/stft.hpp"

namespace nlrestore {

struct NoiseSchedule {
  // sigmas[0] = sigma_max, ..., sigmas[steps-1] = sigma_min, sigmas[steps] = 0.
  std::vector<double> sigmas;
  int steps = 0;
  double sigma_min = 0.0, sigma_max = 0.0, rho = 0.0;
};

// sigma_i = (sigma_max^(1/rho) + i/(T-1) * (sigma_min^(1/rho) - sigma_max^(1/rho)))^rho
NoiseSchedule karras_schedule(int steps, double sigma_min, double sigma_max, double rho);

enum class DenoiserVjpMode { exact, identity };

struct GuidanceConfig {
  double zeta_prime = 0.3;   // guidance strength
  int n_op_iters = 20;       // Adam iterations per diffusion step
  double op_lr = 0.02;
  double churn = 0.0;        // stochastic churn amount (0 = deterministic Euler)
  double churn_sigma_min = 0.0;
  double churn_sigma_max = std::numeric_limits<double>::infinity();
  double churn_noise = 1.0;  // scale on the injected churn noise
  DenoiserVjpMode denoiser_vjp_mode = DenoiserVjpMode::exact;
  StftConfig stft;
};

struct StepTrace {
  int step = 0;          // diffusion step index, counting down from T
  double sigma = 0.0;
  double cost = 0.0;     // C(y, f_hat(x_hat0)) after the operator loop
  double score_norm = 0.0;  // euclidean norm of the likelihood score
  double state_residual = 0.0;  // ||x_i - x_hat0||
};

struct RestorationReport {
  Signal restored;
  std::optional<Waveshaper> operator_params;  // absent in informed runs
  std::vector<StepTrace> trace;
};

class RestorationError : public std::runtime_error {
 public:
  RestorationError(int step, std::string what, RestorationReport partial)
      : std::runtime_error(std::move(what)), step(step), partial(std::move(partial)) {}
  int step;
  RestorationReport partial;
};

// x_T = y + sigma_T * eps, eps ~ N(0, I).
Signal warm_init(const Signal& y, double sigma_T, std::mt19937_64& rng);
Signal warm_init(const Signal& y, double sigma_T, std::uint64_t seed);

// -zeta(tau) * grad_{x_tau} C(y, f_hat(x_hat0; psi)), chained through the cost
// adjoint, the operator input VJP and (optionally) the denoiser adjoint, with
// zeta(tau) = sqrt(L) * zeta_prime / (sigma * ||grad||). Returns zeros when
// the gradient vanishes.
Signal likelihood_score(const Signal& y, const Signal& x_hat0, const Waveshaper& op,
                        const Signal& x_tau, double sigma, const Denoiser& denoiser,
                        const GuidanceConfig& cfg);

RestorationReport blind_restore(const Signal& y, const Denoiser& denoiser, ShaperKind model,
                                const NoiseSchedule& schedule, const GuidanceConfig& cfg,
                                std::uint64_t seed);

// Ground-truth operator supplied; no operator optimization is performed.
RestorationReport informed_restore(const Signal& y, const Denoiser& denoiser,
                                   const DistortionSpec& true_op, const NoiseSchedule& schedule,
                                   const GuidanceConfig& cfg, std::uint64_t seed);

// Long signals: fixed-length segments, operator warm-started across segments.
struct SegmentedReport {
  Signal restored;
  std::optional<Waveshaper> operator_params;
  std::vector<RestorationReport> segments;
};
SegmentedReport blind_restore_segmented(const Signal& y, const Denoiser& denoiser,
                                        ShaperKind model, const NoiseSchedule& schedule,
                                        const GuidanceConfig& cfg, std::uint64_t seed,
                                        std::size_t segment_length);

void trace_to_csv(const std::vector<StepTrace>& trace, std::ostream& out);

}  // namespace nlrestore
