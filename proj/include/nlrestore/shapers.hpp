#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nlrestore/signal.hpp"

namespace nlrestore {

enum class ShaperKind { sum_tanh, mlp, ccr_spline };

std::string to_string(ShaperKind kind);
ShaperKind shaper_kind_from_string(const std::string& name);

// f(x) = sum_q a(q) * tanh(q * x), q = 1..Q.
struct SumTanhParams {
  std::vector<double> coeffs;  // a(1)..a(Q)
};

// Scalar-in/scalar-out fully connected net, ReLU on all but the last layer.
// Weights are stored flat, per layer: row-major W (out x in) then bias.
struct MlpParams {
  std::vector<int> dims;  // e.g. {1, 20, 20, 20, 1}
  std::vector<double> weights;
};

// Catmull-Rom transfer curve: fixed input grid, optimizable output ordinates.
// End segments use reflected virtual control points; inputs beyond the
// extremal knots extrapolate as constants.
struct CcrSplineParams {
  std::vector<double> grid;     // p_in, strictly increasing, size N+2
  std::vector<double> outputs;  // p_out, same size (the optimizable set)
  double mu = 20.0;
};

// N interior knots: a uniform grid on [-1, 1] warped by
// sgn(p) * ((1+mu)^|p| - 1) / mu, plus extremal knots at +-1.2.
std::vector<double> mu_law_grid(int n_interior, double mu);

// The four cubic basis polynomials; s in [0, 1).
std::array<double, 4> ccr_basis(double s);
std::array<double, 4> ccr_basis_derivative(double s);

class Waveshaper {
 public:
  Waveshaper() : model_(SumTanhParams{{1.0}}) {}
  explicit Waveshaper(SumTanhParams p);
  explicit Waveshaper(MlpParams p);
  explicit Waveshaper(CcrSplineParams p);

  // SumTanh starts as a(1)=1 (identity-like); MLP uses Kaiming-normal weights
  // and zero biases; the spline starts as the identity map p_out = p_in.
  static Waveshaper init(ShaperKind kind, const Signal& measurement, std::uint64_t seed);

  ShaperKind kind() const;
  std::size_t param_count() const { return params().size(); }
  std::span<const double> params() const;
  void set_params(std::span<const double> p);

  double eval_sample(double x) const;
  std::vector<double> eval(std::span<const double> x) const;
  Signal eval(const Signal& x) const;

  // Gradient of sum_n upstream(n) * f(x(n); psi) with respect to psi.
  std::vector<double> vjp_params(std::span<const double> x,
                                 std::span<const double> upstream) const;
  // Same contraction with respect to x.
  std::vector<double> vjp_input(std::span<const double> x,
                                std::span<const double> upstream) const;

  nlohmann::json to_json() const;
  static Waveshaper from_json(const nlohmann::json& j);

  const SumTanhParams* as_sum_tanh() const { return std::get_if<SumTanhParams>(&model_); }
  const MlpParams* as_mlp() const { return std::get_if<MlpParams>(&model_); }
  const CcrSplineParams* as_ccr() const { return std::get_if<CcrSplineParams>(&model_); }

 private:
  std::variant<SumTanhParams, MlpParams, CcrSplineParams> model_;
};

// Two-column CSV (input, output) of the transfer curve over [lo, hi].
void ramp_response_csv(const Waveshaper& shaper, double lo, double hi, int points,
                       std::ostream& out);

}  // namespace nlrestore
