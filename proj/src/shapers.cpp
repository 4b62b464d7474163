#include "nlrestore/shapers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <stdexcept>

namespace nlrestore {

std::string to_string(ShaperKind kind) {
  switch (kind) {
    case ShaperKind::sum_tanh: return "sum_tanh";
    case ShaperKind::mlp: return "mlp";
    case ShaperKind::ccr_spline: return "ccr_spline";
  }
  throw std::logic_error("unknown ShaperKind");
}

ShaperKind shaper_kind_from_string(const std::string& name) {
  if (name == "sum_tanh") return ShaperKind::sum_tanh;
  if (name == "mlp") return ShaperKind::mlp;
  if (name == "ccr_spline" || name == "ccr") return ShaperKind::ccr_spline;
  throw std::invalid_argument("unknown waveshaper kind: " + name);
}

std::vector<double> mu_law_grid(int n_interior, double mu) {
  if (n_interior < 3 || n_interior % 2 == 0)
    throw std::invalid_argument("mu_law_grid: interior knot count must be odd and >= 3");
  if (!(mu > 0.0)) throw std::invalid_argument("mu_law_grid: mu must be positive");
  std::vector<double> grid;
  grid.reserve(n_interior + 2);
  grid.push_back(-1.2);
  for (int i = 0; i < n_interior; ++i) {
    const double p = -1.0 + 2.0 * i / (n_interior - 1);
    const double warped = (std::pow(1.0 + mu, std::abs(p)) - 1.0) / mu;
    grid.push_back(p < 0.0 ? -warped : warped);
  }
  grid.push_back(1.2);
  return grid;
}

std::array<double, 4> ccr_basis(double s) {
  if (!(s >= 0.0 && s < 1.0)) throw std::invalid_argument("ccr_basis: s must lie in [0, 1)");
  const double s2 = s * s, s3 = s2 * s;
  return {0.5 * (-s + 2.0 * s2 - s3), 0.5 * (2.0 - 5.0 * s2 + 3.0 * s3),
          0.5 * (s + 4.0 * s2 - 3.0 * s3), 0.5 * (-s2 + s3)};
}

std::array<double, 4> ccr_basis_derivative(double s) {
  if (!(s >= 0.0 && s < 1.0))
    throw std::invalid_argument("ccr_basis_derivative: s must lie in [0, 1)");
  const double s2 = s * s;
  return {0.5 * (-1.0 + 4.0 * s - 3.0 * s2), 0.5 * (-10.0 * s + 9.0 * s2),
          0.5 * (1.0 + 8.0 * s - 9.0 * s2), 0.5 * (-2.0 * s + 3.0 * s2)};
}

namespace {

constexpr int kSumTanhOrder = 8;
constexpr int kMlpHidden = 20;
constexpr int kCcrInteriorKnots = 41;
constexpr double kCcrMu = 20.0;

std::array<double, 4> basis_unchecked(double s) {
  const double s2 = s * s, s3 = s2 * s;
  return {0.5 * (-s + 2.0 * s2 - s3), 0.5 * (2.0 - 5.0 * s2 + 3.0 * s3),
          0.5 * (s + 4.0 * s2 - 3.0 * s3), 0.5 * (-s2 + s3)};
}

std::array<double, 4> basis_derivative_unchecked(double s) {
  const double s2 = s * s;
  return {0.5 * (-1.0 + 4.0 * s - 3.0 * s2), 0.5 * (-10.0 * s + 9.0 * s2),
          0.5 * (1.0 + 8.0 * s - 9.0 * s2), 0.5 * (-2.0 * s + 3.0 * s2)};
}

void check_sum_tanh(const SumTanhParams& p) {
  if (p.coeffs.empty()) throw std::invalid_argument("sum_tanh: need at least one coefficient");
  if (!all_finite(p.coeffs)) throw std::invalid_argument("sum_tanh: non-finite coefficient");
}

std::size_t mlp_weight_count(const std::vector<int>& dims) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l)
    n += static_cast<std::size_t>(dims[l + 1]) * dims[l] + dims[l + 1];
  return n;
}

void check_mlp(const MlpParams& p) {
  if (p.dims.size() < 2 || p.dims.size() > 8 || p.dims.front() != 1 || p.dims.back() != 1)
    throw std::invalid_argument("mlp: dims must describe a scalar-to-scalar net (<= 7 layers)");
  for (int d : p.dims)
    if (d < 1 || d > 64) throw std::invalid_argument("mlp: layer width must be in [1, 64]");
  if (p.weights.size() != mlp_weight_count(p.dims))
    throw std::invalid_argument("mlp: weight vector size does not match dims");
  if (!all_finite(p.weights)) throw std::invalid_argument("mlp: non-finite weight");
}

void check_ccr(const CcrSplineParams& p) {
  if (p.grid.size() < 5 || p.grid.size() != p.outputs.size())
    throw std::invalid_argument("ccr_spline: grid/outputs size mismatch or too small");
  for (std::size_t i = 1; i < p.grid.size(); ++i)
    if (!(p.grid[i] > p.grid[i - 1]))
      throw std::invalid_argument("ccr_spline: grid must be strictly increasing");
  if (!all_finite(p.outputs)) throw std::invalid_argument("ccr_spline: non-finite output knot");
}

// Control point with reflected virtual endpoints one past each end.
double ccr_point(const std::vector<double>& q, long idx) {
  const long n = static_cast<long>(q.size());
  if (idx < 0) return 2.0 * q[0] - q[1];
  if (idx >= n) return 2.0 * q[n - 1] - q[n - 2];
  return q[idx];
}

struct CcrLocation {
  bool clamped_low = false, clamped_high = false;
  int bin = 0;
  double s = 0.0;
  double width = 1.0;
};

CcrLocation ccr_locate(const CcrSplineParams& p, double x) {
  CcrLocation loc;
  if (x <= p.grid.front()) {
    loc.clamped_low = true;
    return loc;
  }
  if (x >= p.grid.back()) {
    loc.clamped_high = true;
    return loc;
  }
  const auto it = std::upper_bound(p.grid.begin(), p.grid.end(), x);
  loc.bin = static_cast<int>(it - p.grid.begin()) - 1;
  loc.width = p.grid[loc.bin + 1] - p.grid[loc.bin];
  loc.s = (x - p.grid[loc.bin]) / loc.width;
  return loc;
}

double eval_sum_tanh(const SumTanhParams& p, double x) {
  double y = 0.0;
  for (std::size_t q = 0; q < p.coeffs.size(); ++q)
    y += p.coeffs[q] * std::tanh((q + 1.0) * x);
  return y;
}

double eval_ccr(const CcrSplineParams& p, double x) {
  const CcrLocation loc = ccr_locate(p, x);
  if (loc.clamped_low) return p.outputs.front();
  if (loc.clamped_high) return p.outputs.back();
  const auto b = basis_unchecked(loc.s);
  double y = 0.0;
  for (int j = 0; j < 4; ++j) y += b[j] * ccr_point(p.outputs, loc.bin - 1 + j);
  return y;
}

// The MLP is small enough to run on stack buffers.
constexpr int kMaxWidth = 64;

struct MlpTrace {
  double h[8][kMaxWidth];   // post-activation per layer (h[0] = input)
  double z[8][kMaxWidth];   // pre-activation
};

double mlp_forward(const MlpParams& p, double x, MlpTrace* trace) {
  const int layers = static_cast<int>(p.dims.size()) - 1;
  double cur[kMaxWidth], next[kMaxWidth];
  cur[0] = x;
  if (trace) trace->h[0][0] = x;
  std::size_t off = 0;
  for (int l = 0; l < layers; ++l) {
    const int in = p.dims[l], out = p.dims[l + 1];
    const double* w = p.weights.data() + off;
    const double* b = w + static_cast<std::size_t>(out) * in;
    for (int o = 0; o < out; ++o) {
      double z = b[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) z += row[i] * cur[i];
      if (trace) trace->z[l + 1][o] = z;
      next[o] = (l + 1 < layers && z < 0.0) ? 0.0 : z;  // ReLU except output
      if (trace) trace->h[l + 1][o] = next[o];
    }
    std::copy(next, next + out, cur);
    off += static_cast<std::size_t>(out) * in + out;
  }
  return cur[0];
}

// Backward pass for one sample; accumulates into param_grad (if non-null) and
// returns d(out)/d(input) * upstream.
double mlp_backward(const MlpParams& p, const MlpTrace& trace, double upstream,
                    double* param_grad) {
  const int layers = static_cast<int>(p.dims.size()) - 1;
  double delta[kMaxWidth], prev[kMaxWidth];
  delta[0] = upstream;
  // offsets of each layer block in the flat weight vector
  std::size_t offs[8];
  std::size_t off = 0;
  for (int l = 0; l < layers; ++l) {
    offs[l] = off;
    off += static_cast<std::size_t>(p.dims[l + 1]) * p.dims[l] + p.dims[l + 1];
  }
  for (int l = layers - 1; l >= 0; --l) {
    const int in = p.dims[l], out = p.dims[l + 1];
    const double* w = p.weights.data() + offs[l];
    if (l + 1 < layers) {  // ReLU derivative (0 at 0)
      for (int o = 0; o < out; ++o)
        if (trace.z[l + 1][o] <= 0.0) delta[o] = 0.0;
    }
    if (param_grad) {
      double* gw = param_grad + offs[l];
      double* gb = gw + static_cast<std::size_t>(out) * in;
      for (int o = 0; o < out; ++o) {
        gb[o] += delta[o];
        double* grow = gw + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) grow[i] += delta[o] * trace.h[l][i];
      }
    }
    for (int i = 0; i < in; ++i) {
      double acc = 0.0;
      for (int o = 0; o < out; ++o) acc += w[static_cast<std::size_t>(o) * in + i] * delta[o];
      prev[i] = acc;
    }
    std::copy(prev, prev + in, delta);
  }
  return delta[0];
}

}  // namespace

Waveshaper::Waveshaper(SumTanhParams p) : model_(std::move(p)) {
  check_sum_tanh(*as_sum_tanh());
}
Waveshaper::Waveshaper(MlpParams p) : model_(std::move(p)) { check_mlp(*as_mlp()); }
Waveshaper::Waveshaper(CcrSplineParams p) : model_(std::move(p)) { check_ccr(*as_ccr()); }

Waveshaper Waveshaper::init(ShaperKind kind, const Signal& measurement, std::uint64_t seed) {
  (void)measurement;  // all three starts are measurement-independent
  switch (kind) {
    case ShaperKind::sum_tanh: {
      SumTanhParams p;
      p.coeffs.assign(kSumTanhOrder, 0.0);
      p.coeffs[0] = 1.0;
      return Waveshaper(std::move(p));
    }
    case ShaperKind::mlp: {
      MlpParams p;
      p.dims = {1, kMlpHidden, kMlpHidden, kMlpHidden, 1};
      p.weights.assign(mlp_weight_count(p.dims), 0.0);
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      std::size_t off = 0;
      for (std::size_t l = 0; l + 1 < p.dims.size(); ++l) {
        const int in = p.dims[l], out = p.dims[l + 1];
        const double std_dev = std::sqrt(2.0 / in);  // Kaiming-normal
        for (int i = 0; i < out * in; ++i) p.weights[off + i] = std_dev * normal(rng);
        off += static_cast<std::size_t>(out) * in + out;  // biases stay zero
      }
      return Waveshaper(std::move(p));
    }
    case ShaperKind::ccr_spline: {
      CcrSplineParams p;
      p.mu = kCcrMu;
      p.grid = mu_law_grid(kCcrInteriorKnots, kCcrMu);
      p.outputs = p.grid;
      return Waveshaper(std::move(p));
    }
  }
  throw std::logic_error("unknown ShaperKind");
}

ShaperKind Waveshaper::kind() const {
  if (as_sum_tanh()) return ShaperKind::sum_tanh;
  if (as_mlp()) return ShaperKind::mlp;
  return ShaperKind::ccr_spline;
}

std::span<const double> Waveshaper::params() const {
  if (const auto* st = as_sum_tanh()) return st->coeffs;
  if (const auto* mlp = as_mlp()) return mlp->weights;
  return as_ccr()->outputs;
}

void Waveshaper::set_params(std::span<const double> p) {
  if (p.size() != params().size()) throw std::invalid_argument("set_params: size mismatch");
  if (auto* st = std::get_if<SumTanhParams>(&model_))
    st->coeffs.assign(p.begin(), p.end());
  else if (auto* mlp = std::get_if<MlpParams>(&model_))
    mlp->weights.assign(p.begin(), p.end());
  else
    std::get<CcrSplineParams>(model_).outputs.assign(p.begin(), p.end());
}

double Waveshaper::eval_sample(double x) const {
  if (const auto* st = as_sum_tanh()) return eval_sum_tanh(*st, x);
  if (const auto* mlp = as_mlp()) return mlp_forward(*mlp, x, nullptr);
  return eval_ccr(*as_ccr(), x);
}

std::vector<double> Waveshaper::eval(std::span<const double> x) const {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = eval_sample(x[i]);
  return y;
}

Signal Waveshaper::eval(const Signal& x) const {
  return Signal{eval(std::span<const double>(x.samples)), x.sample_rate};
}

std::vector<double> Waveshaper::vjp_params(std::span<const double> x,
                                           std::span<const double> upstream) const {
  if (x.size() != upstream.size()) throw std::invalid_argument("vjp_params: length mismatch");
  std::vector<double> grad(param_count(), 0.0);
  if (const auto* st = as_sum_tanh()) {
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t q = 0; q < st->coeffs.size(); ++q)
        grad[q] += upstream[i] * std::tanh((q + 1.0) * x[i]);
  } else if (const auto* mlp = as_mlp()) {
    MlpTrace trace;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mlp_forward(*mlp, x[i], &trace);
      mlp_backward(*mlp, trace, upstream[i], grad.data());
    }
  } else {
    const auto& p = *as_ccr();
    const long n = static_cast<long>(p.outputs.size());
    const auto add = [&](long idx, double v) {
      // virtual endpoints are reflections, so their pull lands on real knots
      if (idx < 0) {
        grad[0] += 2.0 * v;
        grad[1] -= v;
      } else if (idx >= n) {
        grad[n - 1] += 2.0 * v;
        grad[n - 2] -= v;
      } else {
        grad[idx] += v;
      }
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
      const CcrLocation loc = ccr_locate(p, x[i]);
      if (loc.clamped_low) {
        grad[0] += upstream[i];
        continue;
      }
      if (loc.clamped_high) {
        grad[n - 1] += upstream[i];
        continue;
      }
      const auto b = basis_unchecked(loc.s);
      for (int j = 0; j < 4; ++j) add(loc.bin - 1 + j, upstream[i] * b[j]);
    }
  }
  return grad;
}

std::vector<double> Waveshaper::vjp_input(std::span<const double> x,
                                          std::span<const double> upstream) const {
  if (x.size() != upstream.size()) throw std::invalid_argument("vjp_input: length mismatch");
  std::vector<double> grad(x.size(), 0.0);
  if (const auto* st = as_sum_tanh()) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      double d = 0.0;
      for (std::size_t q = 0; q < st->coeffs.size(); ++q) {
        const double t = std::tanh((q + 1.0) * x[i]);
        d += st->coeffs[q] * (q + 1.0) * (1.0 - t * t);
      }
      grad[i] = d * upstream[i];
    }
  } else if (const auto* mlp = as_mlp()) {
    MlpTrace trace;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mlp_forward(*mlp, x[i], &trace);
      grad[i] = mlp_backward(*mlp, trace, upstream[i], nullptr);
    }
  } else {
    const auto& p = *as_ccr();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const CcrLocation loc = ccr_locate(p, x[i]);
      if (loc.clamped_low || loc.clamped_high) continue;  // constant extrapolation
      const auto db = basis_derivative_unchecked(loc.s);
      double d = 0.0;
      for (int j = 0; j < 4; ++j) d += db[j] * ccr_point(p.outputs, loc.bin - 1 + j);
      grad[i] = upstream[i] * d / loc.width;
    }
  }
  return grad;
}

nlohmann::json Waveshaper::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind());
  if (const auto* st = as_sum_tanh()) {
    j["coeffs"] = st->coeffs;
  } else if (const auto* mlp = as_mlp()) {
    j["dims"] = mlp->dims;
    j["weights"] = mlp->weights;
  } else {
    const auto& p = *as_ccr();
    j["mu"] = p.mu;
    j["grid"] = p.grid;
    j["outputs"] = p.outputs;
  }
  return j;
}

Waveshaper Waveshaper::from_json(const nlohmann::json& j) {
  const ShaperKind kind = shaper_kind_from_string(j.at("kind").get<std::string>());
  switch (kind) {
    case ShaperKind::sum_tanh: {
      SumTanhParams p;
      p.coeffs = j.at("coeffs").get<std::vector<double>>();
      return Waveshaper(std::move(p));
    }
    case ShaperKind::mlp: {
      MlpParams p;
      p.dims = j.at("dims").get<std::vector<int>>();
      p.weights = j.at("weights").get<std::vector<double>>();
      return Waveshaper(std::move(p));
    }
    case ShaperKind::ccr_spline: {
      CcrSplineParams p;
      p.mu = j.value("mu", kCcrMu);
      p.grid = j.at("grid").get<std::vector<double>>();
      p.outputs = j.at("outputs").get<std::vector<double>>();
      return Waveshaper(std::move(p));
    }
  }
  throw std::logic_error("unknown ShaperKind");
}

void ramp_response_csv(const Waveshaper& shaper, double lo, double hi, int points,
                       std::ostream& out) {
  if (points < 2) throw std::invalid_argument("ramp_response_csv: need at least 2 points");
  out << "input,output\n";
  char line[64];
  for (int i = 0; i < points; ++i) {
    const double r = lo + (hi - lo) * i / (points - 1);
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", r, shaper.eval_sample(r));
    out << line;
  }
}

}  // namespace nlrestore
