#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nlrestore {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  long step = 0;

  AdamState() = default;
  AdamState(std::size_t n, AdamConfig c) : cfg(c), m(n, 0.0), v(n, 0.0) {}
};

// Standard bias-corrected Adam update, in place. Throws on non-finite gradients.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad);

}  // namespace nlrestore
