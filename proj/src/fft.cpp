#include "nlrestore/fft.hpp"

#include <unsupported/Eigen/FFT>

#include <map>

namespace nlrestore {

namespace {

// One plan cache per thread; Eigen::FFT objects are not safe to share.
Eigen::FFT<double>& plan_for(std::size_t n) {
  thread_local std::map<std::size_t, Eigen::FFT<double>> plans;
  auto it = plans.find(n);
  if (it == plans.end()) {
    it = plans.emplace(n, Eigen::FFT<double>()).first;
    it->second.SetFlag(Eigen::FFT<double>::Unscaled);
  }
  return it->second;
}

}  // namespace

std::vector<std::complex<double>> fft_forward(const std::vector<std::complex<double>>& x) {
  std::vector<std::complex<double>> out(x.size());
  plan_for(x.size()).fwd(out, x);
  return out;
}

std::vector<std::complex<double>> fft_inverse_unscaled(const std::vector<std::complex<double>>& x) {
  std::vector<std::complex<double>> out(x.size());
  plan_for(x.size()).inv(out, x);
  return out;
}

std::vector<std::complex<double>> fft_inverse(const std::vector<std::complex<double>>& x) {
  auto out = fft_inverse_unscaled(x);
  const double scale = 1.0 / static_cast<double>(x.size());
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace nlrestore
