#pragma once

#include <complex>
#include <vector>

namespace nlrestore {

// Complex DFT, X_k = sum_n x_n exp(-2*pi*i*k*n/N). No normalization.
std::vector<std::complex<double>> fft_forward(const std::vector<std::complex<double>>& x);

// Inverse with 1/N scaling applied.
std::vector<std::complex<double>> fft_inverse(const std::vector<std::complex<double>>& x);

// Plain conjugate-transpose of the forward transform (no 1/N). Used by adjoints.
std::vector<std::complex<double>> fft_inverse_unscaled(const std::vector<std::complex<double>>& x);

}  // namespace nlrestore
