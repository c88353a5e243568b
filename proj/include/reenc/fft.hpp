// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace reenc {

// In-place iterative radix-2 FFT. n must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse = false);

// One-sided spectrum (bins 0..n/2) of a real signal zero-padded to n.
std::vector<std::complex<double>> rfft(const std::vector<double>& x, std::size_t n);

bool is_power_of_two(std::size_t n);

}  // namespace reenc
