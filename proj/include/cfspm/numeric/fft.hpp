// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <span>
#include <vector>

namespace cfspm::fft {

using cplx = std::complex<double>;

bool is_power_of_two(std::size_t n);

/// Complex DFT, forward unnormalized, inverse scaled by 1/n. Iterative
/// radix-2 for power-of-two lengths, direct O(n^2) evaluation otherwise.
std::vector<cplx> transform(std::span<const cplx> x, bool inverse);
/// The O(n^2) route alone, for any n.
std::vector<cplx> transform_direct(std::span<const cplx> x, bool inverse);

/// floor(n/2)+1 bins of the real DFT.
std::vector<cplx> rfft(std::span<const double> x);
/// Real inverse for a signal of `length` samples; the imaginary parts of
/// the DC and Nyquist bins are ignored.
std::vector<double> irfft(std::span<const cplx> bins, std::size_t length);

/// One-sided periodogram power |X_f|^2 / n for each rfft bin.
std::vector<double> periodogram(std::span<const double> x);

}  // namespace cfspm::fft
