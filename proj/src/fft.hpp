// Thin FFTW wrapper. All transforms are unnormalized; sign = -1 computes
// Σ_j f_j e^{-2πi jk/n}, sign = +1 the conjugate kernel.
#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace qet::detail {

void dft(std::span<std::complex<double>> data, int sign);

/// Transforms each of the `rows` contiguous rows of length `cols`.
void dft_rows(std::span<std::complex<double>> data, std::size_t rows, std::size_t cols,
              int sign);

/// Transforms each of the `cols` strided columns of length `rows`.
void dft_cols(std::span<std::complex<double>> data, std::size_t rows, std::size_t cols,
              int sign);

}  // namespace qet::detail
