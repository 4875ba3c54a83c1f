#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace psdcal {

// Forward real DFT, X~_k = sum_n x_n exp(-2 pi i k n / N), returned for
// k = 0..N/2 (half spectrum, Hermitian remainder implied).
std::vector<std::complex<double>> real_dft_half(const std::vector<double>& x);

// Inverse of the half spectrum back to a length-n real series, assuming
// Hermitian symmetry; includes the 1/N normalization. spec must have
// n/2 + 1 entries.
std::vector<double> inverse_real_dft_half(
    const std::vector<std::complex<double>>& spec, std::size_t n);

}  // namespace psdcal
