#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace psdcal {

// Displacement samples in femtometers at a fixed sampling rate.
//
// Internal unit convention: displacement fm, PSD fm^2/Hz. Meter-scale AFM
// magnitudes (~1e-26 m^2/Hz) would otherwise sit uncomfortably close to
// double underflow once squared.
struct TimeSeries {
  std::vector<double> samples;  // fm
  double fs = 0.0;              // Hz
};

// Throws std::invalid_argument unless fs > 0, length >= 2 and all samples
// are finite.
void validate(const TimeSeries& ts);

// One-sided periodogram ordinates Y_k = |X~_k|^2 / N on the Fourier grid
// f_k = (k/N) fs, k = 1..K with K = floor((N-1)/2). DC and Nyquist are
// excluded; the series is mean-centered before transforming.
//
// Y_k estimates fs * S(f_k), so ordinates carry fm^2 (PSD times Hz).
struct Periodogram {
  std::vector<double> freqs;      // Hz, strictly increasing
  std::vector<double> ordinates;  // fm^2, >= 0
  double fs = 0.0;                // Hz
  std::size_t n_source = 0;       // N of the originating series
};

void validate(const Periodogram& p);

// Bin means over consecutive groups of bin_size ordinates. The trailing
// partial bin is dropped, so n_bins = floor(K / bin_size).
struct BinnedPeriodogram {
  std::vector<double> bin_freqs;  // Hz, mean frequency per bin
  std::vector<double> bin_means;  // fm^2
  std::size_t bin_size = 0;
  std::size_t n_bins = 0;
  double fs = 0.0;
  std::size_t n_source = 0;
};

void validate(const BinnedPeriodogram& b);

}  // namespace psdcal
