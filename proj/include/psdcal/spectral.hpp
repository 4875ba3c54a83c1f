#pragma once

#include "psdcal/types.hpp"

namespace psdcal {

// Periodogram of a time series, computed in O(N log N) via a real FFT.
// The series is mean-centered first; DC and Nyquist ordinates are dropped.
Periodogram periodogram(const TimeSeries& ts);

// Average consecutive groups of bin_size ordinates (frequencies averaged
// alike). Throws std::invalid_argument if not even one full bin fits.
BinnedPeriodogram bin(const Periodogram& p, std::size_t bin_size);

// Keep exactly the ordinates with f_lo <= f_k <= f_hi (inclusive).
// Throws std::invalid_argument on a bad window or an empty selection.
Periodogram select_range(const Periodogram& p, double f_lo, double f_hi);

}  // namespace psdcal
