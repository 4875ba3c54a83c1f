#include "psdcal/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "psdcal/fft.hpp"

namespace psdcal {

void validate(const TimeSeries& ts) {
  if (!(ts.fs > 0.0) || !std::isfinite(ts.fs))
    throw std::invalid_argument("TimeSeries: fs must be positive and finite");
  if (ts.samples.size() < 2)
    throw std::invalid_argument("TimeSeries: need at least 2 samples");
  for (double v : ts.samples)
    if (!std::isfinite(v))
      throw std::invalid_argument("TimeSeries: non-finite sample");
}

void validate(const Periodogram& p) {
  if (!(p.fs > 0.0)) throw std::invalid_argument("Periodogram: fs must be positive");
  if (p.freqs.size() != p.ordinates.size())
    throw std::invalid_argument("Periodogram: freqs/ordinates length mismatch");
  if (p.freqs.empty()) throw std::invalid_argument("Periodogram: empty");
  for (std::size_t i = 0; i < p.freqs.size(); ++i) {
    if (i > 0 && !(p.freqs[i] > p.freqs[i - 1]))
      throw std::invalid_argument("Periodogram: freqs must be strictly increasing");
    if (!(p.ordinates[i] >= 0.0))
      throw std::invalid_argument("Periodogram: negative ordinate");
  }
}

void validate(const BinnedPeriodogram& b) {
  if (b.bin_size == 0) throw std::invalid_argument("BinnedPeriodogram: bin_size must be >= 1");
  if (b.bin_freqs.size() != b.bin_means.size() || b.bin_freqs.size() != b.n_bins)
    throw std::invalid_argument("BinnedPeriodogram: inconsistent sizes");
  if (b.n_bins == 0) throw std::invalid_argument("BinnedPeriodogram: empty");
  for (std::size_t i = 1; i < b.bin_freqs.size(); ++i)
    if (!(b.bin_freqs[i] > b.bin_freqs[i - 1]))
      throw std::invalid_argument("BinnedPeriodogram: bin_freqs must be strictly increasing");
}

Periodogram periodogram(const TimeSeries& ts) {
  validate(ts);
  const std::size_t n = ts.samples.size();
  const double mean =
      std::accumulate(ts.samples.begin(), ts.samples.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = ts.samples[i] - mean;

  const auto spec = real_dft_half(centered);
  const std::size_t kmax = (n - 1) / 2;  // excludes DC (k=0) and Nyquist

  Periodogram p;
  p.fs = ts.fs;
  p.n_source = n;
  p.freqs.resize(kmax);
  p.ordinates.resize(kmax);
  for (std::size_t k = 1; k <= kmax; ++k) {
    p.freqs[k - 1] = static_cast<double>(k) / static_cast<double>(n) * ts.fs;
    p.ordinates[k - 1] = std::norm(spec[k]) / static_cast<double>(n);
  }
  return p;
}

BinnedPeriodogram bin(const Periodogram& p, std::size_t bin_size) {
  validate(p);
  if (bin_size == 0) throw std::invalid_argument("bin: bin_size must be >= 1");
  const std::size_t k = p.ordinates.size();
  if (bin_size > k)
    throw std::invalid_argument("bin: bin_size exceeds the number of ordinates");

  BinnedPeriodogram b;
  b.bin_size = bin_size;
  b.n_bins = k / bin_size;
  b.fs = p.fs;
  b.n_source = p.n_source;
  b.bin_freqs.resize(b.n_bins);
  b.bin_means.resize(b.n_bins);
  for (std::size_t m = 0; m < b.n_bins; ++m) {
    double fsum = 0.0, ysum = 0.0;
    const std::size_t base = m * bin_size;
    for (std::size_t j = 0; j < bin_size; ++j) {
      fsum += p.freqs[base + j];
      ysum += p.ordinates[base + j];
    }
    b.bin_freqs[m] = fsum / static_cast<double>(bin_size);
    b.bin_means[m] = ysum / static_cast<double>(bin_size);
  }
  return b;
}

Periodogram select_range(const Periodogram& p, double f_lo, double f_hi) {
  validate(p);
  if (!(f_lo > 0.0) || !(f_hi > f_lo))
    throw std::invalid_argument("select_range: need 0 < f_lo < f_hi");
  const auto first = std::lower_bound(p.freqs.begin(), p.freqs.end(), f_lo);
  const auto last = std::upper_bound(p.freqs.begin(), p.freqs.end(), f_hi);
  if (first >= last)
    throw std::invalid_argument("select_range: no ordinates in the requested window");
  const auto i0 = static_cast<std::size_t>(first - p.freqs.begin());
  const auto i1 = static_cast<std::size_t>(last - p.freqs.begin());

  Periodogram out;
  out.fs = p.fs;
  out.n_source = p.n_source;
  out.freqs.assign(p.freqs.begin() + static_cast<std::ptrdiff_t>(i0),
                   p.freqs.begin() + static_cast<std::ptrdiff_t>(i1));
  out.ordinates.assign(p.ordinates.begin() + static_cast<std::ptrdiff_t>(i0),
                       p.ordinates.begin() + static_cast<std::ptrdiff_t>(i1));
  return out;
}

}  // namespace psdcal
