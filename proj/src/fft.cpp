#include "psdcal/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace psdcal {

namespace {
// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

std::vector<std::complex<double>> real_dft_half(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("real_dft_half: need at least 2 samples");
  std::vector<double> in(x);
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw std::runtime_error("real_dft_half: FFTW planning failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

std::vector<double> inverse_real_dft_half(
    const std::vector<std::complex<double>>& spec, std::size_t n) {
  if (n < 2) throw std::invalid_argument("inverse_real_dft_half: need n >= 2");
  if (spec.size() != n / 2 + 1)
    throw std::invalid_argument("inverse_real_dft_half: spectrum size must be n/2 + 1");
  // c2r destroys its input, so work on a copy.
  std::vector<std::complex<double>> in(spec);
  std::vector<double> out(n);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(n),
                                reinterpret_cast<fftw_complex*>(in.data()),
                                out.data(), FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw std::runtime_error("inverse_real_dft_half: FFTW planning failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace psdcal
