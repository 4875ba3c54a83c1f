#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "psdcal/model.hpp"
#include "psdcal/optim.hpp"
#include "psdcal/types.hpp"

namespace psdcal {

enum class Method { nls, lp, mle };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct FitOptions {
  OptimOptions optim;      // reporting thresholds: ftol 1e-10, gtol 1e-8
  bool compute_se = true;  // populate cov via std_errors on convergence
  bool joint = false;      // optimize (tau, eta) jointly instead of profiling tau
};

struct FitResult {
  ShoParams theta;
  ProfiledParams profiled;
  Method method = Method::lp;
  bool converged = false;
  int n_iter = 0;
  double objective = 0.0;  // value of the method's own objective at the optimum
  std::pair<double, double> fitting_range{0.0, 0.0};
  std::optional<std::size_t> bin_size;
  std::size_t n_data = 0;
  // covariance over the reported parameters; empty until computed
  Eigen::MatrixXd cov;
  std::vector<std::string> cov_names;  // f0, Q, k, A_w [, A_f, alpha]
  std::string message;

  double se(const std::string& name) const;  // NaN when unavailable
};

// Closed-form profile of the scale parameter given shape values g (already
// fs-scaled) and data y:
//   NLS: sum(g y) / sum(g^2);  LP: exp(mean(log y - log g));  MLE: mean(y/g).
double profile_tau(Method m, const std::vector<double>& g, const std::vector<double>& y);

// The three fitting objectives evaluated at a full parameter point.
// NLS/LP expect binned data, MLE expects (in-range) raw ordinates.
double objective(Method m, const ProfiledParams& pp, const BinnedPeriodogram& data);
double objective(Method m, const ProfiledParams& pp, const Periodogram& data);

// Heuristic starting point: f0 from the binned peak, gamma from its
// half-power width, R_w from the outer 10% of bins. The sho-white family;
// extend_pink adds power-law terms for the 1/f model.
ProfiledParams default_init(const BinnedPeriodogram& data, double temperature,
                            bool extend_pink = false);
// Raw-data overload; bins internally for the heuristic.
ProfiledParams default_init(const Periodogram& in_range, double temperature,
                            bool extend_pink = false);

// Minimize the method's objective over eta with tau profiled out each
// evaluation (opts.joint switches to the full parametrization). init decides
// the family: with R_f/alpha present the 1/f model is fitted.
// Non-convergence is reported through FitResult, not thrown.
FitResult fit(Method m, const BinnedPeriodogram& data, const ProfiledParams& init,
              const FitOptions& opts = {});
FitResult fit(Method m, const Periodogram& data, const ProfiledParams& init,
              const FitOptions& opts = {});

// Observed-information / sandwich covariance over (f0, Q, k, A_w[, A_f, alpha]),
// via the delta method on the inverse reparametrization. Throws
// std::runtime_error on a singular or indefinite Hessian.
Eigen::MatrixXd std_errors(Method m, const FitResult& fit, const BinnedPeriodogram& data);
Eigen::MatrixXd std_errors(Method m, const FitResult& fit, const Periodogram& data);

struct TwoStepOptions {
  double f_split = 0.0;     // upper edge of the low-frequency window; 0 -> range_lo
  double range_lo = 0.0;    // SHO fitting window; both must be set
  double range_hi = 0.0;
  std::size_t bin_size = 100;
  std::size_t low_bin_size = 0;  // 0 -> adaptive
  Method method = Method::lp;
  FitOptions fit;
};

// Low-Q recipe for 1/f data: stage 1 estimates (A_f, alpha) by LP regression
// of c + A_f/f^alpha on the bins below the SHO window, stage 2 fits the SHO
// and white-noise parameters with the power-law term frozen.
FitResult fit_two_step_1f(const Periodogram& raw, const ProfiledParams& init,
                          const TwoStepOptions& opts);

}  // namespace psdcal
