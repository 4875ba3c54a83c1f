#pragma once

#include <Eigen/Dense>

#include <functional>

namespace psdcal {

struct OptimOptions {
  int max_iter = 1000;
  double ftol = 1e-10;       // relative decrease that counts as converged
  double gtol = 1e-8;        // gradient inf-norm that counts as converged
  double ftol_stop = 1e-14;  // keep polishing until decreases are this small
};

struct OptimResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  bool converged = false;
  int n_iter = 0;
};

// Residuals r(x) and Jacobian dr/dx stacked row-per-residual; the objective
// is sum r_i^2.
using ResidualFn =
    std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd& jac)>;

// Value and gradient of a smooth objective.
using ValueGradFn =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

// Levenberg-Marquardt style damped least squares (diagonal scaling).
OptimResult lm_minimize(const ResidualFn& fn, const Eigen::VectorXd& x0,
                        const OptimOptions& opts = {});

// BFGS with backtracking line search.
OptimResult bfgs_minimize(const ValueGradFn& fn, const Eigen::VectorXd& x0,
                          const OptimOptions& opts = {});

}  // namespace psdcal
