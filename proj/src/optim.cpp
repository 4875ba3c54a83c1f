#include "psdcal/optim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace psdcal {

namespace {

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

OptimResult lm_minimize(const ResidualFn& fn, const Eigen::VectorXd& x0,
                        const OptimOptions& opts) {
  const auto n = x0.size();
  Eigen::VectorXd x = x0;
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  fn(x, r, jac);
  if (!finite(r)) throw std::invalid_argument("lm_minimize: non-finite residuals at start");
  double obj = r.squaredNorm();

  OptimResult out;
  double lambda = 1e-3;
  bool done = false;
  for (int iter = 1; iter <= opts.max_iter && !done; ++iter) {
    out.n_iter = iter;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = 2.0 * jac.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() < opts.gtol) {
      out.converged = true;
      break;
    }

    // Marquardt diagonal scaling; the floor keeps the system well posed when
    // a parameter momentarily has no influence.
    Eigen::VectorXd diag = jtj.diagonal();
    const double dmax = diag.maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i)
      diag[i] = std::max(diag[i], dmax > 0 ? 1e-12 * dmax : 1e-12);

    bool accepted = false;
    for (int tries = 0; tries < 60 && !accepted; ++tries) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      const Eigen::VectorXd step = a.ldlt().solve(-jac.transpose() * r);
      if (!finite(step)) {
        lambda *= 4.0;
        continue;
      }
      const Eigen::VectorXd xt = x + step;
      Eigen::VectorXd rt;
      Eigen::MatrixXd jt;
      double objt = std::numeric_limits<double>::infinity();
      try {
        fn(xt, rt, jt);
        if (finite(rt)) objt = rt.squaredNorm();
      } catch (const std::exception&) {
        // out-of-domain trial point; reject
      }
      if (objt < obj) {
        const double rel = (obj - objt) / std::max(obj, 1e-300);
        x = xt;
        r = std::move(rt);
        jac = std::move(jt);
        obj = objt;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (rel < opts.ftol) out.converged = true;
        if (rel < opts.ftol_stop) done = true;
      } else {
        lambda *= 4.0;
        if (lambda > 1e14) break;
      }
    }
    if (!accepted) {
      if ((2.0 * jac.transpose() * r).lpNorm<Eigen::Infinity>() < opts.gtol)
        out.converged = true;
      break;
    }
  }
  out.x = x;
  out.objective = obj;
  return out;
}

OptimResult bfgs_minimize(const ValueGradFn& fn, const Eigen::VectorXd& x0,
                          const OptimOptions& opts) {
  const auto n = x0.size();
  Eigen::VectorXd x = x0;
  Eigen::VectorXd grad(n);
  double obj = fn(x, grad);
  if (!std::isfinite(obj))
    throw std::invalid_argument("bfgs_minimize: non-finite objective at start");

  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  OptimResult out;
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    out.n_iter = iter;
    if (grad.lpNorm<Eigen::Infinity>() < opts.gtol) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd dir = -hinv * grad;
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {  // reset on a non-descent direction
      hinv.setIdentity();
      dir = -grad;
      slope = grad.dot(dir);
    }

    double t = 1.0;
    double objt = std::numeric_limits<double>::infinity();
    Eigen::VectorXd xt, gradt(n);
    bool ok = false;
    for (int ls = 0; ls < 60; ++ls) {
      xt = x + t * dir;
      try {
        objt = fn(xt, gradt);
      } catch (const std::exception&) {
        objt = std::numeric_limits<double>::infinity();
      }
      if (std::isfinite(objt) && objt <= obj + 1e-4 * t * slope) {
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) {
      out.converged = out.converged || grad.lpNorm<Eigen::Infinity>() < opts.gtol;
      break;
    }

    const Eigen::VectorXd s = xt - x;
    const Eigen::VectorXd y = gradt - grad;
    const double rel = (obj - objt) / std::max(std::abs(obj), 1e-300);
    x = std::move(xt);
    obj = objt;
    grad = gradt;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      hinv = (eye - rho * s * y.transpose()) * hinv * (eye - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }
    if (rel < opts.ftol) out.converged = true;
    if (rel < opts.ftol_stop) break;
  }
  out.x = x;
  out.objective = obj;
  return out;
}

}  // namespace psdcal
