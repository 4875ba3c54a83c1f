#include "psdcal/estimators.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>

#include "psdcal/spectral.hpp"

namespace psdcal {

namespace {

constexpr double kHessianStep = 1e-5;  // central differences in log-parameters

struct Prob {
  Method method = Method::lp;
  PsdShape shape;
  std::span<const double> f;
  std::span<const double> y;
  double fs = 0.0;
  std::vector<double> offset;  // fs-scaled frozen additive term, may be empty
  bool joint = false;
  // caches
  std::vector<double> logy;
  double y2 = 0.0;

  std::size_t n_eta() const { return shape.n_eta(); }
  std::size_t n_x() const { return n_eta() + (joint ? 1 : 0); }
  double off(std::size_t k) const { return offset.empty() ? 0.0 : offset[k]; }
};

Prob make_prob(Method m, std::span<const double> f, std::span<const double> y,
               double fs, PsdShape shape, bool joint) {
  Prob p;
  p.method = m;
  p.shape = shape;
  p.f = f;
  p.y = y;
  p.fs = fs;
  p.joint = joint;
  if (m != Method::nls) {
    p.logy.resize(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) {
      if (!(y[k] > 0.0))
        throw std::domain_error("fit: LP/MLE require strictly positive ordinates");
      p.logy[k] = std::log(y[k]);
    }
  }
  for (double v : y) p.y2 += v * v;
  if (p.y2 <= 0.0 && m == Method::nls)
    throw std::domain_error("fit: all-zero ordinates");
  return p;
}

void shape_values(const Prob& p, const double* eta, std::vector<double>& g) {
  g.resize(p.f.size());
  for (std::size_t k = 0; k < p.f.size(); ++k) {
    g[k] = p.fs * p.shape.g(p.f[k], eta);
    if (!(g[k] > 0.0) || !std::isfinite(g[k]))
      throw std::domain_error("fit: non-positive model value");
  }
}

double profile_tau_impl(Method m, const std::vector<double>& g,
                        std::span<const double> y, const std::vector<double>& logy) {
  const std::size_t n = g.size();
  switch (m) {
    case Method::nls: {
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        num += g[k] * y[k];
        den += g[k] * g[k];
      }
      if (!(den > 0.0)) throw std::domain_error("profile_tau: zero denominator");
      return num / den;
    }
    case Method::lp: {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += logy[k] - std::log(g[k]);
      return std::exp(s / static_cast<double>(n));
    }
    case Method::mle: {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += y[k] / g[k];
      if (!(s > 0.0)) throw std::domain_error("profile_tau: zero ratio sum");
      return s / static_cast<double>(n);
    }
  }
  throw std::logic_error("profile_tau: bad method");
}

// tau for the current eta: profiled closed form, or taken from x in joint mode.
double current_tau(const Prob& p, const Eigen::VectorXd& x, const std::vector<double>& g) {
  if (p.joint) return std::exp(x[static_cast<Eigen::Index>(p.n_eta())]);
  return profile_tau_impl(p.method, g, p.y, p.logy);
}

// Unscaled objective in the paper's form at a full (tau, eta) point.
double raw_objective(const Prob& p, double tau, const std::vector<double>& g) {
  double obj = 0.0;
  for (std::size_t k = 0; k < p.f.size(); ++k) {
    const double model = p.off(k) + tau * g[k];
    if (!(model > 0.0)) throw std::domain_error("objective: non-positive model value");
    switch (p.method) {
      case Method::nls: {
        const double r = p.y[k] - model;
        obj += r * r;
        break;
      }
      case Method::lp: {
        const double r = p.logy[k] - std::log(model);
        obj += r * r;
        break;
      }
      case Method::mle:
        obj += p.y[k] / model + std::log(model);
        break;
    }
  }
  return obj;
}

void decode_eta(const Prob& p, const Eigen::VectorXd& x, std::array<double, 6>& eta) {
  for (std::size_t i = 0; i < p.n_eta(); ++i) eta[i] = std::exp(x[static_cast<Eigen::Index>(i)]);
}

// Residuals and Jacobian in log-parameters for the two least-squares forms.
// In profiled mode tau is held fixed at its closed-form value (the gradient
// J^T r is still exact there by the envelope argument).
void residuals(const Prob& p, const Eigen::VectorXd& x, Eigen::VectorXd& r,
               Eigen::MatrixXd& jac) {
  std::array<double, 6> eta{};
  decode_eta(p, x, eta);
  std::vector<double> g;
  shape_values(p, eta.data(), g);
  const double tau = current_tau(p, x, g);
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::domain_error("fit: non-positive tau");

  const std::size_t n = p.f.size();
  const std::size_t m = p.n_eta();
  const double nls_scale = 1.0 / std::sqrt(p.y2);
  r.resize(static_cast<Eigen::Index>(n));
  jac.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p.n_x()));
  std::array<double, 6> dg{};
  for (std::size_t k = 0; k < n; ++k) {
    p.shape.dlogg_dlogeta(p.f[k], eta.data(), dg.data());
    const double tg = tau * g[k];
    const double model = p.off(k) + tg;
    if (!(model > 0.0)) throw std::domain_error("fit: non-positive model value");
    if (p.method == Method::nls) {
      r[static_cast<Eigen::Index>(k)] = (p.y[k] - model) * nls_scale;
      for (std::size_t i = 0; i < m; ++i)
        jac(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
            -tg * dg[i] * nls_scale;
      if (p.joint)
        jac(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) = -tg * nls_scale;
    } else {
      r[static_cast<Eigen::Index>(k)] = p.logy[k] - std::log(model);
      const double w = tg / model;
      for (std::size_t i = 0; i < m; ++i)
        jac(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = -w * dg[i];
      if (p.joint) jac(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) = -w;
    }
  }
}

// Whittle objective (per-datum scaled) and gradient in log-parameters.
double whittle_value_grad(const Prob& p, const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
  std::array<double, 6> eta{};
  decode_eta(p, x, eta);
  std::vector<double> g;
  shape_values(p, eta.data(), g);
  const double tau = current_tau(p, x, g);
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::domain_error("fit: non-positive tau");

  const std::size_t n = p.f.size();
  const std::size_t m = p.n_eta();
  const double scale = 1.0 / static_cast<double>(n);
  grad.setZero(static_cast<Eigen::Index>(p.n_x()));
  double obj = 0.0;
  std::array<double, 6> dg{};
  for (std::size_t k = 0; k < n; ++k) {
    p.shape.dlogg_dlogeta(p.f[k], eta.data(), dg.data());
    const double tg = tau * g[k];
    const double model = p.off(k) + tg;
    if (!(model > 0.0)) throw std::domain_error("fit: non-positive model value");
    obj += p.y[k] / model + std::log(model);
    const double c = (1.0 - p.y[k] / model) * (tg / model);
    for (std::size_t i = 0; i < m; ++i)
      grad[static_cast<Eigen::Index>(i)] += c * dg[i];
    if (p.joint) grad[static_cast<Eigen::Index>(m)] += c;
  }
  grad *= scale;
  return obj * scale;
}

Eigen::VectorXd pack_init(const Prob& p, const ProfiledParams& init) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(p.n_x()));
  x[0] = std::log(init.f0);
  x[1] = std::log(init.gamma);
  x[2] = std::log(init.R_w);
  if (p.shape.kind == PsdShape::Kind::sho_white_pink) {
    x[3] = std::log(std::max(*init.R_f, 1e-300));
    x[4] = std::log(*init.alpha);
  }
  if (p.joint) x[static_cast<Eigen::Index>(p.n_eta())] = std::log(init.tau);
  return x;
}

FitResult run_fit(Prob& p, const ProfiledParams& init, const FitOptions& opts,
                  std::pair<double, double> range, std::optional<std::size_t> bin_size);

// Shared fit driver once the data spans are known.
FitResult fit_impl(Method m, std::span<const double> f, std::span<const double> y,
                   double fs, const ProfiledParams& init, const FitOptions& opts,
                   std::optional<std::size_t> bin_size,
                   std::vector<double> offset = {}) {
  validate(init);
  PsdShape shape{init.has_pink() ? PsdShape::Kind::sho_white_pink
                                 : PsdShape::Kind::sho_white};
  Prob p = make_prob(m, f, y, fs, shape, opts.joint || !offset.empty());
  p.offset = std::move(offset);
  return run_fit(p, init, opts, {f.front(), f.back()}, bin_size);
}

ProfiledParams decode_result(const Prob& p, const Eigen::VectorXd& x, double temperature) {
  std::array<double, 6> eta{};
  decode_eta(p, x, eta);
  std::vector<double> g;
  shape_values(p, eta.data(), g);
  ProfiledParams pp;
  pp.f0 = eta[0];
  pp.gamma = eta[1];
  pp.R_w = eta[2];
  if (p.shape.kind == PsdShape::Kind::sho_white_pink) {
    pp.R_f = eta[3];
    pp.alpha = eta[4];
  }
  pp.tau = current_tau(p, x, g);
  pp.T = temperature;
  return pp;
}

Eigen::MatrixXd covariance_impl(const Prob& p, const ProfiledParams& pp,
                                std::optional<std::size_t> bin_size);

FitResult run_fit(Prob& p, const ProfiledParams& init, const FitOptions& opts,
                  std::pair<double, double> range, std::optional<std::size_t> bin_size) {
  FitResult out;
  out.method = p.method;
  out.fitting_range = range;
  out.bin_size = bin_size;
  out.n_data = p.f.size();

  const Eigen::VectorXd x0 = pack_init(p, init);
  OptimResult res;
  try {
    if (p.method == Method::mle) {
      res = bfgs_minimize(
          [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
            return whittle_value_grad(p, x, grad);
          },
          x0, opts.optim);
    } else {
      res = lm_minimize(
          [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
            residuals(p, x, r, jac);
          },
          x0, opts.optim);
    }
  } catch (const std::domain_error&) {
    throw;  // bad data/init, caller's problem
  }

  out.converged = res.converged;
  out.n_iter = res.n_iter;
  try {
    out.profiled = decode_result(p, res.x, init.T);
    validate(out.profiled);
    out.theta = to_sho(out.profiled);
    validate(out.theta);
  } catch (const std::exception& e) {
    out.converged = false;
    out.message = std::string("estimate outside the valid domain: ") + e.what();
    return out;
  }

  // report the objective in the paper's (unscaled) form
  {
    std::array<double, 6> eta{};
    decode_eta(p, res.x, eta);
    std::vector<double> g;
    shape_values(p, eta.data(), g);
    out.objective = raw_objective(p, out.profiled.tau, g);
  }

  if (out.converged && opts.compute_se) {
    try {
      out.cov = covariance_impl(p, out.profiled, bin_size);
      out.cov_names = {"f0", "Q", "k", "A_w"};
      if (p.shape.kind == PsdShape::Kind::sho_white_pink) {
        out.cov_names.push_back("A_f");
        out.cov_names.push_back("alpha");
      }
    } catch (const std::exception& e) {
      out.message = std::string("standard errors unavailable: ") + e.what();
    }
  }
  return out;
}

// Numeric Hessian (central differences, step 1e-5) of fn over log-psi.
Eigen::MatrixXd numeric_hessian(const std::function<double(const Eigen::VectorXd&)>& fn,
                                const Eigen::VectorXd& x) {
  const auto n = x.size();
  const double h = kHessianStep;
  Eigen::MatrixXd hess(n, n);
  const double f0 = fn(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    hess(i, i) = (fn(xp) - 2.0 * f0 + fn(xm)) / (h * h);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
      xpp[i] += h; xpp[j] += h;
      xpm[i] += h; xpm[j] -= h;
      xmp[i] -= h; xmp[j] += h;
      xmm[i] -= h; xmm[j] -= h;
      hess(i, j) = hess(j, i) = (fn(xpp) - fn(xpm) - fn(xmp) + fn(xmm)) / (4.0 * h * h);
    }
  }
  return hess;
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const auto& vals = es.eigenvalues();
  if (!(vals.minCoeff() > 1e-12 * std::max(vals.maxCoeff(), 0.0)))
    throw std::runtime_error(std::string("degenerate covariance: ") + what);
  return es.eigenvectors() * vals.cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

// Covariance over the reported natural parameters at the fitted point.
// psi = (tau, eta) in logs; LP uses B * Hess(Q_LP / 2), MLE the Whittle
// Hessian, NLS the sandwich A^-1 C A^-1.
Eigen::MatrixXd covariance_impl(const Prob& p, const ProfiledParams& pp,
                                std::optional<std::size_t> bin_size) {
  const std::size_t m = p.n_eta();
  const std::size_t d = m + 1;
  Eigen::VectorXd psi(static_cast<Eigen::Index>(d));
  psi[0] = std::log(pp.tau);
  psi[1] = std::log(pp.f0);
  psi[2] = std::log(pp.gamma);
  psi[3] = std::log(pp.R_w);
  if (p.shape.kind == PsdShape::Kind::sho_white_pink) {
    psi[4] = std::log(*pp.R_f);
    psi[5] = std::log(*pp.alpha);
  }

  const auto eval = [&](const Eigen::VectorXd& lpsi) {
    std::array<double, 6> eta{};
    for (std::size_t i = 0; i < m; ++i) eta[i] = std::exp(lpsi[static_cast<Eigen::Index>(i + 1)]);
    std::vector<double> g;
    shape_values(p, eta.data(), g);
    const double q = raw_objective(p, std::exp(lpsi[0]), g);
    return p.method == Method::mle ? q : 0.5 * q;
  };

  Eigen::MatrixXd cov_psi;
  if (p.method == Method::mle) {
    cov_psi = spd_inverse(numeric_hessian(eval, psi), "Whittle Hessian");
  } else if (p.method == Method::lp) {
    if (!bin_size) throw std::runtime_error("LP standard errors need binned data");
    const double b = static_cast<double>(*bin_size);
    cov_psi = spd_inverse(b * numeric_hessian(eval, psi), "LP information");
  } else {
    // sandwich: per-bin score contributions around the weighted Hessian
    const Eigen::MatrixXd a = numeric_hessian(eval, psi);
    std::array<double, 6> eta{};
    for (std::size_t i = 0; i < m; ++i) eta[i] = std::exp(psi[static_cast<Eigen::Index>(i + 1)]);
    std::vector<double> g;
    shape_values(p, eta.data(), g);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                              static_cast<Eigen::Index>(d));
    std::array<double, 6> dg{};
    Eigen::VectorXd score(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < p.f.size(); ++k) {
      p.shape.dlogg_dlogeta(p.f[k], eta.data(), dg.data());
      const double tg = pp.tau * g[k];
      const double resid = p.y[k] - (p.off(k) + tg);
      score[0] = resid * tg;
      for (std::size_t i = 0; i < m; ++i)
        score[static_cast<Eigen::Index>(i + 1)] = resid * tg * dg[i];
      c += score * score.transpose();
    }
    const Eigen::MatrixXd ainv = spd_inverse(a, "NLS Hessian");
    cov_psi = ainv * c * ainv;
  }

  // delta method onto (f0, Q, k, A_w[, A_f, alpha])
  const ShoParams th = to_sho(pp);
  const std::size_t nrep = p.shape.kind == PsdShape::Kind::sho_white_pink ? 6 : 4;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nrep),
                                              static_cast<Eigen::Index>(d));
  jac(0, 1) = th.f0;                       // f0 = exp(log f0)
  jac(1, 1) = -th.Q; jac(1, 2) = th.Q;     // Q = gamma / f0
  jac(2, 0) = -th.k; jac(2, 2) = -th.k;    // k = C / (tau gamma)
  jac(3, 0) = th.A_w; jac(3, 3) = th.A_w;  // A_w = R_w tau
  if (nrep == 6) {
    jac(4, 0) = *th.A_f; jac(4, 4) = *th.A_f;  // A_f = R_f tau
    jac(5, 5) = *th.alpha;
  }
  return jac * cov_psi * jac.transpose();
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 0) {
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
  }
  return hi;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::nls: return "NLS";
    case Method::lp: return "LP";
    case Method::mle: return "MLE";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  std::string s;
  for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "nls") return Method::nls;
  if (s == "lp") return Method::lp;
  if (s == "mle" || s == "whittle") return Method::mle;
  throw std::invalid_argument("unknown method: " + name);
}

double FitResult::se(const std::string& name) const {
  for (std::size_t i = 0; i < cov_names.size(); ++i)
    if (cov_names[i] == name && cov.rows() > static_cast<Eigen::Index>(i))
      return std::sqrt(std::max(cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)), 0.0));
  return std::numeric_limits<double>::quiet_NaN();
}

double profile_tau(Method m, const std::vector<double>& g, const std::vector<double>& y) {
  if (g.size() != y.size() || g.empty())
    throw std::invalid_argument("profile_tau: size mismatch");
  std::vector<double> logy;
  if (m == Method::lp) {
    logy.resize(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) {
      if (!(y[k] > 0.0)) throw std::domain_error("profile_tau: LP needs positive data");
      logy[k] = std::log(y[k]);
    }
  }
  for (double v : g)
    if (!(v > 0.0)) throw std::domain_error("profile_tau: non-positive shape value");
  return profile_tau_impl(m, g, y, logy);
}

namespace {

double objective_impl(Method m, const ProfiledParams& pp, std::span<const double> f,
                      std::span<const double> y, double fs) {
  validate(pp);
  PsdShape shape{pp.has_pink() ? PsdShape::Kind::sho_white_pink
                               : PsdShape::Kind::sho_white};
  Prob p = make_prob(m, f, y, fs, shape, false);
  std::array<double, 6> eta{pp.f0, pp.gamma, pp.R_w, pp.R_f.value_or(0.0),
                            pp.alpha.value_or(1.0), 0.0};
  std::vector<double> g;
  shape_values(p, eta.data(), g);
  return raw_objective(p, pp.tau, g);
}

}  // namespace

double objective(Method m, const ProfiledParams& pp, const BinnedPeriodogram& data) {
  validate(data);
  if (m == Method::mle)
    throw std::invalid_argument("objective: the Whittle form expects unbinned data");
  return objective_impl(m, pp, data.bin_freqs, data.bin_means, data.fs);
}

double objective(Method m, const ProfiledParams& pp, const Periodogram& data) {
  validate(data);
  if (m != Method::mle)
    throw std::invalid_argument("objective: NLS/LP expect binned data");
  return objective_impl(m, pp, data.freqs, data.ordinates, data.fs);
}

ProfiledParams default_init(const BinnedPeriodogram& data, double temperature,
                            bool extend_pink) {
  validate(data);
  const auto& f = data.bin_freqs;
  const auto& y = data.bin_means;
  const std::size_t n = y.size();

  const std::size_t ipk =
      static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double f0g = f[ipk];
  const double peak = y[ipk];

  // half-power width around the peak, floored at one bin spacing
  const double half = peak / 2.0;
  std::size_t right = ipk;
  while (right + 1 < n && y[right] > half) ++right;
  std::size_t left = ipk;
  while (left > 0 && y[left] > half) --left;
  const double spacing = n > 1 ? f[1] - f[0] : f0g;
  const double width = std::max(f[right] - f[left], spacing);
  const double qg = std::clamp(f0g / width, 0.5, 1e4);

  // floor from the outer 10% of bins on each side
  const std::size_t nout = std::max<std::size_t>(n / 10, 1);
  std::vector<double> outer;
  outer.insert(outer.end(), y.begin(), y.begin() + static_cast<std::ptrdiff_t>(std::min(nout, n)));
  outer.insert(outer.end(), y.end() - static_cast<std::ptrdiff_t>(std::min(nout, n)), y.end());
  const double floor_level = std::max(median_of(outer), peak * 1e-12);

  ProfiledParams pp;
  pp.f0 = f0g;
  pp.gamma = f0g * qg;
  const double tau_scale = std::max((peak - floor_level), peak * 1e-3) / data.fs / (qg * qg);
  pp.tau = tau_scale;
  pp.R_w = std::clamp(floor_level / data.fs / tau_scale, 1e-8, 1e12);
  pp.T = temperature;

  if (extend_pink) {
    // slope of the lowest 20% of bins in log-log sets the exponent guess
    const std::size_t nlow = std::max<std::size_t>(n / 5, 2);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < nlow; ++i) {
      const double lx = std::log(f[i]);
      const double ly = std::log(std::max(y[i], peak * 1e-15));
      sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double nb = static_cast<double>(nlow);
    const double slope = (nb * sxy - sx * sy) / std::max(nb * sxx - sx * sx, 1e-12);
    const double alpha0 = std::clamp(-slope, 0.1, 1.9);
    const double excess = std::max(y.front() / data.fs - floor_level / data.fs,
                                   0.05 * floor_level / data.fs);
    const double af0 = excess * std::pow(f.front(), alpha0);
    pp.R_f = std::max(af0 / tau_scale, 1e-12);
    pp.alpha = alpha0;
  }
  return pp;
}

ProfiledParams default_init(const Periodogram& in_range, double temperature,
                            bool extend_pink) {
  validate(in_range);
  const std::size_t k = in_range.ordinates.size();
  const std::size_t b = std::max<std::size_t>(1, std::min<std::size_t>(100, k / 8));
  return default_init(bin(in_range, b), temperature, extend_pink);
}

FitResult fit(Method m, const BinnedPeriodogram& data, const ProfiledParams& init,
              const FitOptions& opts) {
  validate(data);
  if (m == Method::mle)
    throw std::invalid_argument("fit: the Whittle MLE expects unbinned data");
  FitResult r = fit_impl(m, data.bin_freqs, data.bin_means, data.fs, init, opts,
                         data.bin_size);
  return r;
}

FitResult fit(Method m, const Periodogram& data, const ProfiledParams& init,
              const FitOptions& opts) {
  validate(data);
  if (m != Method::mle)
    throw std::invalid_argument("fit: NLS/LP expect binned data");
  return fit_impl(m, data.freqs, data.ordinates, data.fs, init, opts, std::nullopt);
}

Eigen::MatrixXd std_errors(Method m, const FitResult& fit, const BinnedPeriodogram& data) {
  validate(data);
  if (!fit.converged) throw std::invalid_argument("std_errors: fit did not converge");
  PsdShape shape{fit.profiled.has_pink() ? PsdShape::Kind::sho_white_pink
                                         : PsdShape::Kind::sho_white};
  Prob p = make_prob(m, data.bin_freqs, data.bin_means, data.fs, shape, false);
  // two-step results carry a frozen power-law term in theta only
  if (!fit.profiled.has_pink() && fit.theta.has_pink()) {
    p.offset.resize(data.bin_freqs.size());
    for (std::size_t k = 0; k < p.offset.size(); ++k)
      p.offset[k] = data.fs * *fit.theta.A_f * std::pow(data.bin_freqs[k], -*fit.theta.alpha);
  }
  return covariance_impl(p, fit.profiled, data.bin_size);
}

Eigen::MatrixXd std_errors(Method m, const FitResult& fit, const Periodogram& data) {
  validate(data);
  if (!fit.converged) throw std::invalid_argument("std_errors: fit did not converge");
  PsdShape shape{fit.profiled.has_pink() ? PsdShape::Kind::sho_white_pink
                                         : PsdShape::Kind::sho_white};
  Prob p = make_prob(m, data.freqs, data.ordinates, data.fs, shape, false);
  if (!fit.profiled.has_pink() && fit.theta.has_pink()) {
    p.offset.resize(data.freqs.size());
    for (std::size_t k = 0; k < p.offset.size(); ++k)
      p.offset[k] = data.fs * *fit.theta.A_f * std::pow(data.freqs[k], -*fit.theta.alpha);
  }
  return covariance_impl(p, fit.profiled, std::nullopt);
}

namespace {

// Stage 1 of the low-Q recipe: LP fit of fs*(c + A_f f^-alpha) to the
// low-frequency bins, with the overall scale profiled out.
struct PowerLawFit {
  double A_f = 0.0;
  double alpha = 0.0;
  double c = 0.0;
  bool converged = false;
};

PowerLawFit fit_power_law(const BinnedPeriodogram& low, const OptimOptions& optim) {
  const auto& f = low.bin_freqs;
  const auto& y = low.bin_means;
  PsdShape shape{PsdShape::Kind::power_law};
  Prob p = make_prob(Method::lp, f, y, low.fs, shape, false);

  // slope-based initial exponent, endpoint-based initial amplitude split
  const std::size_t n = f.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(f[i]);
    const double ly = std::log(y[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  const double nn = static_cast<double>(n);
  const double slope = (nn * sxy - sx * sy) / std::max(nn * sxx - sx * sx, 1e-12);
  const double alpha0 = std::clamp(-slope, 0.05, 1.9);
  const double plo = std::pow(f.front(), -alpha0);
  const double phi = std::pow(f.back(), -alpha0);
  const double ylo = y.front() / low.fs;
  const double yhi = y.back() / low.fs;
  double af0 = (ylo - yhi) / std::max(plo - phi, 1e-300);
  af0 = std::max(af0, 1e-6 * ylo / plo);
  const double c0 = std::max(yhi - af0 * phi, 1e-6 * yhi);
  Eigen::VectorXd x0(2);
  x0[0] = std::log(c0 / af0);
  x0[1] = std::log(alpha0);

  OptimResult res = lm_minimize(
      [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
        residuals(p, x, r, jac);
      },
      x0, optim);

  std::array<double, 6> eta{};
  eta[0] = std::exp(res.x[0]);
  eta[1] = std::exp(res.x[1]);
  std::vector<double> g;
  shape_values(p, eta.data(), g);
  PowerLawFit out;
  out.A_f = profile_tau_impl(Method::lp, g, p.y, p.logy);
  out.alpha = eta[1];
  out.c = eta[0] * out.A_f;
  out.converged = res.converged;
  return out;
}

}  // namespace

FitResult fit_two_step_1f(const Periodogram& raw, const ProfiledParams& init,
                          const TwoStepOptions& opts) {
  validate(raw);
  validate(init);
  if (!(opts.range_lo > 0.0) || !(opts.range_hi > opts.range_lo))
    throw std::invalid_argument("fit_two_step_1f: fitting range must be set");
  const double split = opts.f_split > 0.0 ? opts.f_split : opts.range_lo;
  if (!(split > raw.freqs.front()))
    throw std::invalid_argument("fit_two_step_1f: no data below the SHO window");

  // stage 1: power-law level from the low-frequency bins
  const Periodogram low = select_range(raw, raw.freqs.front(), split);
  const std::size_t klow = low.ordinates.size();
  std::size_t blow = opts.low_bin_size;
  if (blow == 0) blow = std::max<std::size_t>(1, std::min(opts.bin_size, klow / 8));
  if (blow > klow) blow = klow;
  const PowerLawFit stage1 = fit_power_law(bin(low, blow), opts.fit.optim);
  double alpha_hat = std::clamp(stage1.alpha, 1e-3, 2.0 - 1e-3);
  const double af_hat = std::max(stage1.A_f, 0.0);

  // stage 2: SHO + white fit with the power-law term frozen into the model
  const Periodogram in = select_range(raw, opts.range_lo, opts.range_hi);
  ProfiledParams init2 = init;
  init2.R_f.reset();
  init2.alpha.reset();
  FitOptions fopts = opts.fit;
  fopts.joint = true;  // the frozen offset breaks the closed-form tau profile

  FitResult result;
  if (opts.method == Method::mle) {
    std::vector<double> offset(in.freqs.size());
    for (std::size_t k = 0; k < offset.size(); ++k)
      offset[k] = in.fs * af_hat * std::pow(in.freqs[k], -alpha_hat);
    result = fit_impl(Method::mle, in.freqs, in.ordinates, in.fs, init2, fopts,
                      std::nullopt, std::move(offset));
  } else {
    const BinnedPeriodogram binned = bin(in, opts.bin_size);
    std::vector<double> offset(binned.bin_freqs.size());
    for (std::size_t k = 0; k < offset.size(); ++k)
      offset[k] = binned.fs * af_hat * std::pow(binned.bin_freqs[k], -alpha_hat);
    result = fit_impl(opts.method, binned.bin_freqs, binned.bin_means, binned.fs,
                      init2, fopts, binned.bin_size, std::move(offset));
  }
  result.theta.A_f = af_hat;
  result.theta.alpha = alpha_hat;
  if (!stage1.converged)
    result.message += (result.message.empty() ? "" : "; ") + std::string("stage-1 power-law fit did not converge");
  return result;
}

}  // namespace psdcal
