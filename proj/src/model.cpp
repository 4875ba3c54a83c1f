#include "psdcal/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace psdcal {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// ((f/f0)^2 - 1)^2 + (f/gamma)^2
double sho_bracket(double f, double f0, double gamma) {
  const double u = (f / f0) * (f / f0) - 1.0;
  const double v = f / gamma;
  return u * u + v * v;
}

}  // namespace

void validate(const ShoParams& p) {
  require(p.k > 0.0, "ShoParams: k must be > 0");
  require(p.f0 > 0.0, "ShoParams: f0 must be > 0");
  require(p.Q > 0.0, "ShoParams: Q must be > 0");
  require(p.T > 0.0, "ShoParams: T must be > 0");
  require(p.A_w >= 0.0, "ShoParams: A_w must be >= 0");
  require(p.A_f.has_value() == p.alpha.has_value(),
          "ShoParams: A_f and alpha must be set together");
  if (p.A_f) {
    require(*p.A_f >= 0.0, "ShoParams: A_f must be >= 0");
    require(*p.alpha > 0.0 && *p.alpha < 2.0, "ShoParams: alpha must be in (0, 2)");
  }
}

void validate(const ProfiledParams& p) {
  require(p.tau > 0.0, "ProfiledParams: tau must be > 0");
  require(p.f0 > 0.0, "ProfiledParams: f0 must be > 0");
  require(p.gamma > 0.0, "ProfiledParams: gamma must be > 0");
  require(p.R_w > 0.0, "ProfiledParams: R_w must be > 0");
  require(p.T > 0.0, "ProfiledParams: T must be > 0");
  require(p.R_f.has_value() == p.alpha.has_value(),
          "ProfiledParams: R_f and alpha must be set together");
  if (p.R_f) {
    require(*p.R_f >= 0.0, "ProfiledParams: R_f must be >= 0");
    require(*p.alpha > 0.0 && *p.alpha < 2.0, "ProfiledParams: alpha must be in (0, 2)");
  }
}

ProfiledParams to_profiled(const ShoParams& p) {
  validate(p);
  ProfiledParams out;
  out.tau = kBoltzmannFm2 * p.T / (p.k * std::numbers::pi * p.f0 * p.Q);
  out.f0 = p.f0;
  out.gamma = p.f0 * p.Q;
  out.R_w = p.A_w / out.tau;
  if (p.A_f) {
    out.R_f = *p.A_f / out.tau;
    out.alpha = p.alpha;
  }
  out.T = p.T;
  return out;
}

ShoParams to_sho(const ProfiledParams& p) {
  ShoParams out;
  out.f0 = p.f0;
  out.Q = p.gamma / p.f0;
  out.k = kBoltzmannFm2 * p.T / (p.tau * std::numbers::pi * p.gamma);
  out.A_w = p.R_w * p.tau;
  if (p.R_f) {
    out.A_f = *p.R_f * p.tau;
    out.alpha = p.alpha;
  }
  out.T = p.T;
  return out;
}

double psd_eval(const ShoParams& p, double f) {
  if (p.has_pink() && !(f > 0.0))
    throw std::domain_error("psd_eval: f must be > 0 with a 1/f term");
  if (f < 0.0) throw std::domain_error("psd_eval: f must be >= 0");
  const double amp = kBoltzmannFm2 * p.T / (p.k * std::numbers::pi * p.f0 * p.Q);
  double s = p.A_w + amp / sho_bracket(f, p.f0, p.f0 * p.Q);
  if (p.has_pink()) s += *p.A_f * std::pow(f, -*p.alpha);
  return s;
}

double profiled_eval(const ProfiledParams& p, double f) {
  if (p.has_pink() && !(f > 0.0))
    throw std::domain_error("profiled_eval: f must be > 0 with a 1/f term");
  if (f < 0.0) throw std::domain_error("profiled_eval: f must be >= 0");
  double g = p.R_w + 1.0 / sho_bracket(f, p.f0, p.gamma);
  if (p.has_pink()) g += *p.R_f * std::pow(f, -*p.alpha);
  return p.tau * g;
}

std::size_t PsdShape::n_eta() const {
  switch (kind) {
    case Kind::sho_white: return 3;
    case Kind::sho_white_pink: return 5;
    case Kind::power_law: return 2;
  }
  return 0;
}

const char* PsdShape::eta_name(std::size_t i) const {
  static constexpr std::array<const char*, 5> sho{"f0", "gamma", "R_w", "R_f", "alpha"};
  static constexpr std::array<const char*, 2> pl{"r", "alpha"};
  return kind == Kind::power_law ? pl.at(i) : sho.at(i);
}

double PsdShape::g(double f, const double* eta) const {
  switch (kind) {
    case Kind::sho_white:
      return eta[2] + 1.0 / sho_bracket(f, eta[0], eta[1]);
    case Kind::sho_white_pink:
      return eta[2] + eta[3] * std::pow(f, -eta[4]) +
             1.0 / sho_bracket(f, eta[0], eta[1]);
    case Kind::power_law:
      return eta[0] + std::pow(f, -eta[1]);
  }
  return 0.0;
}

void PsdShape::dlogg_dlogeta(double f, const double* eta, double* out) const {
  if (kind == Kind::power_law) {
    const double r = eta[0], alpha = eta[1];
    const double pw = std::pow(f, -alpha);
    const double g = r + pw;
    out[0] = r / g;
    out[1] = -alpha * pw * std::log(f) / g;
    return;
  }
  const double f0 = eta[0], gamma = eta[1], rw = eta[2];
  const double u = (f / f0) * (f / f0);
  const double d = (u - 1.0) * (u - 1.0) + (f / gamma) * (f / gamma);
  const double l = 1.0 / d;
  // d/dlog f0 of 1/d: the bracket's first term depends on f0 only through u.
  const double dl_dlf0 = 4.0 * u * (u - 1.0) * l * l;
  const double dl_dlg = 2.0 * (f / gamma) * (f / gamma) * l * l;
  double g = rw + l;
  double pw = 0.0;
  if (kind == Kind::sho_white_pink) {
    pw = eta[3] * std::pow(f, -eta[4]);
    g += pw;
  }
  out[0] = dl_dlf0 / g;
  out[1] = dl_dlg / g;
  out[2] = rw / g;
  if (kind == Kind::sho_white_pink) {
    out[3] = pw / g;
    out[4] = -eta[4] * pw * std::log(f) / g;
  }
}

std::vector<double> grad_log_g(const ProfiledParams& pp, double f) {
  validate(pp);
  PsdShape shape{pp.has_pink() ? PsdShape::Kind::sho_white_pink
                               : PsdShape::Kind::sho_white};
  std::array<double, 5> eta{pp.f0, pp.gamma, pp.R_w,
                            pp.R_f.value_or(0.0), pp.alpha.value_or(1.0)};
  std::vector<double> out(shape.n_eta());
  shape.dlogg_dlogeta(f, eta.data(), out.data());
  return out;
}

}  // namespace psdcal
