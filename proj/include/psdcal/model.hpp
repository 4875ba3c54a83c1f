#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace psdcal {

// Exact SI Boltzmann constant, rescaled so that k_B T / (k pi f0 Q) with
// k in N/m and f0 in Hz comes out in fm^2/Hz (1 m^2 = 1e30 fm^2).
inline constexpr double kBoltzmannFm2 = 1.380649e-23 * 1e30;

inline constexpr double kDefaultTemperature = 298.0;  // K

// Natural simple-harmonic-oscillator PSD parameters,
//   S(f) = A_w [+ A_f / f^alpha] + kB T / (k pi f0 Q)
//          / ( ((f/f0)^2 - 1)^2 + (f/(f0 Q))^2 ).
struct ShoParams {
  double k = 0.0;    // stiffness, N/m
  double f0 = 0.0;   // resonance frequency, Hz
  double Q = 0.0;    // quality factor
  double A_w = 0.0;  // white-noise floor, fm^2/Hz
  std::optional<double> A_f;    // 1/f amplitude, fm^2/Hz^(1-alpha)
  std::optional<double> alpha;  // 1/f exponent, in (0, 2)
  double T = kDefaultTemperature;  // K

  bool has_pink() const { return A_f.has_value(); }
};

void validate(const ShoParams& p);

// Appendix-style reparametrization S(f) = tau * G(f | eta) with
//   tau = kB T / (k pi f0 Q),  gamma = f0 Q,  R_w = A_w / tau,
//   G(f) = R_w [+ R_f / f^alpha] + 1 / ( ((f/f0)^2 - 1)^2 + (f/gamma)^2 ).
struct ProfiledParams {
  double tau = 0.0;    // fm^2/Hz
  double f0 = 0.0;     // Hz
  double gamma = 0.0;  // Hz
  double R_w = 0.0;
  std::optional<double> R_f;
  std::optional<double> alpha;
  double T = kDefaultTemperature;

  bool has_pink() const { return R_f.has_value(); }
};

void validate(const ProfiledParams& p);

ProfiledParams to_profiled(const ShoParams& p);
ShoParams to_sho(const ProfiledParams& p);

// PSD value in fm^2/Hz. Throws std::domain_error at f = 0 when the 1/f
// term is present.
double psd_eval(const ShoParams& p, double f);
double profiled_eval(const ProfiledParams& p, double f);

// Shape families over which tau is profiled out. eta is stored in natural
// (not log) values; layouts:
//   sho_white:      (f0, gamma, R_w)
//   sho_white_pink: (f0, gamma, R_w, R_f, alpha)
//   power_law:      (r, alpha)   with G = r + f^-alpha
struct PsdShape {
  enum class Kind { sho_white, sho_white_pink, power_law };
  Kind kind = Kind::sho_white;

  std::size_t n_eta() const;
  const char* eta_name(std::size_t i) const;

  // G(f | eta), strictly positive on valid input.
  double g(double f, const double* eta) const;

  // d log G / d log eta_i, written into out[0..n_eta).
  void dlogg_dlogeta(double f, const double* eta, double* out) const;
};

// Gradient of log G(f | eta) with respect to log-eta for the family
// implied by pp (sho_white or sho_white_pink).
std::vector<double> grad_log_g(const ProfiledParams& pp, double f);

}  // namespace psdcal
