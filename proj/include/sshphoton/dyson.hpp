#pragma once

// Analytic single-emitter theory: noise-averaged retarded Green's function
//   G(w) = 1 / (hbar w - Sigma),
// with the self-energy from the lowest-order Dyson term or from the
// self-consistent fixed point
//   Sigma = int dw/(2 pi) F~(w) / (hbar w - Sigma).
// The spectrum S(w) = -Im G / pi is a Lorentzian of FWHM -2 Im Sigma.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "sshphoton/errors.hpp"
#include "sshphoton/noise.hpp"
#include "sshphoton/units.hpp"

namespace sshphoton {

enum class SelfEnergyMethod { lowest_order, self_consistent };

struct SelfEnergy {
  std::complex<double> value;  // meV
  SelfEnergyMethod method = SelfEnergyMethod::lowest_order;
  int iterations = 0;
  bool converged = true;

  double linewidth() const { return -2.0 * value.imag(); }
};

/// Sigma = -i eps^2 tau sqrt(pi) / (hbar sqrt 2), i.e. FWHM eps^2 tau sqrt(2 pi) / hbar.
inline SelfEnergy self_energy_lowest_order(double epsilon, double tau) {
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  SelfEnergy s;
  s.value = {0.0, -epsilon * epsilon * tau * std::sqrt(pi) / (hbar * std::sqrt(2.0))};
  s.method = SelfEnergyMethod::lowest_order;
  return s;
}

struct DysonOptions {
  std::complex<double> init{0.0, -1e-5};  // meV
  double tol = 1e-5;                      // meV, on |Sigma_{n+1} - Sigma_n|
  int max_iter = 100;
  double mixing = 0.5;         // Sigma <- (1 - mixing) Sigma + mixing * RHS
  double omega_cutoff = 12.0;  // integrate |w| <= omega_cutoff / tau
  double quad_tol = 1e-12;     // relative tolerance of the adaptive quadrature
};

/// One application of the right-hand side. The substitution
/// hbar w = Re(Sigma) - Im(Sigma) tan(u) maps the near-pole Lorentzian factor
/// to a flat measure, so adaptive Gauss-Kronrod on u resolves it for any
/// |Im Sigma|, including the tiny initial guess.
inline std::complex<double> dyson_rhs(double epsilon, double tau, std::complex<double> sigma,
                                      const DysonOptions& opt = {}) {
  const double x = sigma.real();
  const double y = -sigma.imag();
  if (!(y > 0.0)) throw NumericalError("self-energy left the lower half plane (Im Sigma >= 0)");
  const double w_max = opt.omega_cutoff / tau;
  const double u_lo = std::atan((-hbar * w_max - x) / y);
  const double u_hi = std::atan((hbar * w_max - x) / y);
  // dw / (hbar w - Sigma) = (tan u - i) du / hbar
  const auto f_of_u = [&](double u) {
    const double w = (x + y * std::tan(u)) / hbar;
    return spectral_density(epsilon, tau, w);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  const double re = GK::integrate([&](double u) { return f_of_u(u) * std::tan(u); }, u_lo, u_hi, 20, opt.quad_tol);
  const double im = GK::integrate(f_of_u, u_lo, u_hi, 20, opt.quad_tol);
  return std::complex<double>(re, -im) / (2.0 * pi * hbar);
}

struct DysonTrace {
  std::vector<std::complex<double>> iterates;  // iterates[0] = init
};

/// Damped fixed-point iteration of the self-consistent Dyson equation.
/// Throws NumericalError on non-convergence or if an iterate becomes unphysical.
inline SelfEnergy self_energy_self_consistent(double epsilon, double tau, const DysonOptions& opt = {},
                                              DysonTrace* trace = nullptr) {
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (opt.init.imag() > 0.0) throw ConfigError("initial self-energy must have Im <= 0");
  if (!(opt.tol > 0.0)) throw ConfigError("tol must be positive");
  if (!(opt.mixing > 0.0 && opt.mixing <= 1.0)) throw ConfigError("mixing must lie in (0, 1]");

  SelfEnergy s;
  s.method = SelfEnergyMethod::self_consistent;
  s.converged = false;
  if (trace) trace->iterates = {opt.init};
  if (epsilon == 0.0) {
    s.value = 0.0;
    s.iterations = 1;
    s.converged = true;
    if (trace) trace->iterates.push_back(s.value);
    return s;
  }
  std::complex<double> sigma = opt.init;
  if (sigma.imag() == 0.0) sigma.imag(-1e-12);
  for (int it = 1; it <= opt.max_iter; ++it) {
    const auto rhs = dyson_rhs(epsilon, tau, sigma, opt);
    const auto next = (1.0 - opt.mixing) * sigma + opt.mixing * rhs;
    if (!(next.imag() < 0.0)) throw NumericalError("self-energy iterate crossed into Im Sigma >= 0");
    const double change = std::abs(next - sigma);
    sigma = next;
    if (trace) trace->iterates.push_back(sigma);
    if (change < opt.tol) {
      s.value = sigma;
      s.iterations = it;
      s.converged = true;
      return s;
    }
  }
  throw NumericalError("self-consistent Dyson iteration did not converge in " + std::to_string(opt.max_iter) +
                       " iterations");
}

/// S(E) = (1/pi) (-Im Sigma) / ((E - Re Sigma)^2 + (Im Sigma)^2), E = hbar w in meV.
inline std::vector<double> lorentzian_spectrum(const SelfEnergy& sigma, std::span<const double> energies) {
  const double g = -sigma.value.imag();
  if (!(g > 0.0)) throw ConfigError("Lorentzian spectrum needs Im Sigma < 0");
  std::vector<double> s(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i) {
    const double d = energies[i] - sigma.value.real();
    s[i] = g / (pi * (d * d + g * g));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Exact single-emitter line for Gaussian noise
// ---------------------------------------------------------------------------

/// phi(s) = (1/(2 hbar^2)) int_0^s int_0^s F(u - v) du dv, so that
/// <a*(t) a(t + s)> = exp(-phi(|s|)) for a(t) = exp(-(i/hbar) int eps).
inline double phase_variance(double epsilon, double tau, double s) {
  s = std::abs(s);
  const double inner = s * tau * std::sqrt(pi / 2.0) * std::erf(s / (tau * std::sqrt(2.0))) -
                       tau * tau * (1.0 - std::exp(-s * s / (2.0 * tau * tau)));
  return epsilon * epsilon * inner / (hbar * hbar);
}

/// S(E) = (1/(pi hbar)) int_0^inf exp(-phi(s)) cos(E s / hbar) ds, the
/// infinite-window limit of the realization-averaged emission spectrum.
inline std::vector<double> cumulant_spectrum(double epsilon, double tau, std::span<const double> energies) {
  if (!(epsilon > 0.0)) throw ConfigError("cumulant spectrum needs epsilon > 0");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  // exp(-phi) < 1e-17 beyond s_max.
  double s_max = tau;
  while (phase_variance(epsilon, tau, s_max) < 40.0) s_max *= 1.5;
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  std::vector<double> out(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i) {
    const double e = energies[i];
    const auto f = [&](double s) { return std::exp(-phase_variance(epsilon, tau, s)) * std::cos(e * s / hbar); };
    out[i] = GK::integrate(f, 0.0, s_max, 30, 1e-12) / (pi * hbar);
  }
  return out;
}

/// FWHM of cumulant_spectrum, located by bracketing and TOMS 748.
inline double cumulant_fwhm(double epsilon, double tau) {
  const double zero = 0.0;
  const double peak = cumulant_spectrum(epsilon, tau, std::span<const double>(&zero, 1))[0];
  const auto f = [&](double e) { return cumulant_spectrum(epsilon, tau, std::span<const double>(&e, 1))[0] - 0.5 * peak; };
  double hi = std::max(1e-6, self_energy_lowest_order(epsilon, tau).linewidth());
  while (f(hi) > 0.0) hi *= 2.0;
  std::uintmax_t it = 200;
  const auto r = boost::math::tools::toms748_solve(f, 0.0, hi, boost::math::tools::eps_tolerance<double>(40), it);
  return r.first + r.second;
}

}  // namespace sshphoton
