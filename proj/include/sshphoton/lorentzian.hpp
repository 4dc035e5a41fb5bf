#pragma once

// Emission spectra on an energy grid and Lorentzian line fitting.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sshphoton/errors.hpp"
#include "sshphoton/units.hpp"

namespace sshphoton {

/// S(E) sampled on an ascending energy grid. density is per meV.
struct Spectrum {
  std::vector<double> energy;   // meV (hbar * omega)
  std::vector<double> density;  // 1/meV
  double resolution = 0.0;      // 2 pi hbar / T, meV

  std::size_t size() const { return energy.size(); }
};

/// Trapezoidal integral of S over the grid.
inline double integrate(const Spectrum& s) {
  double sum = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i)
    sum += 0.5 * (s.density[i] + s.density[i - 1]) * (s.energy[i] - s.energy[i - 1]);
  return sum;
}

struct LorentzianFit {
  double center = 0.0;     // meV
  double fwhm = 0.0;       // meV
  double amplitude = 0.0;  // peak height above baseline, 1/meV
  double baseline = 0.0;   // 1/meV
  double residual_rms = 0.0;  // rms residual / fitted peak height
  int iterations = 0;
  std::size_t points = 0;
};

inline double lorentzian(double e, double amplitude, double center, double fwhm, double baseline = 0.0) {
  const double q = 0.25 * fwhm * fwhm;
  const double d = e - center;
  return amplitude * q / (d * d + q) + baseline;
}

struct FitOptions {
  double window_fwhm = 5.0;   // fit range: peak +/- window_fwhm * (initial FWHM)
  int max_iterations = 200;
  double max_residual = 0.1;  // reject above this fraction of the peak height
  double secondary_peak_ratio = 0.5;
  double smooth_fraction = 0.1;  // smoothing box as a fraction of the FWHM; 0 keeps 2 resolution bins
};

namespace detail {

inline std::vector<double> box_smooth(std::span<const double> y, std::size_t width) {
  if (width <= 1) return {y.begin(), y.end()};
  const std::size_t h = width / 2;
  std::vector<double> prefix(y.size() + 1, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) prefix[i + 1] = prefix[i] + y[i];
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const std::size_t lo = i >= h ? i - h : 0;
    const std::size_t hi = std::min(y.size(), i + h + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

/// Linear interpolation of the energy where y crosses level between i0 and i1.
inline double crossing(const Spectrum& s, const std::vector<double>& y, std::size_t i0, std::size_t i1,
                       double level) {
  const double y0 = y[i0], y1 = y[i1];
  if (y0 == y1) return s.energy[i0];
  const double f = (level - y0) / (y1 - y0);
  return s.energy[i0] + f * (s.energy[i1] - s.energy[i0]);
}

}  // namespace detail

/// Least-squares fit of A (g/2)^2 / ((E - E0)^2 + (g/2)^2) + b around the
/// dominant peak (Levenberg-Marquardt). Throws NumericalError on multiple
/// peaks, non-convergence, or residual above options.max_residual.
inline LorentzianFit fit_lorentzian(const Spectrum& s, const FitOptions& opt = {}) {
  const std::size_t n = s.size();
  if (n < 5) throw NumericalError("spectrum too short to fit");
  const double de = (s.energy.back() - s.energy.front()) / static_cast<double>(n - 1);
  std::size_t min_width = 1;
  if (s.resolution > 0.0 && de > 0.0)
    min_width = std::max<std::size_t>(1, static_cast<std::size_t>(2.0 * s.resolution / de));
  if (min_width % 2 == 0) ++min_width;

  // Periodogram points scatter by ~100% per realization. Starting from a wide
  // box, the width is set to smooth_fraction of the FWHM estimate until it
  // settles; a box that narrow averages neighbouring bins without visibly
  // broadening the line.
  std::size_t width = opt.smooth_fraction > 0.0 ? std::max(min_width, n / 50) : min_width;
  if (width % 2 == 0) ++width;
  std::vector<double> sm;
  std::size_t k = 0, l = 0, r = 0;
  double peak = 0.0, half = 0.0, e_left = 0.0, e_right = 0.0, fwhm0 = 0.0;
  for (int pass = 0; pass < 12; ++pass) {
    sm = detail::box_smooth(s.density, width);
    k = static_cast<std::size_t>(std::max_element(sm.begin(), sm.end()) - sm.begin());
    peak = sm[k];
    if (!(peak > 0.0)) throw NumericalError("spectrum has no positive peak");
    half = 0.5 * peak;
    l = k;
    r = k;
    while (l > 0 && sm[l] >= half) --l;
    while (r + 1 < n && sm[r] >= half) ++r;
    e_left = (sm[l] < half) ? detail::crossing(s, sm, l, l + 1, half) : s.energy[l];
    e_right = (sm[r] < half) ? detail::crossing(s, sm, r - 1, r, half) : s.energy[r];
    fwhm0 = std::max(e_right - e_left, 2.0 * de);
    std::size_t next = min_width;
    if (opt.smooth_fraction > 0.0 && de > 0.0)
      next = std::max(next, static_cast<std::size_t>(opt.smooth_fraction * fwhm0 / de));
    if (next % 2 == 0) ++next;
    if (next == width) break;
    width = next;
  }

  // Any other region above secondary_peak_ratio * peak that is separated from
  // the main half-maximum region by more than one FWHM is a second line.
  const double level = opt.secondary_peak_ratio * peak;
  for (std::size_t i = 0; i < n; ++i) {
    if (sm[i] < level) continue;
    const double e = s.energy[i];
    if (e < e_left - fwhm0 || e > e_right + fwhm0)
      throw NumericalError("multiple peaks in spectrum (secondary line near " + std::to_string(e) + " meV)");
  }

  const double center0 = s.energy[k];
  const double lo = center0 - opt.window_fwhm * fwhm0, hi = center0 + opt.window_fwhm * fwhm0;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n; ++i)
    if (s.energy[i] >= lo && s.energy[i] <= hi) {
      xs.push_back(s.energy[i]);
      ys.push_back(sm[i]);
    }
  const std::size_t m = xs.size();
  if (m < 5) throw NumericalError("too few points in the fit window");

  Eigen::Vector4d p(s.density[k], center0, fwhm0, 0.0);  // amplitude, center, fwhm, baseline
  const auto residuals = [&](const Eigen::Vector4d& q, Eigen::VectorXd& res) {
    for (std::size_t i = 0; i < m; ++i) res(i) = ys[i] - lorentzian(xs[i], q(0), q(1), q(2), q(3));
    return res.squaredNorm();
  };
  Eigen::VectorXd res(m), trial_res(m);
  double chi2 = residuals(p, res);
  double lambda = 1e-3;
  int it = 0;
  bool converged = false;
  Eigen::MatrixXd jac(m, 4);
  for (; it < opt.max_iterations; ++it) {
    const double g = p(2);
    const double qq = 0.25 * g * g;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = xs[i] - p(1);
      const double den = d * d + qq;
      const double shape = qq / den;
      jac(i, 0) = shape;
      jac(i, 1) = p(0) * qq * 2.0 * d / (den * den);
      jac(i, 2) = p(0) * (0.5 * g * den - qq * 0.5 * g) / (den * den);
      jac(i, 3) = 1.0;
    }
    const Eigen::Matrix4d jtj = jac.transpose() * jac;
    const Eigen::Vector4d jtr = jac.transpose() * res;
    bool improved = false;
    Eigen::Vector4d step = Eigen::Vector4d::Zero();
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix4d a = jtj;
      for (int d = 0; d < 4; ++d) a(d, d) += lambda * std::max(jtj(d, d), 1e-300);
      step = a.ldlt().solve(jtr);
      Eigen::Vector4d trial = p + step;
      trial(2) = std::abs(trial(2));
      const double chi2_trial = residuals(trial, trial_res);
      if (chi2_trial <= chi2) {
        const double rel = (chi2 - chi2_trial) / std::max(chi2, 1e-300);
        p = trial;
        res = trial_res;
        chi2 = chi2_trial;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (rel < 1e-14 || step.cwiseAbs().maxCoeff() < 1e-13 * (1.0 + p.cwiseAbs().maxCoeff())) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      // No descent direction left: the current point is a minimum to machine precision.
      converged = true;
    }
    if (converged) break;
  }
  if (!converged) throw NumericalError("Lorentzian fit did not converge in " + std::to_string(opt.max_iterations) +
                                       " iterations");

  LorentzianFit f;
  f.amplitude = p(0);
  f.center = p(1);
  f.fwhm = std::abs(p(2));
  f.baseline = p(3);
  f.iterations = it + 1;
  f.points = m;
  const double height = f.amplitude + f.baseline;
  f.residual_rms = std::sqrt(chi2 / static_cast<double>(m)) / std::max(std::abs(height), 1e-300);
  if (!(f.fwhm > 0.0) || !(f.amplitude > 0.0)) throw NumericalError("Lorentzian fit produced a non-positive width");
  if (f.residual_rms > opt.max_residual)
    throw NumericalError("Lorentzian fit rejected: residual " + std::to_string(f.residual_rms) + " of peak height");
  return f;
}

/// Distance between the outermost half-maximum crossings of the spectrum after
/// a box average of width box (meV). Unlike a fit it stays defined for a band
/// of many lines, where it measures the spread of the emission.
inline double half_maximum_span(const Spectrum& s, double box) {
  const std::size_t n = s.size();
  if (n < 3) throw NumericalError("spectrum too short");
  const double de = (s.energy.back() - s.energy.front()) / static_cast<double>(n - 1);
  std::size_t width = de > 0.0 ? static_cast<std::size_t>(std::max(box, 0.0) / de) : 1;
  if (width % 2 == 0) ++width;
  const auto sm = detail::box_smooth(s.density, width);
  const double peak = *std::max_element(sm.begin(), sm.end());
  if (!(peak > 0.0)) throw NumericalError("spectrum has no positive peak");
  const double half = 0.5 * peak;
  std::size_t l = 0, r = n - 1;
  while (sm[l] < half) ++l;
  while (sm[r] < half) --r;
  const double e_left = l > 0 ? detail::crossing(s, sm, l - 1, l, half) : s.energy[0];
  const double e_right = r + 1 < n ? detail::crossing(s, sm, r, r + 1, half) : s.energy[n - 1];
  return e_right - e_left;
}

}  // namespace sshphoton
