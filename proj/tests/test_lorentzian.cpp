#include <gtest/gtest.h>

#include <cmath>

#include "sshphoton/lorentzian.hpp"

using namespace sshphoton;

namespace {

Spectrum grid(double lo, double hi, std::size_t n) {
  Spectrum s;
  for (std::size_t i = 0; i < n; ++i) s.energy.push_back(lo + (hi - lo) * static_cast<double>(i) / (n - 1));
  s.density.assign(n, 0.0);
  return s;
}

}  // namespace

TEST(Lorentzian, RecoversExactLine) {
  auto s = grid(-5.0, 5.0, 4001);
  for (std::size_t i = 0; i < s.size(); ++i) s.density[i] = lorentzian(s.energy[i], 1.6, 0.12, 0.403);
  FitOptions opt;
  opt.smooth_fraction = 0.0;
  const auto f = fit_lorentzian(s, opt);
  EXPECT_NEAR(f.fwhm, 0.403, 0.403 * 1e-6);
  EXPECT_NEAR(f.center, 0.12, 1e-8);
  EXPECT_NEAR(f.amplitude, 1.6, 1e-6);
  EXPECT_NEAR(f.baseline, 0.0, 1e-8);
  EXPECT_LT(f.residual_rms, 1e-8);
}

TEST(Lorentzian, DefaultSmoothingBiasIsSmall) {
  auto s = grid(-5.0, 5.0, 20001);
  for (std::size_t i = 0; i < s.size(); ++i) s.density[i] = lorentzian(s.energy[i], 1.0, -0.3, 0.25, 0.01);
  const auto f = fit_lorentzian(s);
  EXPECT_NEAR(f.fwhm, 0.25, 0.25 * 5e-3);  // box of 0.1 FWHM broadens by about 0.4%
  EXPECT_NEAR(f.center, -0.3, 1e-6);
  EXPECT_NEAR(f.baseline, 0.01, 1e-3);
}

TEST(Lorentzian, RejectsTwoPeaks) {
  auto s = grid(-5.0, 5.0, 4001);
  for (std::size_t i = 0; i < s.size(); ++i)
    s.density[i] = lorentzian(s.energy[i], 1.0, -2.0, 0.2) + lorentzian(s.energy[i], 0.9, 2.0, 0.2);
  EXPECT_THROW(fit_lorentzian(s), NumericalError);
}

TEST(Lorentzian, SincSquaredIsNotLorentzian) {
  auto s = grid(-1.0, 1.0, 4001);
  s.resolution = 0.0;
  const double width = 0.05;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double x = pi * s.energy[i] / width;
    s.density[i] = x == 0.0 ? 1.0 : std::pow(std::sin(x) / x, 2);
  }
  FitOptions opt;
  opt.max_residual = 0.01;
  EXPECT_THROW(fit_lorentzian(s, opt), NumericalError);
}

TEST(Lorentzian, DegenerateInputs) {
  auto s = grid(-1.0, 1.0, 3);
  EXPECT_THROW(fit_lorentzian(s), NumericalError);
  s = grid(-1.0, 1.0, 100);
  EXPECT_THROW(fit_lorentzian(s), NumericalError);
}

TEST(Spectrum, TrapezoidIntegral) {
  auto s = grid(-50.0, 50.0, 200001);
  for (std::size_t i = 0; i < s.size(); ++i) s.density[i] = lorentzian(s.energy[i], 2.0 / (pi * 0.4), 0.0, 0.4);
  EXPECT_NEAR(integrate(s), 1.0, 3e-3);
}

TEST(HalfMaximumSpan, SingleLineAndBand) {
  auto s = grid(-10.0, 10.0, 20001);
  for (std::size_t i = 0; i < s.size(); ++i) s.density[i] = lorentzian(s.energy[i], 2.0, 0.5, 0.4);
  EXPECT_NEAR(half_maximum_span(s, 0.0), 0.4, 2e-3);
  for (std::size_t i = 0; i < s.size(); ++i)
    s.density[i] = lorentzian(s.energy[i], 1.0, -4.0, 0.1) + lorentzian(s.energy[i], 1.0, 3.0, 0.1);
  EXPECT_NEAR(half_maximum_span(s, 0.0), 7.1, 2e-3);
  EXPECT_THROW(half_maximum_span(grid(0.0, 1.0, 10), 0.1), NumericalError);
}
