#include <gtest/gtest.h>

#include <cmath>

#include "sshphoton/dynamics.hpp"
#include "sshphoton/dyson.hpp"

using namespace sshphoton;

TEST(LowestOrder, ClosedForm) {
  const auto s = self_energy_lowest_order(0.5, 0.5);
  EXPECT_NEAR(s.linewidth(), 0.47602984273419696, 1e-12);
  EXPECT_EQ(s.value.real(), 0.0);
  EXPECT_EQ(self_energy_lowest_order(0.0, 0.5).value, std::complex<double>(0.0, 0.0));
  EXPECT_NEAR(self_energy_lowest_order(1.0, 0.5).linewidth(), 4.0 * s.linewidth(), 1e-12);
  EXPECT_THROW(self_energy_lowest_order(0.5, 0.0), ConfigError);
}

TEST(SelfConsistent, ConvergedValue) {
  DysonTrace trace;
  const auto s = self_energy_self_consistent(0.5, 0.5, {}, &trace);
  EXPECT_TRUE(s.converged);
  EXPECT_NEAR(-s.value.imag(), 0.21045556994587383, 2e-5);
  EXPECT_NEAR(s.value.real(), 0.0, 1e-10);
  EXPECT_LE(s.iterations, 15);
  EXPECT_EQ(trace.iterates.size(), static_cast<std::size_t>(s.iterations) + 1);
  EXPECT_EQ(trace.iterates.front(), std::complex<double>(0.0, -1e-5));
  EXPECT_LT(-s.value.imag(), self_energy_lowest_order(0.5, 0.5).linewidth() / 2.0);
}

TEST(SelfConsistent, PlainIterationConvergesQuickly) {
  DysonOptions o;
  o.mixing = 1.0;
  o.tol = 1e-6;
  const auto s = self_energy_self_consistent(0.5, 0.5, o);
  EXPECT_LE(s.iterations, 10);
  EXPECT_NEAR(-s.value.imag(), 0.21045556994587383, 2e-6);
}

TEST(SelfConsistent, FixedPointResidual) {
  DysonOptions o;
  o.tol = 1e-8;
  const auto s = self_energy_self_consistent(0.5, 0.5, o);
  EXPECT_LT(std::abs(dyson_rhs(0.5, 0.5, s.value, o) - s.value), 1e-7);
}

TEST(SelfConsistent, QuadratureConverged) {
  DysonOptions o;
  const auto a = self_energy_self_consistent(0.5, 0.5, o);
  o.quad_tol = 1e-14;
  o.omega_cutoff = 16.0;
  const auto b = self_energy_self_consistent(0.5, 0.5, o);
  EXPECT_LT(std::abs(a.value - b.value), o.tol / 10.0);
}

TEST(SelfConsistent, ZeroNoise) {
  const auto s = self_energy_self_consistent(0.0, 0.5);
  EXPECT_EQ(s.iterations, 1);
  EXPECT_EQ(s.value, std::complex<double>(0.0, 0.0));
}

TEST(SelfConsistent, Errors) {
  DysonOptions o;
  o.init = {0.0, 1e-3};
  EXPECT_THROW(self_energy_self_consistent(0.5, 0.5, o), ConfigError);
  o = DysonOptions{};
  o.max_iter = 2;
  EXPECT_THROW(self_energy_self_consistent(0.5, 0.5, o), NumericalError);
  o = DysonOptions{};
  o.mixing = 0.0;
  EXPECT_THROW(self_energy_self_consistent(0.5, 0.5, o), ConfigError);
  EXPECT_THROW(dyson_rhs(0.5, 0.5, {0.0, 0.0}), NumericalError);
}

TEST(LorentzianSpectrum, PeakWidthNormalisation) {
  SelfEnergy s;
  s.value = {0.0, -0.2};
  const std::vector<double> e{0.0, 0.2, -0.2};
  const auto v = lorentzian_spectrum(s, e);
  EXPECT_NEAR(v[0], 1.0 / (pi * 0.2), 1e-14);
  EXPECT_NEAR(v[1], 0.5 * v[0], 1e-14);
  EXPECT_NEAR(v[2], 0.5 * v[0], 1e-14);
  std::vector<double> grid;
  for (int i = -400000; i <= 400000; ++i) grid.push_back(i * 5e-4);
  const auto d = lorentzian_spectrum(s, grid);
  double sum = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) sum += 0.5 * (d[i] + d[i - 1]) * 5e-4;
  EXPECT_NEAR(sum, 1.0, 2e-3);  // tails beyond +-200 meV carry 2 * 0.2 / (pi 200)
  s.value = {0.0, 0.0};
  EXPECT_THROW(lorentzian_spectrum(s, e), ConfigError);
}

TEST(Cumulant, PhaseVarianceLimits) {
  // phi ~ (eps^2 / 2 hbar^2) s^2 at short times, linear with rate |Im Sigma_0| / hbar at long times.
  const double s = 1e-3;
  EXPECT_NEAR(phase_variance(0.5, 0.5, s), 0.25 * s * s / (2.0 * hbar * hbar), 1e-12);
  const double slope = phase_variance(0.5, 0.5, 41.0) - phase_variance(0.5, 0.5, 40.0);
  EXPECT_NEAR(slope, -self_energy_lowest_order(0.5, 0.5).value.imag() / hbar, 1e-10);
}

TEST(Cumulant, ExactLineValues) {
  const std::vector<double> e{0.0, 0.2, 1.0, 3.0};
  const auto s = cumulant_spectrum(0.5, 0.5, e);
  EXPECT_NEAR(s[0], 1.5227967712828312, 1e-8);
  EXPECT_NEAR(s[1], 0.8835431150932038, 1e-8);
  EXPECT_NEAR(s[2], 0.06336336002119239, 1e-9);
  EXPECT_NEAR(s[3], 0.001037260983755667, 1e-10);
  EXPECT_NEAR(cumulant_fwhm(0.5, 0.5), 0.4693655718651521, 1e-8);
}

// The simulated single emitter reproduces the exact coherence
// <a*(t) a(t + s)> = exp(-phi(s)), averaged over time origins and realizations.
TEST(Cumulant, MatchesSimulatedCoherence) {
  EvolutionConfig c;
  c.chain.n_sites = 1;
  c.initial = SiteStart{1};
  c.noise.t_total = 400.0;
  for (double lag : {0.5, 1.0, 2.0, 4.0}) {
    const auto shift = static_cast<std::size_t>(std::lround(lag / c.dt()));
    std::vector<double> per;
    for (int r = 0; r < c.noise.n_realizations; ++r) {
      const auto a = propagate(c, r);
      std::complex<double> acc = 0.0;
      const std::size_t m = a.values.size() - shift;
      for (std::size_t i = 0; i < m; ++i) acc += std::conj(a.values[i]) * a.values[i + shift];
      per.push_back(acc.real() / static_cast<double>(m));
    }
    const double n = static_cast<double>(per.size());
    double mean = 0.0, var = 0.0;
    for (double v : per) mean += v / n;
    for (double v : per) var += (v - mean) * (v - mean) / (n - 1);
    const double se = std::sqrt(var / n);
    EXPECT_LT(std::abs(mean - std::exp(-phase_variance(0.5, 0.5, lag))), 3.0 * se + 1e-3) << "lag " << lag;
  }
}
