#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "sshphoton/noise.hpp"

using namespace sshphoton;

namespace {

NoiseParams small_params() {
  NoiseParams p;
  p.dt = 0.01;
  p.t_total = 40.0;
  return p;
}

}  // namespace

TEST(NoiseKernel, AutocovarianceValues) {
  const NoiseParams p;
  EXPECT_DOUBLE_EQ(autocovariance(p, 0.0), 0.25);
  EXPECT_NEAR(autocovariance(p, p.tau * std::sqrt(2.0)), 0.25 / std::exp(1.0), 1e-15);
}

TEST(NoiseKernel, SpectralDensity) {
  EXPECT_NEAR(spectral_density(0.5, 0.5, 0.0), 0.25 * 0.5 * std::sqrt(2.0 * pi), 1e-15);
  EXPECT_NEAR(spectral_density(0.5, 0.5, 0.0), 0.3133285, 1e-7);
  // int F~ dw / 2 pi = eps^2
  double s = 0.0;
  const double dw = 1e-3;
  for (double w = -60.0; w <= 60.0; w += dw) s += spectral_density(0.5, 0.5, w) * dw;
  EXPECT_NEAR(s / (2.0 * pi), 0.25, 1e-9);
}

TEST(NoiseParamsValidation, Rejects) {
  NoiseParams p;
  p.dt = 0.06;
  EXPECT_THROW(validate(p), ConfigError);
  p = NoiseParams{};
  p.t_total = 5.0;
  EXPECT_THROW(validate(p), ConfigError);
  p = NoiseParams{};
  p.epsilon = -1.0;
  EXPECT_THROW(validate(p), ConfigError);
  p = NoiseParams{};
  p.n_realizations = 0;
  EXPECT_THROW(validate(p), ConfigError);
  p = NoiseParams{};
  p.tau = 0.0;
  EXPECT_THROW(validate(p), ConfigError);
}

TEST(NoiseGen, KernelNormalisation) {
  const NoiseGenerator g(small_params());
  double s2 = 0.0;
  for (double x : g.kernel()) s2 += x * x;
  EXPECT_NEAR(s2, 0.25, 1e-12);
}

TEST(NoiseGen, StreamingEqualsDirectConvolution) {
  NoiseParams p = small_params();
  p.t_total = 500.0;  // several overlap-save blocks
  const NoiseGenerator g(p);
  ASSERT_GT(g.n_samples(), 2 * g.block_size());
  const auto tr = g.sample(3, 5);

  auto rng = stream_rng(p.seed, kNoiseStream, 3, 5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto k = g.kernel();
  std::vector<double> white(g.n_samples() + k.size());
  for (double& w : white) w = gauss(rng);
  for (std::size_t i : {std::size_t{0}, std::size_t{1}, g.block_size() - 1, g.block_size(), g.block_size() + 1,
                        2 * g.block_size() + 17, g.n_samples() - 1}) {
    double direct = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) direct += k[j] * white[i + j];
    EXPECT_NEAR(tr.samples[i], direct, 1e-12) << i;
  }
}

TEST(NoiseGen, DeterministicAndOrderIndependent) {
  const auto p = small_params();
  const auto a = sample_trajectories(p, 4, 2);
  const NoiseGenerator g(p);
  const auto b3 = g.sample(2, 3);
  const auto b0 = g.sample(2, 0);
  EXPECT_EQ(a[3].samples, b3.samples);
  EXPECT_EQ(a[0].samples, b0.samples);
  EXPECT_EQ(a[3].site_index, 3);
  EXPECT_NE(a[0].samples, a[1].samples);
  EXPECT_NE(g.sample(1, 0).samples, b0.samples);
}

TEST(NoiseGen, SeedChangesOutput) {
  auto p = small_params();
  const auto a = NoiseGenerator(p).sample(0, 0);
  p.seed += 1;
  EXPECT_NE(NoiseGenerator(p).sample(0, 0).samples, a.samples);
}

TEST(NoiseGen, ZeroEpsilonIsSilent) {
  auto p = small_params();
  p.epsilon = 0.0;
  const auto tr = NoiseGenerator(p).sample(0, 0);
  ASSERT_EQ(tr.samples.size(), p.n_steps());
  for (double x : tr.samples) EXPECT_EQ(x, 0.0);
}

TEST(NoiseGen, SamplingErrors) {
  EXPECT_THROW(sample_trajectories(small_params(), 0, 0), ConfigError);
  EXPECT_THROW(sample_trajectories(small_params(), 2, -1), ConfigError);
}

// Marginals: one sample every 6 tau across many trajectories is effectively
// independent, so skewness and excess kurtosis have the iid standard errors.
TEST(NoiseStats, GaussianMarginals) {
  NoiseParams p;
  p.dt = 0.05;
  p.t_total = 600.0;
  const NoiseGenerator g(p);
  const std::size_t stride = static_cast<std::size_t>(std::lround(6.0 * p.tau / p.dt));
  std::vector<double> x;
  for (int site = 0; x.size() < 100000; ++site) {
    const auto tr = g.sample(0, site);
    for (std::size_t i = 0; i < tr.samples.size() && x.size() < 100000; i += stride) x.push_back(tr.samples[i]);
  }
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  EXPECT_NEAR(mean, 0.0, 3.0 * std::sqrt(0.25 / n));
  EXPECT_NEAR(m2, 0.25, 3.0 * 0.25 * std::sqrt(2.0 / n));
  EXPECT_NEAR(m3 / std::pow(m2, 1.5), 0.0, 3.0 * std::sqrt(6.0 / n));
  EXPECT_NEAR(m4 / (m2 * m2) - 3.0, 0.0, 3.0 * std::sqrt(24.0 / n));
}

TEST(NoiseStats, SitesAreIndependent) {
  NoiseParams p;
  p.dt = 0.05;
  p.t_total = 100.0;
  const NoiseGenerator g(p);
  std::vector<double> per_traj;
  for (int r = 0; r < 400; ++r) {
    const auto a = g.sample(r, 0), b = g.sample(r, 1);
    double c = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) c += a.samples[i] * b.samples[i];
    per_traj.push_back(c / static_cast<double>(a.samples.size()));
  }
  const double n = static_cast<double>(per_traj.size());
  const double mean = std::accumulate(per_traj.begin(), per_traj.end(), 0.0) / n;
  double var = 0.0;
  for (double c : per_traj) var += (c - mean) * (c - mean);
  const double se = std::sqrt(var / (n - 1) / n);
  EXPECT_LT(std::abs(mean), 3.0 * se);
}

TEST(NoiseStats, AutocovarianceMatchesKernel) {
  NoiseParams p;
  p.dt = 0.01;
  p.t_total = 50.0;
  const NoiseGenerator g(p);
  const std::vector<double> lags{0.0, p.tau, 2.0 * p.tau, 4.0 * p.tau};
  std::vector<std::vector<double>> est(lags.size());
  for (int r = 0; r < 1000; ++r) {
    const auto tr = g.sample(r, 0);
    for (std::size_t l = 0; l < lags.size(); ++l) {
      const auto shift = static_cast<std::size_t>(std::lround(lags[l] / p.dt));
      double c = 0.0;
      const std::size_t m = tr.samples.size() - shift;
      for (std::size_t i = 0; i < m; ++i) c += tr.samples[i] * tr.samples[i + shift];
      est[l].push_back(c / static_cast<double>(m));
    }
  }
  for (std::size_t l = 0; l < lags.size(); ++l) {
    const double n = static_cast<double>(est[l].size());
    const double mean = std::accumulate(est[l].begin(), est[l].end(), 0.0) / n;
    double var = 0.0;
    for (double c : est[l]) var += (c - mean) * (c - mean);
    const double se = std::sqrt(var / (n - 1) / n);
    EXPECT_LT(std::abs(mean - autocovariance(p, lags[l])), 3.0 * se) << "lag " << lags[l];
  }
}
