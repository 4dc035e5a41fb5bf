#include <gtest/gtest.h>

#include <random>

#include "sshphoton/lattice.hpp"

using namespace sshphoton;

TEST(Chain, HoppingsFollowParameterization) {
  const ChainParams p{80, 30.0, pi / 4.2};
  EXPECT_NEAR(p.j(), 13.879048596203635, 1e-12);
  EXPECT_NEAR(p.j_prime(), 16.120951403796365, 1e-12);
  EXPECT_NEAR(p.j() + p.j_prime(), 30.0, 1e-12);
  EXPECT_TRUE(p.nontrivial());
}

TEST(Chain, RejectsInvalidParameters) {
  EXPECT_THROW(validate(ChainParams{0, 1.0, 0.3}), ConfigError);
  EXPECT_THROW(validate(ChainParams{5, 1.0, 0.3}), ConfigError);
  EXPECT_NO_THROW(validate(ChainParams{5, 1.0, 0.3}, true));
  EXPECT_THROW(validate(ChainParams{4, -1.0, 0.3}), ConfigError);
  EXPECT_THROW(validate(ChainParams{4, 1.0, 2.0}), ConfigError);
  EXPECT_THROW(validate(ChainParams{4, 1.0, -0.1}), ConfigError);
}

TEST(Hamiltonian, DimerAtHalfPi) {
  const auto h = build_hamiltonian({2, 1.0, pi / 2});
  const Eigen::MatrixXd m = h.dense();
  EXPECT_NEAR(m(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(m(1, 0), 1.0, 1e-15);
  EXPECT_EQ(m(0, 0), 0.0);
}

TEST(Hamiltonian, UniformAtTransition) {
  const auto h = build_hamiltonian({4, 2.0, pi / 4});
  for (double t : h.hopping) EXPECT_NEAR(t, 1.0, 1e-14);
}

TEST(Hamiltonian, SymmetricTridiagonalAlternating) {
  const ChainParams p{10, 3.0, 0.4};
  std::vector<double> eps(10);
  for (int i = 0; i < 10; ++i) eps[i] = 0.1 * i;
  const Eigen::MatrixXd m = build_hamiltonian(p, eps).dense();
  EXPECT_TRUE(m.isApprox(m.transpose()));
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      if (std::abs(i - j) > 1) {
        EXPECT_EQ(m(i, j), 0.0);
      }
  for (int i = 0; i + 1 < 10; ++i) EXPECT_DOUBLE_EQ(m(i, i + 1), i % 2 == 0 ? p.j() : p.j_prime());
  EXPECT_DOUBLE_EQ(m(3, 3), 0.3);
}

TEST(Hamiltonian, OnsiteLengthMismatch) {
  std::vector<double> eps(3, 0.0);
  EXPECT_THROW(build_hamiltonian({4, 1.0, 0.3}, eps), ConfigError);
}

TEST(Hamiltonian, ChiralSpectrum) {
  const auto es = build_hamiltonian({40, 30.0, 0.6}).diagonalize(false);
  const auto& w = es.eigenvalues();
  for (int i = 0; i < 40; ++i) EXPECT_NEAR(w(i), -w(39 - i), 1e-10 * 30.0);
}

TEST(Hamiltonian, PureDimersGivePlusMinusJ) {
  const auto es = build_hamiltonian({8, 5.0, pi / 2}).diagonalize(false);
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(std::abs(es.eigenvalues()(i)), 5.0, 1e-12);
}

TEST(Bands, GapFormula) {
  const ChainParams p{80, 30.0, pi / 4.2};
  const auto b = band_structure(p, 4097);
  EXPECT_NEAR(b.gap, 4.48380561518546, 1e-12);
  EXPECT_NEAR(b.gap, 2.0 * 30.0 * std::abs(std::cos(2.0 * p.theta)), 1e-12);
  EXPECT_NEAR(b.gap_numeric, b.gap, 1e-9);
  for (std::size_t i = 0; i < b.k.size(); ++i) EXPECT_EQ(b.upper[i], -b.lower[i]);
}

TEST(Bands, TransitionIsGapless) { EXPECT_NEAR(band_gap({4, 30.0, pi / 4}), 0.0, 1e-12); }

TEST(Bands, ExplicitHoppings) {
  // sin^2 = 1/1.6, cos^2 = 0.6/1.6 gives J = 1, J' = 0.6 with J0 = 1.6.
  const ChainParams p{4, 1.6, std::asin(std::sqrt(1.0 / 1.6))};
  EXPECT_NEAR(band_gap(p), 0.8, 1e-12);
}

TEST(Winding, NontrivialAndTrivial) {
  ChainParams p{4, 1.6, std::asin(std::sqrt(0.6 / 1.6))};  // J = 0.6, J' = 1
  EXPECT_EQ(winding_number(p).value, 1);
  p.theta = std::asin(std::sqrt(1.0 / 1.6));  // J = 1, J' = 0.6
  EXPECT_EQ(winding_number(p).value, 0);
}

TEST(Winding, UndefinedAtTransition) {
  const auto w = winding_number({4, 30.0, pi / 4});
  EXPECT_FALSE(w.value.has_value());
}

TEST(Winding, AgreesWithSignTestOnRandomAngles) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, pi / 2);
  for (int i = 0; i < 100; ++i) {
    const double th = u(rng);
    if (std::abs(th - pi / 4) < 1e-6) continue;
    const ChainParams p{4, 30.0, th};
    const auto w = winding_number(p);
    ASSERT_TRUE(w.value.has_value()) << th;
    EXPECT_EQ(*w.value, th < pi / 4 ? 1 : 0) << th;
  }
}

TEST(EdgeMode, DecoupledFirstSite) {
  const auto m = edge_mode({2, 1.0, 0.0});
  EXPECT_NEAR(m.energy, 0.0, 1e-14);
  EXPECT_NEAR(std::abs(m.vector(0)), 1.0, 1e-12);
  EXPECT_TRUE(m.edge_localized);
}

TEST(EdgeMode, DecayMatchesSemiInfiniteLaw) {
  const ChainParams p{80, 30.0, 0.2 * pi};
  const auto m = edge_mode(p);
  const double ratio = -p.j() / p.j_prime();
  EXPECT_NEAR(ratio, -0.5278640450004205, 1e-12);
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(m.vector(2 * k + 2) / m.vector(2 * k), ratio, 1e-6);
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(m.vector(2 * k + 1), 0.0, 1e-6);
  EXPECT_TRUE(m.edge_localized);
  EXPECT_GT(m.vector(0), 0.0);
}

TEST(EdgeMode, NearZeroEnergyAtDefaultChain) {
  const ChainParams p{80, 30.0, pi / 4.2};
  const auto m = edge_mode(p);
  EXPECT_LT(std::abs(m.energy), 1e-3 * p.j0);
  EXPECT_NEAR(m.pair_splitting, 2.0 * 0.01045044, 1e-6);
  EXPECT_TRUE(m.rotated);
  EXPECT_TRUE(m.edge_localized);
  EXPECT_NEAR(m.vector.norm(), 1.0, 1e-12);
}

TEST(EdgeMode, SplitPairTakesUpperMemberWithoutRotation) {
  const ChainParams p{80, 30.0, pi / 4.2};
  const auto m = edge_mode(p, 1e-6);
  EXPECT_FALSE(m.rotated);
  EXPECT_NEAR(m.energy, 0.01045044, 1e-6);
}

TEST(EdgeMode, TrivialPhaseFlaggedNotLocalized) {
  const auto m = edge_mode({40, 30.0, 0.35 * pi});
  EXPECT_FALSE(m.edge_localized);
  EXPECT_NEAR(m.vector.norm(), 1.0, 1e-12);
}

TEST(EdgeMode, TwoInGapStatesForLongChains) {
  for (double th : {0.1 * pi, 0.15 * pi, 0.2 * pi}) {
    const ChainParams p{60, 30.0, th};
    const auto es = build_hamiltonian(p).diagonalize(false);
    const double half_gap = 0.5 * band_gap(p);
    int inside = 0;
    for (int i = 0; i < 60; ++i) {
      const double e = es.eigenvalues()(i);
      if (std::abs(e) < half_gap) {
        ++inside;
        EXPECT_LT(std::abs(e), band_gap(p) / 10.0);
      }
    }
    EXPECT_EQ(inside, 2) << th;
  }
}
