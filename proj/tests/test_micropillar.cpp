#include <gtest/gtest.h>

#include <cmath>

#include "sshphoton/micropillar.hpp"

using namespace sshphoton;

namespace {

/// Deep, heavy wells whose lowest doublet is bound below the barrier.
PillarGeometry bound() {
  PillarGeometry g;
  g.well_depth = 100.0;
  g.m_eff = 0.2;
  g.grid_points = 97;
  return g;
}

}  // namespace

TEST(Pillar, HamiltonianIsSymmetric) {
  PillarGeometry g;
  g.grid_points = 65;
  const auto h = pillar_hamiltonian(g);
  EXPECT_EQ(h.rows(), 65 * 65);
  const Eigen::SparseMatrix<double> d = h - Eigen::SparseMatrix<double>(h.transpose());
  EXPECT_EQ(d.norm(), 0.0);
}

TEST(Pillar, OneDimensionalSquareWellAgainstDense) {
  PillarGeometry g;
  g.dimension = 1;
  g.grid_points = 400;
  const auto h = pillar_hamiltonian(g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(h)};
  const auto r = solve_double_well(g);
  EXPECT_NEAR(r.e0, es.eigenvalues()(0), 1e-6);
  EXPECT_NEAR(r.e1, es.eigenvalues()(1), 1e-6);
}

TEST(Pillar, DefaultGeometry) {
  const auto r = solve_double_well(PillarGeometry{});
  EXPECT_NEAR(r.j_sys, 3.0157, 1e-3);
  EXPECT_LT(r.e0, r.e1);
  EXPECT_NEAR(r.parity0, 1.0, 1e-6);
  EXPECT_NEAR(r.parity1, -1.0, 1e-6);
  EXPECT_FALSE(r.bound_doublet);
  EXPECT_LE(r.iterations, 500);
}

TEST(Pillar, BoundDoubletParityAndMaps) {
  SolverOptions o;
  o.keep_maps = true;
  o.require_bound = true;
  const auto g = bound();
  const auto r = solve_double_well(g, o);
  EXPECT_TRUE(r.bound_doublet);
  EXPECT_GT(r.j_sys, 0.0);
  EXPECT_NEAR(r.parity0, 1.0, 1e-6);
  EXPECT_NEAR(r.parity1, -1.0, 1e-6);
  ASSERT_TRUE(r.ground && r.excited);
  const double cell = g.spacing() * g.spacing();
  EXPECT_NEAR(r.ground->sum() * cell, 1.0, 1e-10);
  // The odd state has a node on the mirror plane x = 0.
  const int n = g.grid_points, mid = n / 2;
  EXPECT_LT((*r.excited)(mid * n + mid), 1e-6 * r.excited->maxCoeff());
}

TEST(Pillar, HoppingDecaysWithGap) {
  PillarGeometry g = bound();
  g.domain_size = 110.0;
  g.grid_points = 163;
  double prev = 1e300;
  for (double gap : {3.0, 5.0, 8.0, 12.0, 20.0}) {
    PillarGeometry gi = g;
    CavityParams c;
    apply_variable(gi, c, PillarVariable::distance, gap);
    EXPECT_NEAR(gi.gap(), gap, 1e-12);
    const double j = solve_double_well(gi).j_sys;
    EXPECT_LT(j, prev) << gap;
    prev = j;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(Pillar, GridConvergence) {
  const PillarGeometry g;
  const double coarse = solve_double_well(g).j_sys;
  const double fine = solve_double_well(with_spacing(g, 0.5 * g.spacing())).j_sys;
  EXPECT_LT(std::abs(fine - coarse) / fine, 0.02);
}

TEST(Pillar, GroundEnergyConvergesUnderRefinement) {
  PillarGeometry g = bound();
  std::vector<double> e;
  for (double h : {1.0, 0.5, 0.25}) e.push_back(solve_double_well(with_spacing(g, h)).e0);
  EXPECT_LT(std::abs(e[2] - e[1]), std::abs(e[1] - e[0]));
}

TEST(Pillar, DomainConvergenceForBoundStates) {
  const PillarGeometry g = bound();
  PillarGeometry big = g;
  big.domain_size = 85.0;
  big.grid_points = static_cast<int>(std::lround(85.0 / g.spacing())) - 1;
  const double a = solve_double_well(g).j_sys;
  const double b = solve_double_well(big).j_sys;
  EXPECT_LT(std::abs(a - b) / b, 0.01);
}

TEST(Cavity, ZeroDetuningReducesToDoubleWell) {
  PillarGeometry g;
  g.grid_points = 65;
  const auto a = solve_double_well(g);
  const auto b = solve_cavity_coupled(g, CavityParams{0.0, 1e-4});
  EXPECT_NEAR(a.e0, b.e0, 1e-5);
  EXPECT_NEAR(a.j_sys, b.j_sys, 1e-5);
}

TEST(Cavity, HoppingGrowsWithDetuning) {
  PillarGeometry g;
  g.grid_points = 65;
  const std::vector<double> deltas{0.0, 50.0, 100.0};
  const auto rows = sweep_pillars(PillarVariable::delta, deltas, g);
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_LT(rows[0].j_sys, rows[3].j_sys);
  EXPECT_LT(rows[3].j_sys, rows[6].j_sys);
}

TEST(Sweep, RowsPerMaterial) {
  PillarGeometry g;
  g.grid_points = 65;
  const std::vector<double> m{0.05, 0.1};
  const auto rows = sweep_pillars(PillarVariable::m_eff, m, g, std::nullopt, {}, 2);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].material, "GaAs");
  EXPECT_EQ(rows[2].material, "perovskite");
  EXPECT_NEAR(rows[0].ratio, rows[0].j_sys / 0.15, 1e-12);
  EXPECT_GT(rows[0].j_sys, rows[3].j_sys);
}

TEST(Pillar, Errors) {
  PillarGeometry g;
  g.grid_points = 40;  // spacing > diameter / 10
  EXPECT_THROW(solve_double_well(g), ConfigError);
  g = PillarGeometry{};
  g.domain_size = 50.0;
  g.grid_points = 99;
  EXPECT_THROW(solve_double_well(g), ConfigError);
  g = PillarGeometry{};
  g.center_separation = 8.0;
  EXPECT_THROW(solve_double_well(g), ConfigError);
  g = PillarGeometry{};
  g.dimension = 3;
  EXPECT_THROW(validate(g), ConfigError);
  EXPECT_THROW(solve_cavity_coupled(PillarGeometry{}, CavityParams{0.0, 0.1}), ConfigError);
  SolverOptions o;
  o.require_bound = true;
  EXPECT_THROW(solve_double_well(PillarGeometry{}, o), NumericalError);
  o = SolverOptions{};
  o.max_iterations = 2;
  EXPECT_THROW(solve_double_well(PillarGeometry{}, o), NumericalError);
}
