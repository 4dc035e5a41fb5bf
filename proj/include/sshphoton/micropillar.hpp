#pragma once

// Finite-difference double-well solver for the hopping amplitude between two
// micropillars, optionally coupled to a light cavity branch.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sshphoton/errors.hpp"
#include "sshphoton/parallel.hpp"
#include "sshphoton/units.hpp"

namespace sshphoton {

/// Two flat-bottom wells of depth -well_depth centred at +/- separation/2 on
/// the x axis, inside a hard-walled square (2D) or interval (1D).
struct PillarGeometry {
  int dimension = 2;
  double domain_size = 65.0;  // nm per axis, wall to wall
  int grid_points = 129;      // interior points per axis
  double well_depth = 10.0;   // meV
  double well_diameter = 10.0;       // nm
  double center_separation = 15.0;   // nm
  double m_eff = 0.05;               // units of m_e

  double spacing() const { return domain_size / (grid_points + 1); }
  double gap() const { return center_separation - well_diameter; }
  std::size_t unknowns() const {
    const auto n = static_cast<std::size_t>(grid_points);
    return dimension == 1 ? n : n * n;
  }
};

inline void validate(const PillarGeometry& g) {
  if (g.dimension != 1 && g.dimension != 2) throw ConfigError("dimension must be 1 or 2");
  if (g.grid_points < 3) throw ConfigError("grid_points must be at least 3");
  if (!(g.well_depth > 0.0)) throw ConfigError("well_depth must be positive");
  if (!(g.well_diameter > 0.0)) throw ConfigError("well_diameter must be positive");
  if (!(g.center_separation >= g.well_diameter))
    throw ConfigError("wells overlap: center_separation < well_diameter");
  if (!(g.m_eff > 0.0)) throw ConfigError("m_eff must be positive");
  if (g.spacing() > g.well_diameter / 10.0 * (1.0 + 1e-9))
    throw ConfigError("grid spacing must be at most well_diameter/10");
  if (g.domain_size < (g.center_separation + 4.0 * g.well_diameter) * (1.0 - 1e-9))
    throw ConfigError("domain_size must be at least center_separation + 4 well_diameter");
}

/// Geometry with the grid chosen to give the requested spacing.
inline PillarGeometry with_spacing(PillarGeometry g, double spacing) {
  if (!(spacing > 0.0)) throw ConfigError("spacing must be positive");
  g.grid_points = std::max(3, static_cast<int>(std::lround(g.domain_size / spacing)) - 1);
  return g;
}

struct CavityParams {
  double delta = 0.0;  // meV
  double m_c = 1e-4;   // units of m_e
};

struct Material {
  std::string name;
  double gamma_qd;  // meV
};

inline std::vector<Material> material_presets() {
  return {{"GaAs", 0.15}, {"WSe2", 0.18}, {"perovskite", 1.0}};
}

struct HoppingEstimate {
  double e0 = 0.0;  // meV
  double e1 = 0.0;  // meV
  double j_sys = 0.0;  // (e1 - e0) / 2
  int iterations = 0;
  bool bound_doublet = false;  // e0 and e1 both below zero
  double parity0 = 0.0;  // <psi|P psi> under x -> -x
  double parity1 = 0.0;
  std::optional<Eigen::VectorXd> ground;   // |psi|^2 on the grid (QD component)
  std::optional<Eigen::VectorXd> excited;
};

struct SolverOptions {
  double tol = 1e-6;  // meV, on the change of the two lowest Ritz values
  int max_iterations = 500;
  int block = 6;
  bool keep_maps = false;
  bool require_bound = false;  // throw when fewer than two states lie below 0
};

namespace detail {

inline std::vector<double> grid_axis(const PillarGeometry& g) {
  std::vector<double> x(g.grid_points);
  const double h = g.spacing();
  for (int i = 0; i < g.grid_points; ++i) x[i] = -0.5 * g.domain_size + (i + 1) * h;
  return x;
}

inline std::vector<double> well_potential(const PillarGeometry& g) {
  const auto x = grid_axis(g);
  const double r2 = 0.25 * g.well_diameter * g.well_diameter;
  const double c = 0.5 * g.center_separation;
  const auto inside = [&](double px, double py) {
    return (px - c) * (px - c) + py * py < r2 || (px + c) * (px + c) + py * py < r2;
  };
  std::vector<double> v(g.unknowns(), 0.0);
  const int n = g.grid_points;
  if (g.dimension == 1) {
    for (int i = 0; i < n; ++i)
      if (inside(x[i], 0.0)) v[i] = -g.well_depth;
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (inside(x[i], x[j])) v[static_cast<std::size_t>(i) * n + j] = -g.well_depth;
  }
  return v;
}

/// Appends -(K/m) laplacian + diag(v) to triplets at offset (off, off).
inline void add_block(std::vector<Eigen::Triplet<double>>& t, const PillarGeometry& g, double mass,
                      std::span<const double> v, int off) {
  const int n = g.grid_points;
  const double h = g.spacing();
  const double k = kinetic_prefactor / mass / (h * h);
  const auto idx = [&](int i, int j) { return off + (g.dimension == 1 ? i : i * n + j); };
  const int ny = g.dimension == 1 ? 1 : n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < ny; ++j) {
      const int p = idx(i, j);
      const double vp = v.empty() ? 0.0 : v[p - off];
      t.emplace_back(p, p, 2.0 * g.dimension * k + vp);
      if (i + 1 < n) {
        t.emplace_back(p, idx(i + 1, j), -k);
        t.emplace_back(idx(i + 1, j), p, -k);
      }
      if (g.dimension == 2 && j + 1 < n) {
        t.emplace_back(p, idx(i, j + 1), -k);
        t.emplace_back(idx(i, j + 1), p, -k);
      }
    }
}

/// Index of the mirror image under x -> -x.
inline int mirror_index(const PillarGeometry& g, int p) {
  const int n = g.grid_points;
  if (g.dimension == 1) return n - 1 - p;
  return (n - 1 - p / n) * n + p % n;
}

struct LowestPair {
  double e0, e1;
  Eigen::VectorXd v0, v1;
  int iterations;
};

/// Block inverse iteration with Rayleigh-Ritz for the two lowest eigenpairs of
/// a symmetric matrix bounded below by lower_bound.
inline LowestPair lowest_pair(const Eigen::SparseMatrix<double>& h, double lower_bound,
                              const Eigen::MatrixXd& start, const SolverOptions& opt) {
  const Eigen::Index n = h.rows();
  const double sigma = lower_bound - 1.0;
  Eigen::SparseMatrix<double> shifted = h;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= sigma;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) throw NumericalError("sparse factorisation failed");

  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(start).householderQ() *
                      Eigen::MatrixXd::Identity(n, start.cols());
  double prev0 = 0.0, prev1 = 0.0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    Eigen::MatrixXd z = ldlt.solve(q);
    if (ldlt.info() != Eigen::Success) throw NumericalError("sparse solve failed");
    q = Eigen::HouseholderQR<Eigen::MatrixXd>(z).householderQ() * Eigen::MatrixXd::Identity(n, z.cols());
    const Eigen::MatrixXd hq = h * q;
    const Eigen::MatrixXd small = q.transpose() * hq;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (small + small.transpose()));
    q = q * es.eigenvectors();
    const double e0 = es.eigenvalues()(0), e1 = es.eigenvalues()(1);
    if (it > 1 && std::abs(e0 - prev0) < opt.tol && std::abs(e1 - prev1) < opt.tol)
      return {e0, e1, q.col(0), q.col(1), it};
    prev0 = e0;
    prev1 = e1;
  }
  throw NumericalError("eigensolver did not converge in " + std::to_string(opt.max_iterations) + " iterations");
}

/// Smooth start vectors: monomials x^a y^b ordered by total degree (y absent in 1D).
inline Eigen::MatrixXd start_block(const PillarGeometry& g, int cols) {
  const auto x = grid_axis(g);
  const int n = g.grid_points;
  const auto m = static_cast<Eigen::Index>(g.unknowns());
  Eigen::MatrixXd s(m, cols);
  const double half = 0.5 * g.domain_size;
  for (Eigen::Index p = 0; p < m; ++p) {
    const double px = x[g.dimension == 1 ? p : p / n] / half;
    const double py = g.dimension == 1 ? 0.0 : x[p % n] / half;
    int c = 0;
    for (int deg = 0; c < cols; ++deg)
      for (int ky = 0; ky <= (g.dimension == 1 ? 0 : deg) && c < cols; ++ky)
        s(p, c++) = std::pow(px, deg - ky) * std::pow(py, ky);
  }
  return s;
}

inline HoppingEstimate finish(const PillarGeometry& g, const LowestPair& lp, int components,
                              const SolverOptions& opt) {
  HoppingEstimate r;
  r.e0 = lp.e0;
  r.e1 = lp.e1;
  r.j_sys = 0.5 * (lp.e1 - lp.e0);
  r.iterations = lp.iterations;
  r.bound_doublet = lp.e1 < 0.0;
  const auto m = static_cast<int>(g.unknowns());
  const auto parity = [&](const Eigen::VectorXd& v) {
    double s = 0.0;
    for (int c = 0; c < components; ++c)
      for (int p = 0; p < m; ++p) s += v(c * m + p) * v(c * m + mirror_index(g, p));
    return s / v.squaredNorm();
  };
  r.parity0 = parity(lp.v0);
  r.parity1 = parity(lp.v1);
  if (opt.keep_maps) {
    const double cell = std::pow(g.spacing(), g.dimension);
    r.ground = lp.v0.head(m).cwiseAbs2() / (lp.v0.squaredNorm() * cell);
    r.excited = lp.v1.head(m).cwiseAbs2() / (lp.v1.squaredNorm() * cell);
  }
  if (opt.require_bound && !r.bound_doublet)
    throw NumericalError("no tunneling doublet: fewer than two bound states below 0 meV");
  return r;
}

}  // namespace detail

/// H = -(hbar^2 / 2 m_eff) laplacian + V on the interior grid.
inline Eigen::SparseMatrix<double> pillar_hamiltonian(const PillarGeometry& g) {
  validate(g);
  const auto v = detail::well_potential(g);
  const auto m = static_cast<Eigen::Index>(g.unknowns());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(m) * (1 + 2 * g.dimension));
  detail::add_block(t, g, g.m_eff, v, 0);
  Eigen::SparseMatrix<double> h(m, m);
  h.setFromTriplets(t.begin(), t.end());
  return h;
}

/// Two lowest states of the double well and J_sys = (E1 - E0) / 2.
inline HoppingEstimate solve_double_well(const PillarGeometry& g, const SolverOptions& opt = {}) {
  const auto h = pillar_hamiltonian(g);
  const auto lp = detail::lowest_pair(h, -g.well_depth, detail::start_block(g, opt.block), opt);
  return detail::finish(g, lp, 1, opt);
}

/// Two-component Hamiltonian [[H_sys, delta I], [delta I, -(hbar^2/2 m_c) laplacian]].
inline Eigen::SparseMatrix<double> cavity_hamiltonian(const PillarGeometry& g, const CavityParams& c) {
  validate(g);
  if (!(c.m_c > 0.0)) throw ConfigError("m_c must be positive");
  if (!(c.m_c < g.m_eff)) throw ConfigError("m_c must be smaller than m_eff");
  if (!std::isfinite(c.delta)) throw ConfigError("delta must be finite");
  const auto v = detail::well_potential(g);
  const int m = static_cast<int>(g.unknowns());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(m) * (4 + 4 * g.dimension));
  detail::add_block(t, g, g.m_eff, v, 0);
  detail::add_block(t, g, c.m_c, {}, m);
  if (c.delta != 0.0)
    for (int p = 0; p < m; ++p) {
      t.emplace_back(p, m + p, c.delta);
      t.emplace_back(m + p, p, c.delta);
    }
  Eigen::SparseMatrix<double> h(2 * m, 2 * m);
  h.setFromTriplets(t.begin(), t.end());
  return h;
}

inline HoppingEstimate solve_cavity_coupled(const PillarGeometry& g, const CavityParams& c,
                                            const SolverOptions& opt = {}) {
  const auto h = cavity_hamiltonian(g, c);
  const int m = static_cast<int>(g.unknowns());
  Eigen::MatrixXd start = Eigen::MatrixXd::Zero(2 * m, opt.block);
  start.topRows(m) = detail::start_block(g, opt.block);
  start.bottomRows(m) = 1e-3 * start.topRows(m);
  const auto lp = detail::lowest_pair(h, -g.well_depth - std::abs(c.delta), start, opt);
  return detail::finish(g, lp, 2, opt);
}

enum class PillarVariable { depth, distance, m_eff, delta };

struct PillarRow {
  double value = 0.0;
  double j_sys = 0.0;  // meV
  std::string material;
  double gamma_qd = 0.0;
  double ratio = 0.0;  // j_sys / gamma_qd
};

/// Applies one sweep value. distance is the edge-to-edge gap between wells.
inline void apply_variable(PillarGeometry& g, CavityParams& c, PillarVariable var, double value) {
  switch (var) {
    case PillarVariable::depth: g.well_depth = value; break;
    case PillarVariable::distance: g.center_separation = g.well_diameter + value; break;
    case PillarVariable::m_eff: g.m_eff = value; break;
    case PillarVariable::delta: c.delta = value; break;
  }
}

/// One row per grid value per material. With cavity set, every point uses the
/// coupled solver; sweeping delta requires it.
inline std::vector<PillarRow> sweep_pillars(PillarVariable var, std::span<const double> grid, const PillarGeometry& g,
                                            std::optional<CavityParams> cavity = std::nullopt,
                                            const SolverOptions& opt = {}, int threads = 1) {
  if (var == PillarVariable::delta && !cavity) cavity = CavityParams{};
  std::vector<double> j(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    PillarGeometry gi = g;
    CavityParams ci = cavity.value_or(CavityParams{});
    apply_variable(gi, ci, var, grid[i]);
    j[i] = cavity ? solve_cavity_coupled(gi, ci, opt).j_sys : solve_double_well(gi, opt).j_sys;
  });
  std::vector<PillarRow> rows;
  const auto mats = material_presets();
  rows.reserve(grid.size() * mats.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (const auto& mat : mats) rows.push_back({grid[i], j[i], mat.name, mat.gamma_qd, j[i] / mat.gamma_qd});
  return rows;
}

}  // namespace sshphoton
