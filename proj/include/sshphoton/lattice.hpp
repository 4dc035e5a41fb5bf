#pragma once

// SSH chain geometry: hopping pattern, single-particle Hamiltonian, bulk band
// structure, winding number and the noiseless edge mode.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sshphoton/errors.hpp"
#include "sshphoton/units.hpp"

namespace sshphoton {

/// SSH lattice definition. Hoppings are J = j0 sin^2(theta) on odd bonds
/// (1-2, 3-4, ...) and J' = j0 cos^2(theta) on even bonds (2-3, 4-5, ...).
struct ChainParams {
  int n_sites = 80;
  double j0 = 30.0;  // meV
  double theta = pi / 4.2;

  double j() const { return j0 * std::sin(theta) * std::sin(theta); }
  double j_prime() const { return j0 * std::cos(theta) * std::cos(theta); }

  /// theta < pi/4, i.e. J < J'.
  bool nontrivial() const { return j_prime() - j() > 1e-12 * std::max(j0, 1.0); }
};

/// Throws ConfigError on invalid parameters. Odd chains are rejected unless
/// allow_odd is set (generic, non-chain use).
inline void validate(const ChainParams& p, bool allow_odd = false) {
  if (p.n_sites < 1) throw ConfigError("n_sites must be positive");
  if (!(p.j0 >= 0.0) || !std::isfinite(p.j0)) throw ConfigError("j0 must be a finite non-negative energy");
  if (!(p.theta >= 0.0 && p.theta <= pi / 2 + 1e-12))
    throw ConfigError("theta must lie in [0, pi/2]");
  if (p.n_sites % 2 != 0 && p.n_sites != 1 && !allow_odd)
    throw ConfigError("n_sites must be even (whole unit cells); got " + std::to_string(p.n_sites));
}

/// Bond amplitudes J_1..J_{N-1}, alternating J, J', J, ...
inline std::vector<double> hoppings(const ChainParams& p) {
  std::vector<double> h(p.n_sites > 1 ? static_cast<std::size_t>(p.n_sites - 1) : 0);
  const double j = p.j(), jp = p.j_prime();
  for (std::size_t b = 0; b < h.size(); ++b) h[b] = (b % 2 == 0) ? j : jp;
  return h;
}

/// Real symmetric tridiagonal single-particle Hamiltonian (meV).
struct SingleParticleHamiltonian {
  std::vector<double> onsite;   // N diagonal entries
  std::vector<double> hopping;  // N-1 off-diagonal entries

  int size() const { return static_cast<int>(onsite.size()); }

  Eigen::MatrixXd dense() const {
    const int n = size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = onsite[i];
    for (int i = 0; i + 1 < n; ++i) m(i, i + 1) = m(i + 1, i) = hopping[i];
    return m;
  }

  /// Ascending eigenvalues (and optionally eigenvectors as columns).
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> diagonalize(bool vectors = true) const {
    const int n = size();
    Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(onsite.data(), n);
    Eigen::VectorXd sub(std::max(n - 1, 0));
    for (int i = 0; i + 1 < n; ++i) sub(i) = hopping[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver failed");
    return es;
  }
};

/// Symmetric tridiagonal H with diagonal onsite[j] and couplings +J_j.
/// An empty onsite span means zero onsite energies.
inline SingleParticleHamiltonian build_hamiltonian(const ChainParams& p, std::span<const double> onsite = {},
                                                   bool allow_odd = false) {
  validate(p, allow_odd);
  if (!onsite.empty() && onsite.size() != static_cast<std::size_t>(p.n_sites))
    throw ConfigError("onsite energies must have length n_sites");
  SingleParticleHamiltonian h;
  h.onsite = onsite.empty() ? std::vector<double>(p.n_sites, 0.0)
                            : std::vector<double>(onsite.begin(), onsite.end());
  h.hopping = hoppings(p);
  return h;
}

// ---------------------------------------------------------------------------
// Bulk two-band model
// ---------------------------------------------------------------------------

struct BandStructure {
  std::vector<double> k;
  std::vector<double> upper;  // E+(k)
  std::vector<double> lower;  // E-(k) = -E+(k)
  double gap = 0.0;           // 2|J - J'|
  double gap_numeric = 0.0;   // min_k (E+ - E-) on the grid
};

inline BandStructure band_structure(const ChainParams& p, int n_k = 1024) {
  validate(p, true);
  if (n_k < 2) throw ConfigError("n_k must be at least 2");
  const double j = p.j(), jp = p.j_prime();
  BandStructure b;
  b.k.resize(n_k);
  b.upper.resize(n_k);
  b.lower.resize(n_k);
  b.gap_numeric = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_k; ++i) {
    const double k = -pi + 2.0 * pi * i / (n_k - 1);
    const double e = std::sqrt(std::max(0.0, j * j + jp * jp + 2.0 * j * jp * std::cos(k)));
    b.k[i] = k;
    b.upper[i] = e;
    b.lower[i] = -e;
    b.gap_numeric = std::min(b.gap_numeric, 2.0 * e);
  }
  b.gap = 2.0 * std::abs(j - jp);
  return b;
}

inline double band_gap(const ChainParams& p) { return 2.0 * std::abs(p.j() - p.j_prime()); }

// ---------------------------------------------------------------------------
// Winding number
// ---------------------------------------------------------------------------

struct WindingResult {
  std::optional<int> value;  // empty at the transition point
  double integral = 0.0;     // raw quadrature before rounding
};

/// W = (1/2 pi i) \oint d log h(k), h(k) = J + J' e^{ik}, by periodic
/// trapezoidal quadrature. Undefined when J == J' (h passes through zero).
/// The quadrature error decays as (min(J,J')/max(J,J'))^n_k, so n_k is raised
/// near the transition (up to 2^24 points).
inline WindingResult winding_number(const ChainParams& p, int n_k = 1024, double round_tol = 1e-3) {
  validate(p, true);
  const double j = p.j(), jp = p.j_prime();
  WindingResult r;
  if (std::abs(j - jp) <= 1e-12 * std::max(1.0, p.j0)) return r;

  const double ratio = std::min(j, jp) / std::max(j, jp);
  if (ratio > 0.0) {
    const double needed = 12.0 / -std::log(ratio);
    n_k = static_cast<int>(std::min<double>(std::max<double>(n_k, std::ceil(needed)), 1 << 24));
  }

  // d/dk log h = i J' e^{ik} / h(k); the 1/(2 pi i) prefactor leaves the real part.
  double sum = 0.0;
  for (int i = 0; i < n_k; ++i) {
    const double k = -pi + 2.0 * pi * i / n_k;
    const std::complex<double> e(std::cos(k), std::sin(k));
    const std::complex<double> h = j + jp * e;
    sum += (jp * e / h).real();
  }
  r.integral = sum / n_k;
  const double rounded = std::round(r.integral);
  if (std::abs(r.integral - rounded) > round_tol) return r;
  r.value = static_cast<int>(rounded);

  const int sign_test = (j < jp) ? 1 : 0;
  if (*r.value != sign_test)
    throw NumericalError("winding quadrature disagrees with J < J' test; increase n_k");
  return r;
}

// ---------------------------------------------------------------------------
// Edge mode
// ---------------------------------------------------------------------------

struct EdgeMode {
  Eigen::VectorXd vector;  // unit norm
  double energy = 0.0;     // signed; expectation value if rotated
  bool edge_localized = false;
  bool rotated = false;     // in-gap pair mixed to maximise weight on site 1
  double pair_splitting = 0.0;
};

/// Noiseless in-gap state used as the initial excitation. The two eigenvalues
/// closest to zero form the in-gap pair; when their splitting is below
/// degeneracy_tol they are rotated into the combination with maximal weight on
/// site 1, otherwise the member with E >= 0 is returned.
inline EdgeMode edge_mode(const ChainParams& p, std::optional<double> degeneracy_tol = std::nullopt) {
  const auto h = build_hamiltonian(p, {}, true);
  const int n = h.size();
  const double tol = degeneracy_tol.value_or(1e-3 * std::max(p.j0, 1e-300));
  const auto es = h.diagonalize(true);
  const auto& w = es.eigenvalues();
  const auto& v = es.eigenvectors();

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(w(a)) < std::abs(w(b)); });

  EdgeMode m;
  if (n == 1) {
    m.vector = Eigen::VectorXd::Ones(1);
    m.energy = w(0);
  } else {
    int a = order[0], b = order[1];
    if (w(a) < w(b)) std::swap(a, b);  // a: upper member
    m.pair_splitting = std::abs(w(a) - w(b));
    if (m.pair_splitting < tol) {
      double ca = v(0, a), cb = v(0, b);
      const double norm = std::hypot(ca, cb);
      if (norm > 0.0) {
        ca /= norm;
        cb /= norm;
      } else {
        ca = 1.0;
        cb = 0.0;
      }
      m.vector = ca * v.col(a) + cb * v.col(b);
      m.energy = ca * ca * w(a) + cb * cb * w(b);
      m.rotated = true;
    } else {
      m.vector = v.col(a);
      m.energy = w(a);
    }
  }
  m.vector.normalize();
  if (m.vector(0) < 0.0) m.vector = -m.vector;

  double left = 0.0, right = 0.0;
  for (int i = 0; i < n; ++i) (2 * i < n ? left : right) += m.vector(i) * m.vector(i);
  m.edge_localized = p.nontrivial() && (n == 1 || left > right + 1e-6);
  return m;
}

}  // namespace sshphoton
