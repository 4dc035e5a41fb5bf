#pragma once

// Brute-force many-body reference for small chains. States live in the full
// 2^N spin space (bit j set = emitter j excited); the Hamiltonian
//   H = sum_j eps_j(t) s+_j s-_j + sum_j J_j (s+_j s-_{j+1} + h.c.)
// conserves the excitation number, so every step exponentiates each occupied
// excitation block by dense diagonalisation.

#include <Eigen/Dense>

#include <bit>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sshphoton/dynamics.hpp"
#include "sshphoton/errors.hpp"
#include "sshphoton/lattice.hpp"
#include "sshphoton/noise.hpp"
#include "sshphoton/units.hpp"

namespace sshphoton::oracle {

using cplx = std::complex<double>;

inline constexpr int kMaxSites = 12;

struct SpinState {
  int n_sites = 0;
  Eigen::VectorXcd amplitudes;  // length 2^n_sites

  double norm() const { return amplitudes.norm(); }
};

/// Basis states with exactly k excitations, ascending.
inline std::vector<std::uint32_t> sector_states(int n, int k) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t s = 0; s < (1u << n); ++s)
    if (std::popcount(s) == k) out.push_back(s);
  return out;
}

/// Matrix of H restricted to the given sector states.
inline Eigen::MatrixXd sector_hamiltonian(std::span<const double> onsite, std::span<const double> hopping,
                                          const std::vector<std::uint32_t>& states) {
  const auto d = static_cast<Eigen::Index>(states.size());
  std::map<std::uint32_t, Eigen::Index> index;
  for (Eigen::Index i = 0; i < d; ++i) index[states[i]] = i;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  const int n = static_cast<int>(onsite.size());
  for (Eigen::Index i = 0; i < d; ++i) {
    const std::uint32_t s = states[i];
    for (int j = 0; j < n; ++j)
      if (s >> j & 1u) h(i, i) += onsite[j];
    for (int j = 0; j + 1 < n; ++j) {
      const bool a = s >> j & 1u, b = s >> (j + 1) & 1u;
      if (a == b) continue;
      // s+_j s-_{j+1} and its conjugate both flip the pair (j, j+1).
      const std::uint32_t t = s ^ (1u << j) ^ (1u << (j + 1));
      h(index.at(t), i) += hopping[j];
    }
  }
  return h;
}

/// Full 2^N Hamiltonian (dense; intended for N <= 8 in tests).
inline Eigen::MatrixXd spin_hamiltonian(std::span<const double> onsite, std::span<const double> hopping) {
  const int n = static_cast<int>(onsite.size());
  if (n > kMaxSites) throw ConfigError("oracle supports at most 12 sites");
  std::vector<std::uint32_t> all(1u << n);
  for (std::uint32_t s = 0; s < all.size(); ++s) all[s] = s;
  return sector_hamiltonian(onsite, hopping, all);
}

inline SpinState single_excitation(const Eigen::VectorXcd& amplitudes) {
  const int n = static_cast<int>(amplitudes.size());
  if (n < 1 || n > kMaxSites) throw ConfigError("oracle supports 1 to 12 sites");
  SpinState s;
  s.n_sites = n;
  s.amplitudes = Eigen::VectorXcd::Zero(Eigen::Index{1} << n);
  for (int j = 0; j < n; ++j) s.amplitudes(Eigen::Index{1} << j) = amplitudes(j);
  return s;
}

/// s-_j |psi>.
inline SpinState lower(const SpinState& psi, int site) {
  SpinState out{psi.n_sites, Eigen::VectorXcd::Zero(psi.amplitudes.size())};
  const std::uint32_t bit = 1u << site;
  for (Eigen::Index s = 0; s < psi.amplitudes.size(); ++s)
    if (static_cast<std::uint32_t>(s) & bit) out.amplitudes(s ^ bit) = psi.amplitudes(s);
  return out;
}

/// Total excitation number <sum_j s+_j s-_j>.
inline double excitation_number(const SpinState& psi) {
  double n = 0.0;
  for (Eigen::Index s = 0; s < psi.amplitudes.size(); ++s)
    n += std::popcount(static_cast<std::uint32_t>(s)) * std::norm(psi.amplitudes(s));
  return n;
}

/// Piecewise-constant evolution: step m -> m+1 uses onsite energies sampled at
/// index m. Step propagators are cached per (sector, step).
class ManyBodyEvolution {
 public:
  ManyBodyEvolution(const ChainParams& chain, std::span<const NoiseTrajectory> noise, double dt, std::size_t n_steps)
      : dt_(dt), n_steps_(n_steps) {
    validate(chain, true);
    n_ = chain.n_sites;
    if (n_ > kMaxSites) throw ConfigError("oracle supports at most 12 sites, got " + std::to_string(n_));
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!noise.empty() && noise.size() != static_cast<std::size_t>(n_))
      throw ConfigError("need one noise trajectory per site");
    for (const auto& tr : noise)
      if (tr.samples.size() < n_steps) throw ConfigError("noise trajectory shorter than the evolution window");
    hopping_ = hoppings(chain);
    for (const auto& tr : noise) noise_.push_back(tr.samples);
    for (int k = 0; k <= n_; ++k) sectors_.push_back(sector_states(n_, k));
  }

  int n_sites() const { return n_; }
  double dt() const { return dt_; }
  std::size_t n_steps() const { return n_steps_; }

  /// Advances psi from step `from` to step `to` (to >= from).
  SpinState evolve(SpinState psi, std::size_t from, std::size_t to) {
    if (to < from || to > n_steps_) throw ConfigError("evolution target off the time grid");
    for (int k = 0; k <= n_; ++k) {
      const auto& st = sectors_[k];
      Eigen::VectorXcd block(static_cast<Eigen::Index>(st.size()));
      for (std::size_t i = 0; i < st.size(); ++i) block(static_cast<Eigen::Index>(i)) = psi.amplitudes(st[i]);
      if (block.squaredNorm() == 0.0) continue;
      for (std::size_t m = from; m < to; ++m) block = propagator(k, m) * block;
      for (std::size_t i = 0; i < st.size(); ++i) psi.amplitudes(st[i]) = block(static_cast<Eigen::Index>(i));
    }
    return psi;
  }

  const Eigen::MatrixXcd& propagator(int k, std::size_t m) {
    const auto key = std::make_pair(k, m);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    std::vector<double> onsite(n_, 0.0);
    if (!noise_.empty())
      for (int j = 0; j < n_; ++j) onsite[j] = noise_[j][m];
    const auto h = sector_hamiltonian(onsite, hopping_, sectors_[k]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    const Eigen::VectorXcd phase =
        (es.eigenvalues().cast<cplx>() * cplx(0.0, -dt_ / hbar)).array().exp().matrix();
    const Eigen::MatrixXcd v = es.eigenvectors().cast<cplx>();
    return cache_.emplace(key, v * phase.asDiagonal() * v.adjoint()).first->second;
  }

 private:
  int n_ = 0;
  double dt_;
  std::size_t n_steps_;
  std::vector<double> hopping_;
  std::vector<std::vector<double>> noise_;
  std::vector<std::vector<std::uint32_t>> sectors_;
  std::map<std::pair<int, std::size_t>, Eigen::MatrixXcd> cache_;
};

/// States at steps 0, stride, 2 stride, ... (and the final step).
struct ManyBodyHistory {
  std::size_t stride = 1;
  std::vector<std::size_t> steps;
  std::vector<SpinState> states;

  const SpinState& at_step(std::size_t m) const {
    for (std::size_t i = 0; i < steps.size(); ++i)
      if (steps[i] == m) return states[i];
    throw ConfigError("step " + std::to_string(m) + " is not on the stored grid");
  }
};

inline ManyBodyHistory evolve_many_body(ManyBodyEvolution& evo, const Eigen::VectorXcd& initial,
                                        std::size_t stride = 1) {
  if (initial.size() != evo.n_sites()) throw ConfigError("initial state has wrong length");
  if (stride < 1) throw ConfigError("stride must be positive");
  ManyBodyHistory h;
  h.stride = stride;
  SpinState psi = single_excitation(initial);
  h.steps.push_back(0);
  h.states.push_back(psi);
  for (std::size_t m = 0; m < evo.n_steps();) {
    const std::size_t next = std::min(m + stride, evo.n_steps());
    psi = evo.evolve(std::move(psi), m, next);
    h.steps.push_back(next);
    h.states.push_back(psi);
    m = next;
  }
  return h;
}

/// <s+_j(t) s-_j(t')> for a pure initial state, t = step_t dt, t' = step_tp dt:
/// <psi(t)| s+_j U(t, t') s-_j |psi(t')>, evolving the later-lowered state
/// forward from the earlier time.
inline cplx correlation_many_body(ManyBodyEvolution& evo, const ManyBodyHistory& h, int site, std::size_t step_t,
                                  std::size_t step_tp) {
  if (site < 0 || site >= evo.n_sites()) throw ConfigError("site out of range");
  const SpinState& psi_t = h.at_step(step_t);
  const SpinState& psi_tp = h.at_step(step_tp);
  if (step_t >= step_tp) {
    const SpinState moved = evo.evolve(lower(psi_tp, site), step_tp, step_t);
    return lower(psi_t, site).amplitudes.dot(moved.amplitudes);
  }
  // t < t': <psi(t)| s+ U(t, t') s- |psi(t')> = conj(<psi(t')| s+ U(t', t) s- |psi(t)>).
  const SpinState moved = evo.evolve(lower(psi_t, site), step_t, step_tp);
  return std::conj(lower(psi_tp, site).amplitudes.dot(moved.amplitudes));
}

/// S(E) = Re sum_{m,n} w_m w_n C(t_m, t_n) e^{iE(t_n - t_m)/hbar} dt^2 / (2 pi hbar dt sum_m w_m C(t_m, t_m))
/// over the stored (uniform) history grid with trapezoid weights w.
inline std::vector<double> spectrum_many_body(ManyBodyEvolution& evo, const ManyBodyHistory& h, int site,
                                              std::span<const double> energies) {
  const std::size_t m = h.steps.size();
  if (m < 2) throw ConfigError("history needs at least two points");
  const double step = evo.dt() * static_cast<double>(h.steps[1] - h.steps[0]);
  for (std::size_t i = 1; i < m; ++i)
    if (h.steps[i] - h.steps[i - 1] != h.steps[1] - h.steps[0]) throw ConfigError("history grid must be uniform");
  std::vector<double> w(m, 1.0);
  w.front() = w.back() = 0.5;
  Eigen::MatrixXcd c(m, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      c(a, b) = correlation_many_body(evo, h, site, h.steps[a], h.steps[b]);
      c(b, a) = std::conj(c(a, b));
    }
  double occ = 0.0;
  for (std::size_t a = 0; a < m; ++a) occ += w[a] * c(a, a).real();
  occ *= step;
  std::vector<double> out(energies.size(), 0.0);
  if (!(occ > 0.0)) return out;
  for (std::size_t e = 0; e < energies.size(); ++e) {
    cplx sum = 0.0;
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) {
        const double dtab = (static_cast<double>(h.steps[b]) - static_cast<double>(h.steps[a])) * evo.dt();
        sum += w[a] * w[b] * c(a, b) * std::polar(1.0, energies[e] * dtab / hbar);
      }
    out[e] = sum.real() * step * step / (2.0 * pi * hbar * occ);
  }
  return out;
}

struct OracleComparison {
  int n_sites = 0;
  double max_deviation = 0.0;  // 1/meV
  double peak = 0.0;           // largest free-fermion spectral value

  double relative() const { return peak > 0.0 ? max_deviation / peak : max_deviation; }
};

/// Emission spectrum at site 1 from the edge-mode start along one fixed noise
/// realization, computed by the many-body reference and by single-particle
/// propagation, both sampled every `stride` steps.
inline OracleComparison compare_with_dynamics(const ChainParams& chain, const NoiseParams& noise, int realization,
                                              std::size_t stride, std::span<const double> energies) {
  const std::size_t steps = noise.n_steps();
  if (stride < 1 || steps % stride != 0) throw ConfigError("stride must divide the number of time steps");
  const auto tr = sample_trajectories(noise, chain.n_sites, realization);
  const Eigen::VectorXcd psi0 = edge_mode(chain).vector.cast<cplx>();
  ManyBodyEvolution evo(chain, tr, noise.dt, steps);
  const auto hist = evolve_many_body(evo, psi0, stride);
  const auto mb = spectrum_many_body(evo, hist, 0, energies);

  const auto full = propagate_trajectory(build_hamiltonian(chain, {}, true), tr, noise.dt, steps, psi0, 0).emission;
  Amplitudes coarse;
  coarse.dt = noise.dt * static_cast<double>(stride);
  for (std::size_t m = 0; m <= steps; m += stride) coarse.values.push_back(full.values[m]);
  const auto ref = spectrum_at(coarse, energies);

  OracleComparison c;
  c.n_sites = chain.n_sites;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    c.peak = std::max(c.peak, ref.density[i]);
    c.max_deviation = std::max(c.max_deviation, std::abs(mb[i] - ref.density[i]));
  }
  return c;
}

}  // namespace sshphoton::oracle
