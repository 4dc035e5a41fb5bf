#pragma once

// Single-excitation dynamics of the noisy emitter chain and the edge-site
// emission spectrum.
//
// In the one-excitation sector the chain reduces to a single-particle
// amplitude vector psi(t) obeying i hbar d/dt psi = H(t) psi with the
// tridiagonal H of lattice.hpp. The noise is held constant over each step,
// and every step applies exp(-i H(t_m) dt / hbar) through a Chebyshev
// expansion truncated at machine precision. The two-time correlation of the
// emission site factorises, C_j(t, t') = a_j(t)^* a_j(t'), so the double time
// integral of the spectrum collapses to |int a_j(t) e^{i w t} dt|^2.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sshphoton/errors.hpp"
#include "sshphoton/fft.hpp"
#include "sshphoton/lattice.hpp"
#include "sshphoton/lorentzian.hpp"
#include "sshphoton/noise.hpp"
#include "sshphoton/parallel.hpp"
#include "sshphoton/units.hpp"

namespace sshphoton {

using cplx = std::complex<double>;

struct EdgeModeStart {};
struct SiteStart {
  int site = 1;  // 1-based
};
struct CustomStart {
  Eigen::VectorXcd vector;
};
using InitialState = std::variant<EdgeModeStart, SiteStart, CustomStart>;

struct EvolutionConfig {
  ChainParams chain;
  NoiseParams noise;  // also carries dt and t_total
  int emission_site = 1;  // 1-based
  InitialState initial = EdgeModeStart{};
  std::optional<double> degeneracy_tol;  // forwarded to edge_mode

  double dt() const { return noise.dt; }
  double t_total() const { return noise.t_total; }
};

inline void validate(const EvolutionConfig& c) {
  validate(c.chain);
  validate(c.noise);
  if (c.emission_site < 1 || c.emission_site > c.chain.n_sites) throw ConfigError("emission_site out of range");
  if (c.chain.n_sites >= 2 && c.chain.j0 > 0.0 && c.noise.dt > 0.1 * hbar / c.chain.j0 * (1.0 + 1e-9))
    throw ConfigError("dt must resolve the hopping (dt <= 0.1 hbar / J0)");
  if (const auto* s = std::get_if<SiteStart>(&c.initial); s && (s->site < 1 || s->site > c.chain.n_sites))
    throw ConfigError("initial site out of range");
  if (const auto* s = std::get_if<CustomStart>(&c.initial);
      s && s->vector.size() != c.chain.n_sites)
    throw ConfigError("custom initial state has wrong length");
}

inline Eigen::VectorXcd initial_vector(const EvolutionConfig& c) {
  const int n = c.chain.n_sites;
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
  if (std::holds_alternative<EdgeModeStart>(c.initial)) {
    v = edge_mode(c.chain, c.degeneracy_tol).vector.cast<cplx>();
  } else if (const auto* s = std::get_if<SiteStart>(&c.initial)) {
    v(s->site - 1) = 1.0;
  } else {
    v = std::get<CustomStart>(c.initial).vector;
    const double nrm = v.norm();
    if (!(nrm > 0.0)) throw ConfigError("custom initial state is zero");
    v /= nrm;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

/// Emission-site amplitude a_j(t_m) for m = 0..n_steps on a uniform grid.
struct Amplitudes {
  double dt = 0.0;
  std::vector<cplx> values;

  double t_total() const { return dt * static_cast<double>(values.empty() ? 0 : values.size() - 1); }
};

/// exp(-i H dt / hbar) v for tridiagonal H with spectrum inside [-radius, radius].
class ChebyshevPropagator {
 public:
  ChebyshevPropagator(double radius, double dt) : radius_(radius) {
    const double a = radius * dt / hbar;
    coeff_.push_back(cplx(std::cyl_bessel_j(0.0, a), 0.0));
    if (a == 0.0) return;
    const cplx minus_i(0.0, -1.0);
    cplx phase = 1.0;
    for (int k = 1; k < 200; ++k) {
      phase *= minus_i;
      const double jk = std::cyl_bessel_j(static_cast<double>(k), a);
      coeff_.push_back(2.0 * jk * phase);
      if (k > a && std::abs(jk) < 1e-18) break;
    }
  }

  std::size_t terms() const { return coeff_.size(); }

  void apply(std::span<const double> onsite, std::span<const double> hop, std::vector<cplx>& psi) {
    const std::size_t n = psi.size();
    t_prev_ = psi;
    out_.assign(n, cplx(0.0, 0.0));
    for (std::size_t j = 0; j < n; ++j) out_[j] = coeff_[0] * psi[j];
    if (coeff_.size() == 1) {
      psi.swap(out_);
      return;
    }
    const double inv = 1.0 / radius_;
    t_cur_.resize(n);
    scaled_apply(onsite, hop, t_prev_, t_cur_, inv);
    for (std::size_t j = 0; j < n; ++j) out_[j] += coeff_[1] * t_cur_[j];
    t_next_.resize(n);
    for (std::size_t k = 2; k < coeff_.size(); ++k) {
      scaled_apply(onsite, hop, t_cur_, t_next_, 2.0 * inv);
      for (std::size_t j = 0; j < n; ++j) {
        t_next_[j] -= t_prev_[j];
        out_[j] += coeff_[k] * t_next_[j];
      }
      t_prev_.swap(t_cur_);
      t_cur_.swap(t_next_);
    }
    psi.swap(out_);
  }

 private:
  static void scaled_apply(std::span<const double> onsite, std::span<const double> hop, const std::vector<cplx>& x,
                           std::vector<cplx>& y, double scale) {
    const std::size_t n = x.size();
    for (std::size_t j = 0; j < n; ++j) {
      cplx acc = onsite[j] * x[j];
      if (j > 0) acc += hop[j - 1] * x[j - 1];
      if (j + 1 < n) acc += hop[j] * x[j + 1];
      y[j] = scale * acc;
    }
  }

  double radius_;
  std::vector<cplx> coeff_;
  std::vector<cplx> t_prev_, t_cur_, t_next_, out_;
};

struct Propagation {
  Amplitudes emission;
  Eigen::VectorXcd final_state;
  double max_norm_drift = 0.0;
};

/// Evolves `initial` under H(t_m) = H_static + diag(noise_j(t_m)) for n_steps
/// steps, pulling noise in blocks: fill(m0, count, buffer) must write
/// buffer[j][0..count) for every site j. With noisy == false fill is never
/// called and H is static.
template <class Fill>
Propagation propagate_blocks(const SingleParticleHamiltonian& h_static, double dt, std::size_t n_steps,
                             const Eigen::VectorXcd& initial, int emission_index, std::size_t block, Fill&& fill,
                             bool noisy) {
  const std::size_t n = static_cast<std::size_t>(h_static.size());
  if (static_cast<std::size_t>(initial.size()) != n) throw ConfigError("initial state has wrong length");
  if (emission_index < 0 || static_cast<std::size_t>(emission_index) >= n) throw ConfigError("emission site out of range");
  block = std::max<std::size_t>(block, 1);

  double max_static = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double row = std::abs(h_static.onsite[j]);
    if (j > 0) row += std::abs(h_static.hopping[j - 1]);
    if (j + 1 < n) row += std::abs(h_static.hopping[j]);
    max_static = std::max(max_static, row);
  }

  Propagation out;
  out.emission.dt = dt;
  out.emission.values.resize(n_steps + 1);
  std::vector<cplx> psi(initial.data(), initial.data() + n);
  const double norm0 = initial.squaredNorm();
  if (!(norm0 > 0.0)) throw ConfigError("initial state is zero");
  std::vector<double> onsite(h_static.onsite);
  std::vector<std::vector<double>> buf(noisy ? n : 0, std::vector<double>(block, 0.0));

  const auto check_norm = [&](std::size_t m) {
    double nn = 0.0;
    for (const auto& z : psi) nn += std::norm(z);
    const double drift = std::abs(nn - norm0) / norm0;
    out.max_norm_drift = std::max(out.max_norm_drift, drift);
    if (!(drift <= 1e-6))
      throw NumericalError("norm drift " + std::to_string(drift) + " after " + std::to_string(m) +
                           " steps; reduce dt (currently " + std::to_string(dt) + " ps)");
  };

  out.emission.values[0] = psi[emission_index];
  for (std::size_t m0 = 0; m0 < n_steps; m0 += block) {
    const std::size_t count = std::min(block, n_steps - m0);
    double max_noise = 0.0;
    if (noisy) {
      fill(m0, count, buf);
      for (const auto& site : buf)
        for (std::size_t i = 0; i < count; ++i) max_noise = std::max(max_noise, std::abs(site[i]));
    }
    // Gershgorin bound on the spectrum of every H(t_m) in this block.
    ChebyshevPropagator step((max_static + max_noise) * (1.0 + 1e-12) + 1e-300, dt);
    for (std::size_t i = 0; i < count; ++i) {
      if (noisy)
        for (std::size_t j = 0; j < n; ++j) onsite[j] = h_static.onsite[j] + buf[j][i];
      step.apply(onsite, h_static.hopping, psi);
      out.emission.values[m0 + i + 1] = psi[emission_index];
    }
    check_norm(m0 + count);
  }
  check_norm(n_steps);
  out.final_state = Eigen::Map<const Eigen::VectorXcd>(psi.data(), static_cast<Eigen::Index>(n));
  return out;
}

/// Evolution along explicitly given noise trajectories (one per site, or
/// none for the noiseless chain).
inline Propagation propagate_trajectory(const SingleParticleHamiltonian& h_static,
                                        std::span<const NoiseTrajectory> noise, double dt, std::size_t n_steps,
                                        const Eigen::VectorXcd& initial, int emission_index) {
  const std::size_t n = static_cast<std::size_t>(h_static.size());
  if (!noise.empty() && noise.size() != n) throw ConfigError("need one noise trajectory per site");
  for (const auto& tr : noise)
    if (tr.samples.size() < n_steps) throw ConfigError("noise trajectory shorter than the evolution window");
  constexpr std::size_t kBlock = 16384;
  return propagate_blocks(
      h_static, dt, n_steps, initial, emission_index, kBlock,
      [&](std::size_t m0, std::size_t count, std::vector<std::vector<double>>& buf) {
        for (std::size_t j = 0; j < n; ++j)
          std::copy_n(noise[j].samples.begin() + static_cast<std::ptrdiff_t>(m0), count, buf[j].begin());
      },
      !noise.empty());
}

/// Evolution with noise streamed from `gen` for one realization; memory use is
/// independent of the window length.
inline Propagation propagate_streaming(const SingleParticleHamiltonian& h_static, const NoiseGenerator& gen,
                                       int realization, const Eigen::VectorXcd& initial, int emission_index) {
  const std::size_t n = static_cast<std::size_t>(h_static.size());
  NoiseGenerator::Workspace ws(gen);
  std::vector<NoiseGenerator::Stream> streams;
  streams.reserve(n);
  for (std::size_t j = 0; j < n; ++j) streams.emplace_back(gen, realization, static_cast<int>(j));
  const bool noisy = gen.params().epsilon != 0.0;
  return propagate_blocks(
      h_static, gen.params().dt, gen.n_samples(), initial, emission_index, gen.block_size(),
      [&](std::size_t, std::size_t count, std::vector<std::vector<double>>& buf) {
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t got = streams[j].next(ws, buf[j]);
          if (got != count) throw NumericalError("noise stream out of step with propagation");
        }
      },
      noisy);
}

/// Noise realization `realization` of the configured experiment.
inline Amplitudes propagate(const EvolutionConfig& c, int realization) {
  validate(c);
  if (realization < 0 || realization >= c.noise.n_realizations) throw ConfigError("realization index out of range");
  const auto h = build_hamiltonian(c.chain, {}, true);
  const NoiseGenerator gen(c.noise);
  return propagate_streaming(h, gen, realization, initial_vector(c), c.emission_site - 1).emission;
}

// ---------------------------------------------------------------------------
// Two-time correlation
// ---------------------------------------------------------------------------

/// C_j(t_m, t_n) = a_j(t_m)^* a_j(t_n).
class TwoTimeCorrelation {
 public:
  explicit TwoTimeCorrelation(const Amplitudes& a) : a_(&a) {}
  cplx operator()(std::size_t m, std::size_t n) const { return std::conj(a_->values.at(m)) * a_->values.at(n); }
  std::size_t size() const { return a_->values.size(); }
  double dt() const { return a_->dt; }

 private:
  const Amplitudes* a_;
};

inline TwoTimeCorrelation correlation(const Amplitudes& a) { return TwoTimeCorrelation(a); }

// ---------------------------------------------------------------------------
// Spectrum
// ---------------------------------------------------------------------------

struct SpectrumWindow {
  double e_min = -5.0;  // meV
  double e_max = 5.0;
  int oversample = 4;  // zero-padding factor of the time series
};

namespace detail {

inline std::vector<double> trapezoid_weights(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n > 1) w.front() = w.back() = 0.5;
  return w;
}

/// dt * sum_m w_m |a_m|^2
inline double occupation_integral(const Amplitudes& a) {
  const auto w = trapezoid_weights(a.values.size());
  double s = 0.0;
  for (std::size_t m = 0; m < a.values.size(); ++m) s += w[m] * std::norm(a.values[m]);
  return s * a.dt;
}

/// |dt sum_m w_m a_m e^{i E t_m / hbar}|^2 / (2 pi hbar) on the FFT grid within
/// the window; the caller divides by the occupation integral.
inline Spectrum unnormalized_fft(const Amplitudes& a, const SpectrumWindow& win) {
  const std::size_t n = a.values.size();
  const std::size_t nfft = fft::good_size(static_cast<std::size_t>(std::max(win.oversample, 1)) * n);
  fft::Buffer<cplx> in(nfft), out(nfft);
  const auto w = trapezoid_weights(n);
  for (std::size_t m = 0; m < n; ++m) in[m] = w[m] * a.values[m];
  fft::make_c2c(nfft, in, out, FFTW_BACKWARD).execute();

  const double de = 2.0 * pi * hbar / (static_cast<double>(nfft) * a.dt);
  const long half = static_cast<long>(nfft / 2);
  Spectrum s;
  s.resolution = 2.0 * pi * hbar / std::max(a.t_total(), a.dt);
  const long k_lo = std::max(static_cast<long>(std::ceil(win.e_min / de)), -half + (nfft % 2 == 0 ? 1 : 0));
  const long k_hi = std::min(static_cast<long>(std::floor(win.e_max / de)), half - (nfft % 2 == 0 ? 1 : 0));
  const double scale = a.dt * a.dt / (2.0 * pi * hbar);
  for (long k = k_lo; k <= k_hi; ++k) {
    const std::size_t idx = static_cast<std::size_t>(k >= 0 ? k : k + static_cast<long>(nfft));
    s.energy.push_back(static_cast<double>(k) * de);
    s.density.push_back(std::norm(out[idx]) * scale);
  }
  return s;
}

}  // namespace detail

/// Per-realization S(E) = |int_0^T a(t) e^{iwt} dt|^2 / (2 pi hbar int_0^T |a|^2 dt)
/// with E = hbar w, trapezoidal in time, evaluated by zero-padded FFT.
inline Spectrum spectrum(const Amplitudes& a, const SpectrumWindow& win = {}) {
  if (a.values.size() < 2) throw NumericalError("empty amplitude array");
  const double occ = detail::occupation_integral(a);
  if (!(occ > 0.0)) throw NumericalError("no excitation reached the emission site");
  Spectrum s = detail::unnormalized_fft(a, win);
  for (double& d : s.density) d /= occ;
  return s;
}

/// Same functional evaluated by direct summation at arbitrary energies.
inline Spectrum spectrum_at(const Amplitudes& a, std::span<const double> energies) {
  if (a.values.size() < 2) throw NumericalError("empty amplitude array");
  const double occ = detail::occupation_integral(a);
  if (!(occ > 0.0)) throw NumericalError("no excitation reached the emission site");
  const auto w = detail::trapezoid_weights(a.values.size());
  Spectrum s;
  s.resolution = 2.0 * pi * hbar / a.t_total();
  for (double e : energies) {
    cplx acc = 0.0;
    for (std::size_t m = 0; m < a.values.size(); ++m)
      acc += w[m] * a.values[m] * std::polar(1.0, e * a.dt * static_cast<double>(m) / hbar);
    s.energy.push_back(e);
    s.density.push_back(std::norm(acc * a.dt) / (2.0 * pi * hbar * occ));
  }
  return s;
}

inline Spectrum average_spectra(std::span<const Spectrum> spectra) {
  if (spectra.empty()) throw NumericalError("no spectra to average");
  Spectrum avg = spectra.front();
  for (std::size_t r = 1; r < spectra.size(); ++r) {
    if (spectra[r].size() != avg.size()) throw NumericalError("spectra on different grids");
    for (std::size_t i = 0; i < avg.size(); ++i) avg.density[i] += spectra[r].density[i];
  }
  for (double& d : avg.density) d /= static_cast<double>(spectra.size());
  return avg;
}

// ---------------------------------------------------------------------------
// Realization-averaged emission
// ---------------------------------------------------------------------------

enum class AveragingOrder {
  spectra,      // mean of per-realization normalised spectra
  correlation,  // average C(t, t') over realizations, then transform
};

struct EmissionOptions {
  int threads = 1;
  AveragingOrder averaging = AveragingOrder::spectra;
  bool fit = true;
  FitOptions fit_options;
  bool keep_first_amplitudes = false;
};

struct EmissionRecord {
  std::vector<Spectrum> per_realization;
  Spectrum averaged;
  std::optional<LorentzianFit> fit;
  std::string fit_error;  // non-empty when the fit was rejected
  Amplitudes amplitude;  // realization 0, if requested
  double max_norm_drift = 0.0;
};

inline EmissionRecord simulate_emission(const EvolutionConfig& c, const SpectrumWindow& win,
                                        const EmissionOptions& opt = {}) {
  validate(c);
  const int nr = c.noise.n_realizations;
  const auto h = build_hamiltonian(c.chain, {}, true);
  const Eigen::VectorXcd psi0 = initial_vector(c);
  const NoiseGenerator gen(c.noise);

  std::vector<Spectrum> raw(nr);
  std::vector<double> occ(nr, 0.0), drift(nr, 0.0);
  EmissionRecord rec;
  parallel_for(static_cast<std::size_t>(nr), opt.threads, [&](std::size_t r) {
    auto prop = propagate_streaming(h, gen, static_cast<int>(r), psi0, c.emission_site - 1);
    occ[r] = detail::occupation_integral(prop.emission);
    if (!(occ[r] > 0.0)) throw NumericalError("no excitation reached the emission site");
    raw[r] = detail::unnormalized_fft(prop.emission, win);
    drift[r] = prop.max_norm_drift;
    if (r == 0 && opt.keep_first_amplitudes) rec.amplitude = std::move(prop.emission);
  });

  rec.per_realization.resize(nr);
  for (int r = 0; r < nr; ++r) {
    rec.per_realization[r] = raw[r];
    for (double& d : rec.per_realization[r].density) d /= occ[r];
    rec.max_norm_drift = std::max(rec.max_norm_drift, drift[r]);
  }
  if (opt.averaging == AveragingOrder::spectra) {
    rec.averaged = average_spectra(rec.per_realization);
  } else {
    rec.averaged = average_spectra(raw);
    double mean_occ = 0.0;
    for (double o : occ) mean_occ += o / nr;
    for (double& d : rec.averaged.density) d /= mean_occ;
  }
  if (opt.fit) {
    try {
      rec.fit = fit_lorentzian(rec.averaged, opt.fit_options);
    } catch (const NumericalError& e) {
      rec.fit_error = e.what();
    }
  }
  return rec;
}

}  // namespace sshphoton
