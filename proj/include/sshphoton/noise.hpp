#pragma once

// Stationary Gaussian onsite noise with autocovariance
//   F(dt) = epsilon^2 exp(-dt^2 / (2 tau^2)).
// White Gaussian samples are convolved with a Gaussian kernel of width
// tau/sqrt(2), normalised so that the discrete autocovariance reproduces F.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sshphoton/errors.hpp"
#include "sshphoton/fft.hpp"
#include "sshphoton/parallel.hpp"
#include "sshphoton/units.hpp"

namespace sshphoton {

struct NoiseParams {
  double epsilon = 0.5;  // meV
  double tau = 0.5;      // ps
  double dt = 0.002;     // ps
  double t_total = 400.0;  // ps
  int n_realizations = 10;
  std::uint64_t seed = 20240101;

  std::size_t n_steps() const { return static_cast<std::size_t>(std::llround(t_total / dt)); }
};

inline void validate(const NoiseParams& p) {
  if (!(p.epsilon >= 0.0) || !std::isfinite(p.epsilon)) throw ConfigError("epsilon must be non-negative");
  if (!(p.tau > 0.0)) throw ConfigError("tau must be positive");
  if (!(p.dt > 0.0)) throw ConfigError("dt must be positive");
  if (p.dt > p.tau / 10.0 * (1.0 + 1e-9))
    throw ConfigError("dt must resolve the correlation time (dt <= tau/10)");
  if (p.t_total < 20.0 * p.tau * (1.0 - 1e-9)) throw ConfigError("t_total must be at least 20 tau");
  if (p.n_realizations < 1) throw ConfigError("n_realizations must be positive");
}

struct NoiseTrajectory {
  int site_index = 0;  // 0-based
  std::vector<double> samples;  // meV, one per time step
};

/// F(t) = epsilon^2 exp(-t^2/(2 tau^2)).
inline double autocovariance(const NoiseParams& p, double lag) {
  return p.epsilon * p.epsilon * std::exp(-lag * lag / (2.0 * p.tau * p.tau));
}

/// F~(omega) = epsilon^2 tau sqrt(2 pi) exp(-(omega tau)^2 / 2), omega in rad/ps.
inline double spectral_density(double epsilon, double tau, double omega) {
  return epsilon * epsilon * tau * std::sqrt(2.0 * pi) * std::exp(-0.5 * omega * omega * tau * tau);
}

inline std::vector<double> spectral_density(const NoiseParams& p, std::span<const double> omega) {
  std::vector<double> out(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i) out[i] = spectral_density(p.epsilon, p.tau, omega[i]);
  return out;
}

/// Independent generator for one (seed, realization, site) triple.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream_tag, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_tag), static_cast<std::uint32_t>(a),
                    static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

inline constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;

/// Shared kernel transform for overlap-save convolution in blocks. Each
/// (realization, site) pair owns an independent white-noise stream, so the
/// output is deterministic regardless of evaluation order.
class NoiseGenerator {
 public:
  explicit NoiseGenerator(const NoiseParams& p) : p_(p) {
    validate(p_);
    n_ = p_.n_steps();
    half_ = static_cast<std::size_t>(std::ceil(6.0 * p_.tau / p_.dt));
    const std::size_t taps = 2 * half_ + 1;
    segment_ = fft::good_size(std::max<std::size_t>(4 * taps, 16384));
    block_ = segment_ - 2 * half_;

    kernel_.resize(taps);
    const double sigma = p_.tau / std::sqrt(2.0);
    double norm2 = 0.0;
    for (std::size_t k = 0; k < taps; ++k) {
      const double t = (static_cast<double>(k) - static_cast<double>(half_)) * p_.dt;
      kernel_[k] = std::exp(-t * t / (2.0 * sigma * sigma));
      norm2 += kernel_[k] * kernel_[k];
    }
    for (double& g : kernel_) g *= p_.epsilon / std::sqrt(norm2);

    fft::Buffer<double> kin(segment_);
    fft::Buffer<std::complex<double>> kout(segment_ / 2 + 1);
    for (std::size_t k = 0; k < taps; ++k) kin[k] = kernel_[k];
    fft::make_r2c(segment_, kin, kout).execute();
    kernel_hat_.assign(kout.data(), kout.data() + kout.size());
  }

  const NoiseParams& params() const { return p_; }
  std::size_t n_samples() const { return n_; }
  std::size_t block_size() const { return block_; }
  std::span<const double> kernel() const { return kernel_; }

  /// FFT scratch; one per thread.
  class Workspace {
   public:
    explicit Workspace(const NoiseGenerator& g)
        : in_(g.segment_), out_(g.segment_ / 2 + 1),
          fwd_(fft::make_r2c(g.segment_, in_, out_)), inv_(fft::make_c2r(g.segment_, out_, in_)) {}

   private:
    friend class NoiseGenerator;
    fft::Buffer<double> in_;
    fft::Buffer<std::complex<double>> out_;
    fft::Plan fwd_, inv_;
  };

  /// Sequential producer of one site's trajectory, block_size() samples at a time.
  class Stream {
   public:
    Stream(const NoiseGenerator& g, int realization, int site)
        : g_(&g),
          rng_(stream_rng(g.p_.seed, kNoiseStream, static_cast<std::uint64_t>(realization),
                          static_cast<std::uint64_t>(site))),
          white_(g.segment_, 0.0) {}

    /// Writes min(block_size, remaining) samples into out; returns the count.
    std::size_t next(Workspace& ws, std::span<double> out) {
      const NoiseGenerator& g = *g_;
      const std::size_t count = std::min(g.block_, g.n_ - produced_);
      if (count == 0) return 0;
      if (g.p_.epsilon == 0.0) {
        std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(count), 0.0);
        produced_ += count;
        return count;
      }
      const std::size_t keep = 2 * g.half_;
      if (produced_ == 0) {
        for (std::size_t i = 0; i < g.segment_; ++i) white_[i] = gauss_(rng_);
      } else {
        std::copy(white_.end() - static_cast<std::ptrdiff_t>(keep), white_.end(), white_.begin());
        for (std::size_t i = keep; i < g.segment_; ++i) white_[i] = gauss_(rng_);
      }
      std::copy(white_.begin(), white_.end(), ws.in_.data());
      ws.fwd_.execute();
      for (std::size_t i = 0; i < ws.out_.size(); ++i) ws.out_[i] *= g.kernel_hat_[i];
      ws.inv_.execute();
      // Circular convolution is free of wrap-around from index 2*half on.
      const double scale = 1.0 / static_cast<double>(g.segment_);
      for (std::size_t i = 0; i < count; ++i) out[i] = ws.in_[keep + i] * scale;
      produced_ += count;
      return count;
    }

   private:
    const NoiseGenerator* g_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> gauss_{0.0, 1.0};
    std::vector<double> white_;
    std::size_t produced_ = 0;
  };

  /// Full trajectory of one site.
  NoiseTrajectory sample(int realization, int site) const {
    NoiseTrajectory tr;
    tr.site_index = site;
    tr.samples.assign(n_, 0.0);
    Workspace ws(*this);
    Stream s(*this, realization, site);
    std::size_t at = 0;
    while (at < n_) at += s.next(ws, std::span<double>(tr.samples).subspan(at));
    return tr;
  }

 private:
  NoiseParams p_;
  std::size_t n_ = 0;
  std::size_t half_ = 0;
  std::size_t segment_ = 0;
  std::size_t block_ = 0;
  std::vector<double> kernel_;
  std::vector<std::complex<double>> kernel_hat_;
};

/// One trajectory per site for the given realization.
inline std::vector<NoiseTrajectory> sample_trajectories(const NoiseParams& p, int n_sites, int realization) {
  if (n_sites < 1) throw ConfigError("n_sites must be positive");
  if (realization < 0) throw ConfigError("realization index must be non-negative");
  const NoiseGenerator gen(p);
  std::vector<NoiseTrajectory> out;
  out.reserve(n_sites);
  for (int s = 0; s < n_sites; ++s) out.push_back(gen.sample(realization, s));
  return out;
}

struct LagEstimate {
  double lag = 0.0;  // ps
  double empirical = 0.0;  // meV^2
  double expected = 0.0;
  double std_error = 0.0;  // across independent trajectories

  double z() const { return std_error > 0.0 ? (empirical - expected) / std_error : 0.0; }
};

/// Time-averaged x(t) x(t + lag) per trajectory (site 0 of realizations
/// 0..n_trajectories-1), then mean and standard error across trajectories.
inline std::vector<LagEstimate> autocovariance_check(const NoiseParams& p, int n_trajectories,
                                                     std::span<const double> lags, int threads = 1) {
  validate(p);
  if (n_trajectories < 2) throw ConfigError("need at least two trajectories");
  const NoiseGenerator gen(p);
  std::vector<std::size_t> shift;
  for (double l : lags) {
    if (!(l >= 0.0)) throw ConfigError("lags must be non-negative");
    shift.push_back(static_cast<std::size_t>(std::llround(l / p.dt)));
    if (shift.back() >= gen.n_samples()) throw ConfigError("lag exceeds the trajectory length");
  }
  const auto n = static_cast<std::size_t>(n_trajectories);
  std::vector<double> per(n * lags.size());
  parallel_for(n, threads, [&](std::size_t r) {
    const auto tr = gen.sample(static_cast<int>(r), 0);
    for (std::size_t l = 0; l < shift.size(); ++l) {
      const std::size_t m = tr.samples.size() - shift[l];
      double c = 0.0;
      for (std::size_t i = 0; i < m; ++i) c += tr.samples[i] * tr.samples[i + shift[l]];
      per[r * lags.size() + l] = c / static_cast<double>(m);
    }
  });
  std::vector<LagEstimate> out(lags.size());
  for (std::size_t l = 0; l < lags.size(); ++l) {
    double mean = 0.0, var = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += per[r * lags.size() + l];
    mean /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) var += std::pow(per[r * lags.size() + l] - mean, 2);
    var /= static_cast<double>(n - 1);
    out[l] = {static_cast<double>(shift[l]) * p.dt, mean, autocovariance(p, static_cast<double>(shift[l]) * p.dt),
              std::sqrt(var / static_cast<double>(n))};
  }
  return out;
}

}  // namespace sshphoton
