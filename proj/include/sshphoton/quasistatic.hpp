#pragma once

// Frozen-disorder ensembles: each sample is the chain Hamiltonian with one
// static Gaussian onsite vector of standard deviation epsilon.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sshphoton/errors.hpp"
#include "sshphoton/lattice.hpp"
#include "sshphoton/noise.hpp"
#include "sshphoton/parallel.hpp"

namespace sshphoton {

struct DisorderEnsemble {
  ChainParams chain{80, 5.0, pi / 4.2};
  double epsilon = 0.5;  // meV
  int n_samples = 2000;
  std::uint64_t seed = 20240101;
};

inline void validate(const DisorderEnsemble& e) {
  validate(e.chain);
  if (!(e.epsilon >= 0.0) || !std::isfinite(e.epsilon)) throw ConfigError("epsilon must be non-negative");
  if (e.n_samples < 1) throw ConfigError("n_samples must be positive");
}

inline constexpr std::uint64_t kDisorderStream = 0x7374617469ULL;

/// Onsite vector of sample s. Depends only on (seed, s, n_sites), so every
/// theta sees the same disorder draws.
inline std::vector<double> disorder_sample(const DisorderEnsemble& e, int sample) {
  auto rng = stream_rng(e.seed, kDisorderStream, static_cast<std::uint64_t>(sample), 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(e.chain.n_sites);
  for (double& x : v) x = e.epsilon * gauss(rng);
  return v;
}

struct DosHistogram {
  double theta = 0.0;
  std::vector<double> bin_edges;  // meV, size bins + 1
  std::vector<double> density;    // per meV per site, size bins
  double outside_fraction = 0.0;  // eigenvalues falling outside the bins

  /// Sum of density * width.
  double integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < density.size(); ++i) s += density[i] * (bin_edges[i + 1] - bin_edges[i]);
    return s;
  }
};

inline std::vector<double> uniform_edges(double e_min, double e_max, int bins) {
  if (bins < 1) throw ConfigError("bins must be positive");
  if (!(e_max > e_min)) throw ConfigError("energy range must be non-empty");
  std::vector<double> edges(bins + 1);
  for (int i = 0; i < bins; ++i) edges[i] = e_min + (e_max - e_min) * i / bins;
  edges[bins] = e_max;
  return edges;
}

namespace detail {

inline void accumulate(std::span<const double> edges, std::span<const double> values, std::vector<double>& counts,
                       std::size_t& outside) {
  const std::size_t bins = edges.size() - 1;
  const double lo = edges.front(), hi = edges.back();
  for (double x : values) {
    if (x < lo || x > hi) {
      ++outside;
      continue;
    }
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    std::size_t b = static_cast<std::size_t>(it - edges.begin());
    b = b == 0 ? 0 : b - 1;
    counts[std::min(b, bins - 1)] += 1.0;
  }
}

}  // namespace detail

/// Average density of states D(E) = <Tr delta(H - E)> / N for one theta.
inline DosHistogram dos_histogram(const DisorderEnsemble& ens, std::span<const double> edges, int threads = 1) {
  validate(ens);
  if (edges.size() < 2) throw ConfigError("need at least one energy bin");
  if (!std::is_sorted(edges.begin(), edges.end())) throw ConfigError("bin edges must ascend");
  const int n = ens.chain.n_sites;
  std::vector<std::vector<double>> eig(ens.n_samples);
  parallel_for(static_cast<std::size_t>(ens.n_samples), threads, [&](std::size_t s) {
    const auto onsite = disorder_sample(ens, static_cast<int>(s));
    const auto es = build_hamiltonian(ens.chain, onsite).diagonalize(false);
    eig[s].assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
  });

  DosHistogram h;
  h.theta = ens.chain.theta;
  h.bin_edges.assign(edges.begin(), edges.end());
  std::vector<double> counts(edges.size() - 1, 0.0);
  std::size_t outside = 0;
  for (const auto& e : eig) detail::accumulate(edges, e, counts, outside);
  const double total = static_cast<double>(ens.n_samples) * n;
  h.density.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) h.density[i] = counts[i] / (total * (edges[i + 1] - edges[i]));
  h.outside_fraction = static_cast<double>(outside) / total;
  return h;
}

/// dos_histogram for every theta of the grid, sharing the disorder draws.
inline std::vector<DosHistogram> dos_map(const DisorderEnsemble& ens, std::span<const double> thetas,
                                         std::span<const double> edges, int threads = 1) {
  std::vector<DosHistogram> out;
  out.reserve(thetas.size());
  for (double t : thetas) {
    DisorderEnsemble e = ens;
    e.chain.theta = t;
    out.push_back(dos_histogram(e, edges, threads));
  }
  return out;
}

struct EdgeEigStats {
  double theta = 0.0;
  std::vector<double> samples;       // two in-gap eigenvalues per realization, meV
  std::vector<double> localization;  // weight within n_sites/4 of either end, per sample
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  double gap = 0.0;  // clean gap 2|J - J'|
  bool ambiguous = false;  // gap <= 4 epsilon: |E| selection may pick bulk states
  std::vector<double> hist_edges;
  std::vector<double> hist_density;  // per meV, integrates to 1 over the bins
};

/// In-gap eigenvalue statistics for theta < pi/4. Per realization the two
/// eigenvalues of smallest |E| are taken as the edge pair.
inline EdgeEigStats edge_eigenvalue_stats(const DisorderEnsemble& ens, int hist_bins = 60, int threads = 1) {
  validate(ens);
  if (!ens.chain.nontrivial()) throw ConfigError("edge statistics need theta < pi/4");
  if (ens.chain.n_sites < 2) throw ConfigError("edge statistics need at least two sites");
  if (hist_bins < 1) throw ConfigError("hist_bins must be positive");
  const int n = ens.chain.n_sites;
  const int edge_width = std::max(1, n / 4);
  std::vector<double> values(2 * static_cast<std::size_t>(ens.n_samples));
  std::vector<double> loc(values.size());
  parallel_for(static_cast<std::size_t>(ens.n_samples), threads, [&](std::size_t s) {
    const auto onsite = disorder_sample(ens, static_cast<int>(s));
    const auto es = build_hamiltonian(ens.chain, onsite).diagonalize(true);
    const auto& w = es.eigenvalues();
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::partial_sort(order.begin(), order.begin() + 2, order.end(),
                      [&](int a, int b) { return std::abs(w(a)) < std::abs(w(b)); });
    for (int k = 0; k < 2; ++k) {
      const auto v = es.eigenvectors().col(order[k]);
      values[2 * s + k] = w(order[k]);
      loc[2 * s + k] = v.head(edge_width).squaredNorm() + v.tail(edge_width).squaredNorm();
    }
  });

  EdgeEigStats st;
  st.theta = ens.chain.theta;
  st.gap = band_gap(ens.chain);
  st.ambiguous = !(st.gap > 4.0 * ens.epsilon);
  st.samples = std::move(values);
  st.localization = std::move(loc);
  const double m = static_cast<double>(st.samples.size());
  for (double x : st.samples) st.mean += x;
  st.mean /= m;
  double var = 0.0;
  for (double x : st.samples) var += (x - st.mean) * (x - st.mean);
  st.std = m > 1 ? std::sqrt(var / (m - 1)) : 0.0;

  const auto [lo_it, hi_it] = std::minmax_element(st.samples.begin(), st.samples.end());
  double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  st.hist_edges = uniform_edges(lo, hi, hist_bins);
  std::vector<double> counts(hist_bins, 0.0);
  std::size_t outside = 0;
  detail::accumulate(st.hist_edges, st.samples, counts, outside);
  st.hist_density.resize(hist_bins);
  const double width = (hi - lo) / hist_bins;
  for (int i = 0; i < hist_bins; ++i) st.hist_density[i] = counts[i] / (m * width);
  return st;
}

inline std::vector<EdgeEigStats> edge_eigenvalue_stats(const DisorderEnsemble& ens, std::span<const double> thetas,
                                                       int hist_bins = 60, int threads = 1) {
  std::vector<EdgeEigStats> out;
  out.reserve(thetas.size());
  for (double t : thetas) {
    DisorderEnsemble e = ens;
    e.chain.theta = t;
    out.push_back(edge_eigenvalue_stats(e, hist_bins, threads));
  }
  return out;
}

}  // namespace sshphoton
