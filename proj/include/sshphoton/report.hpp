#pragma once

// CSV layouts of every artifact the command-line front end writes.

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sshphoton/csv.hpp"
#include "sshphoton/dyson.hpp"
#include "sshphoton/lorentzian.hpp"
#include "sshphoton/micropillar.hpp"
#include "sshphoton/noise.hpp"
#include "sshphoton/quasistatic.hpp"
#include "sshphoton/sweep.hpp"

namespace sshphoton::report {

inline void spectrum(std::ostream& os, const Spectrum& s) {
  CsvWriter w(os, {"omega_meV", "S_per_meV"});
  for (std::size_t i = 0; i < s.size(); ++i) w.row({s.energy[i], s.density[i]});
}

inline void fit(std::ostream& os, const LorentzianFit& f) {
  CsvWriter w(os, {"gamma_meV", "center_meV", "amplitude_per_meV", "baseline_per_meV", "residual_rms", "iterations"});
  w.row({f.fwhm, f.center, f.amplitude, f.baseline, f.residual_rms, static_cast<long long>(f.iterations)});
}

inline void sweep(std::ostream& os, const SweepResult& r) {
  CsvWriter w(os, {"param", "gamma_meV", "gamma_over_gammaQD", "gap_meV", "gamma_over_gap"});
  for (const auto& row : r.rows) w.row({row.param, row.gamma, row.gamma_over_gamma_qd(), row.gap, row.gamma_over_gap()});
}

inline void sweep_status(std::ostream& os, const SweepResult& r) {
  CsvWriter w(os, {"param", "status"});
  for (const auto& row : r.rows) w.row({row.param, row.gamma ? std::string("ok") : row.reason});
}

inline void dos_map(std::ostream& os, std::span<const DosHistogram> map) {
  CsvWriter w(os, {"theta", "E_meV", "density"});
  for (const auto& h : map)
    for (std::size_t i = 0; i < h.density.size(); ++i)
      w.row({h.theta, 0.5 * (h.bin_edges[i] + h.bin_edges[i + 1]), h.density[i]});
}

inline void edge_samples(std::ostream& os, std::span<const EdgeEigStats> stats) {
  CsvWriter w(os, {"theta", "sample_meV", "localization"});
  for (const auto& s : stats)
    for (std::size_t i = 0; i < s.samples.size(); ++i) w.row({s.theta, s.samples[i], s.localization[i]});
}

inline void edge_summary(std::ostream& os, std::span<const EdgeEigStats> stats) {
  CsvWriter w(os, {"theta", "mean_meV", "std_meV", "gap_meV", "ambiguous"});
  for (const auto& s : stats) w.row({s.theta, s.mean, s.std, s.gap, static_cast<long long>(s.ambiguous)});
}

inline void edge_histogram(std::ostream& os, std::span<const EdgeEigStats> stats) {
  CsvWriter w(os, {"theta", "E_meV", "density"});
  for (const auto& s : stats)
    for (std::size_t i = 0; i < s.hist_density.size(); ++i)
      w.row({s.theta, 0.5 * (s.hist_edges[i] + s.hist_edges[i + 1]), s.hist_density[i]});
}

inline void dyson_trace(std::ostream& os, const DysonTrace& t) {
  CsvWriter w(os, {"iter", "re_sigma_meV", "im_sigma_meV"});
  for (std::size_t i = 0; i < t.iterates.size(); ++i)
    w.row({static_cast<long long>(i), t.iterates[i].real(), t.iterates[i].imag()});
}

inline void pillar_rows(std::ostream& os, std::span<const PillarRow> rows) {
  CsvWriter w(os, {"value", "j_sys_meV", "material", "gamma_qd_meV", "ratio"});
  for (const auto& r : rows) w.row({r.value, r.j_sys, r.material, r.gamma_qd, r.ratio});
}

inline void hopping(std::ostream& os, const HoppingEstimate& h) {
  CsvWriter w(os, {"e0_meV", "e1_meV", "j_sys_meV", "iterations", "bound_doublet", "parity0", "parity1"});
  w.row({h.e0, h.e1, h.j_sys, static_cast<long long>(h.iterations), static_cast<long long>(h.bound_doublet), h.parity0,
         h.parity1});
}

/// |psi|^2 on the grid; y is 0 in 1D.
inline void intensity_map(std::ostream& os, const PillarGeometry& g, const Eigen::VectorXd& map) {
  CsvWriter w(os, {"x_nm", "y_nm", "psi_sq"});
  const auto x = detail::grid_axis(g);
  const int n = g.grid_points;
  for (Eigen::Index p = 0; p < map.size(); ++p) {
    if (g.dimension == 1)
      w.row({x[p], 0.0, map(p)});
    else
      w.row({x[p / n], x[p % n], map(p)});
  }
}

inline void autocovariance(std::ostream& os, std::span<const LagEstimate> lags, double z_max) {
  CsvWriter w(os, {"lag_ps", "empirical_meV2", "expected_meV2", "std_error_meV2", "z", "pass"});
  for (const auto& l : lags)
    w.row({l.lag, l.empirical, l.expected, l.std_error, l.z(), static_cast<long long>(std::abs(l.z()) <= z_max)});
}

}  // namespace sshphoton::report
