#pragma once

// Linewidth sweeps over chain length, dimerisation angle and hopping scale,
// each normalised by the single-emitter linewidth under identical settings.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sshphoton/dynamics.hpp"
#include "sshphoton/errors.hpp"
#include "sshphoton/lattice.hpp"

namespace sshphoton {

enum class SweepKind { vs_n, vs_theta, vs_j0, trivial_chain };

struct SweepRow {
  double param = 0.0;
  std::optional<double> gamma;  // meV; empty when the fit failed
  double gamma_qd = 0.0;
  double gap = 0.0;             // clean band gap, meV
  std::string reason;           // fit failure message

  std::optional<double> gamma_over_gamma_qd() const {
    if (!gamma) return std::nullopt;
    return *gamma / gamma_qd;
  }
  std::optional<double> gamma_over_gap() const {
    if (!gamma || !(gap > 0.0)) return std::nullopt;
    return *gamma / gap;
  }
};

struct SweepResult {
  double gamma_qd = 0.0;
  std::vector<SweepRow> rows;
};

/// Single emitter with the chain's noise settings, excited at its only site.
inline EvolutionConfig single_emitter(const EvolutionConfig& base) {
  EvolutionConfig c = base;
  c.chain.n_sites = 1;
  c.emission_site = 1;
  c.initial = SiteStart{1};
  return c;
}

/// Linewidth of one configuration; throws NumericalError if the fit fails.
inline double linewidth(const EvolutionConfig& c, const SpectrumWindow& win, const EmissionOptions& opt) {
  EmissionOptions o = opt;
  o.fit = true;
  const auto rec = simulate_emission(c, win, o);
  if (!rec.fit) throw NumericalError(rec.fit_error);
  return rec.fit->fwhm;
}

/// Configuration of one sweep point. vs_j0 lowers dt to 0.1 hbar / J0 where
/// needed; trivial_chain uses theta = pi/4 (uniform J0/2) with the excitation
/// on site 1.
inline EvolutionConfig sweep_point(SweepKind kind, const EvolutionConfig& base, double value) {
  EvolutionConfig c = base;
  switch (kind) {
    case SweepKind::vs_n:
      c.chain.n_sites = static_cast<int>(std::lround(value));
      break;
    case SweepKind::vs_theta:
      c.chain.theta = value;
      break;
    case SweepKind::vs_j0:
      c.chain.j0 = value;
      if (value > 0.0) c.noise.dt = std::min(c.noise.dt, 0.1 * hbar / value);
      break;
    case SweepKind::trivial_chain:
      c.chain.n_sites = static_cast<int>(std::lround(value));
      c.chain.theta = pi / 4.0;
      c.initial = SiteStart{1};
      break;
  }
  return c;
}

inline SweepResult run_sweep(SweepKind kind, std::span<const double> grid, const EvolutionConfig& base,
                             const SpectrumWindow& win, const EmissionOptions& opt = {}) {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  std::vector<EvolutionConfig> configs;
  for (double v : grid) {
    configs.push_back(sweep_point(kind, base, v));
    validate(configs.back());
  }
  SweepResult out;
  out.gamma_qd = linewidth(single_emitter(base), win, opt);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SweepRow row;
    row.param = grid[i];
    row.gamma_qd = out.gamma_qd;
    row.gap = band_gap(configs[i].chain);
    try {
      row.gamma = linewidth(configs[i], win, opt);
    } catch (const NumericalError& e) {
      row.reason = e.what();
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace sshphoton
