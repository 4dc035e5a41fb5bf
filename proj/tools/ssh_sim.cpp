// ssh-sim: batch front end. Every subcommand reads a flat JSON config, applies
// flag overrides, writes CSV artifacts plus config.json and manifest.json into
// the output directory. Exit codes: 0 success, 2 config error, 3 numerical failure.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <functional>
#include <limits>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sshphoton/dynamics.hpp"
#include "sshphoton/dyson.hpp"
#include "sshphoton/errors.hpp"
#include "sshphoton/micropillar.hpp"
#include "sshphoton/oracle.hpp"
#include "sshphoton/quasistatic.hpp"
#include "sshphoton/report.hpp"
#include "sshphoton/sweep.hpp"

using json = nlohmann::ordered_json;
using namespace sshphoton;
namespace fs = std::filesystem;

namespace {

constexpr const char* kSchema = "ssh-sim/config-v1";

enum class Kind { number, integer, boolean, text, numbers };

struct Key {
  std::string name;
  Kind kind;
  json value;
  std::string help;
};

/// The full flat key set with global defaults.
std::vector<Key> key_table() {
  return {
      {"seed", Kind::integer, 20240101, "RNG seed"},
      {"threads", Kind::integer, 0, "worker threads (0: SSH_SIM_THREADS or 1)"},
      {"out", Kind::text, "ssh-sim-out", "output directory"},
      // chain
      {"n_sites", Kind::integer, 80, "chain length N (even)"},
      {"j0", Kind::number, 30.0, "hopping scale J0, meV"},
      {"theta_pi", Kind::number, 1.0 / 4.2, "dimerisation angle theta / pi"},
      {"emission_site", Kind::integer, 1, "emitting site, 1-based"},
      {"initial", Kind::text, "edge", "initial state: edge | site"},
      {"initial_site", Kind::integer, 1, "excited site for initial = site"},
      {"degeneracy_tol", Kind::number, 0.0, "edge-pair rotation threshold, meV (0: 1e-3 J0)"},
      // noise
      {"epsilon", Kind::number, 0.5, "noise strength, meV"},
      {"tau", Kind::number, 0.5, "noise correlation time, ps"},
      {"dt", Kind::number, 0.002, "time step, ps"},
      {"t_total", Kind::number, 400.0, "evolution window, ps"},
      {"n_realizations", Kind::integer, 10, "noise realizations"},
      // spectra
      {"e_min", Kind::number, -5.0, "spectral window lower edge, meV"},
      {"e_max", Kind::number, 5.0, "spectral window upper edge, meV"},
      {"oversample", Kind::integer, 4, "zero-padding factor"},
      {"averaging", Kind::text, "spectra", "realization averaging: spectra | correlation"},
      {"fit_window", Kind::number, 5.0, "fit range in initial FWHMs"},
      {"max_residual", Kind::number, 0.1, "fit rejection threshold (rms / peak)"},
      {"smooth_fraction", Kind::number, 0.1, "fit smoothing box / FWHM"},
      {"write_realizations", Kind::boolean, true, "write per-realization spectra"},
      // sweeps
      {"grid", Kind::numbers, json::array(), "sweep values (theta sweeps in units of pi)"},
      // quasi-static
      {"disorder_samples", Kind::integer, 2000, "frozen-disorder samples"},
      {"thetas_pi", Kind::numbers, json::array(), "theta grid / pi"},
      {"dos_e_min", Kind::number, -8.0, "DOS lower edge, meV"},
      {"dos_e_max", Kind::number, 8.0, "DOS upper edge, meV"},
      {"dos_bins", Kind::integer, 160, "DOS bins"},
      {"hist_bins", Kind::integer, 60, "edge-eigenvalue histogram bins"},
      // dyson
      {"self_consistent", Kind::boolean, false, "iterate the self-consistent equation"},
      {"mixing", Kind::number, 0.5, "linear mixing of the fixed-point update"},
      {"tol", Kind::number, 1e-5, "fixed-point tolerance, meV"},
      {"max_iter", Kind::integer, 100, "fixed-point iteration cap"},
      {"sigma_init_im", Kind::number, -1e-5, "Im of the initial self-energy, meV"},
      {"lineshape_points", Kind::integer, 1001, "points of the analytic line shapes"},
      // micropillars
      {"dimension", Kind::integer, 2, "1 or 2"},
      {"domain_size", Kind::number, 65.0, "box edge, nm"},
      {"grid_points", Kind::integer, 129, "interior points per axis"},
      {"well_depth", Kind::number, 10.0, "well depth, meV"},
      {"well_diameter", Kind::number, 10.0, "well diameter, nm"},
      {"distance", Kind::number, 5.0, "edge-to-edge well gap, nm"},
      {"m_eff", Kind::number, 0.05, "effective mass / m_e"},
      {"delta", Kind::number, 0.0, "QD-cavity coupling, meV"},
      {"m_c", Kind::number, 1e-4, "cavity photon mass / m_e"},
      {"cavity", Kind::boolean, false, "use the cavity-coupled Hamiltonian"},
      {"pillar_variable", Kind::text, "depth", "swept quantity: depth | distance | m_eff"},
      {"solver_tol", Kind::number, 1e-6, "eigensolver tolerance, meV"},
      {"max_iterations", Kind::integer, 500, "eigensolver iteration cap"},
      {"keep_maps", Kind::boolean, false, "write |psi|^2 maps"},
      {"require_bound", Kind::boolean, false, "fail unless the doublet lies below 0 meV"},
      // validation
      {"noise_trajectories", Kind::integer, 10000, "trajectories for the autocovariance test"},
      {"lags_tau", Kind::numbers, json::array({0.0, 1.0, 2.0, 4.0}), "lags in units of tau"},
      {"z_max", Kind::number, 3.0, "pass threshold in standard errors"},
      {"oracle_sizes", Kind::numbers, json::array({2, 4, 6}), "chain lengths checked against the oracle"},
      {"oracle_stride", Kind::integer, 25, "time-grid stride of the oracle spectra"},
      {"oracle_tol", Kind::number, 1e-6, "pass threshold relative to the peak"},
  };
}

struct Command {
  std::string name;
  std::string help;
  json defaults;  // subcommand-specific overrides of the global defaults
  std::function<int(const json&, struct Output&)> run;
};

struct Output {
  fs::path dir;
  json files = json::array();

  std::ofstream open(const std::string& name, const std::string& role) {
    std::ofstream f(dir / name);
    if (!f) throw ConfigError("cannot write " + (dir / name).string());
    files.push_back({{"path", name}, {"role", role}});
    return f;
  }
};

// ---------------------------------------------------------------------------
// Parameter access
// ---------------------------------------------------------------------------

double num(const json& c, const char* k) { return c.at(k).get<double>(); }
long long integer(const json& c, const char* k) { return c.at(k).get<long long>(); }
int small_int(const json& c, const char* k) {
  const long long v = integer(c, k);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ConfigError(std::string(k) + " out of range");
  return static_cast<int>(v);
}
bool flag(const json& c, const char* k) { return c.at(k).get<bool>(); }
std::string text(const json& c, const char* k) { return c.at(k).get<std::string>(); }
std::vector<double> list(const json& c, const char* k) { return c.at(k).get<std::vector<double>>(); }

int threads_of(const json& c) {
  const int t = small_int(c, "threads");
  if (t < 0) throw ConfigError("threads must be non-negative");
  return t == 0 ? default_threads() : t;
}

std::vector<double> times_pi(std::vector<double> v) {
  for (double& x : v) x *= pi;
  return v;
}

NoiseParams noise_params(const json& c) {
  NoiseParams p;
  p.epsilon = num(c, "epsilon");
  p.tau = num(c, "tau");
  p.dt = num(c, "dt");
  p.t_total = num(c, "t_total");
  p.n_realizations = small_int(c, "n_realizations");
  p.seed = static_cast<std::uint64_t>(integer(c, "seed"));
  return p;
}

ChainParams chain_params(const json& c) { return {small_int(c, "n_sites"), num(c, "j0"), num(c, "theta_pi") * pi}; }

EvolutionConfig evolution(const json& c) {
  EvolutionConfig e;
  e.chain = chain_params(c);
  e.noise = noise_params(c);
  e.emission_site = small_int(c, "emission_site");
  const auto init = text(c, "initial");
  if (init == "edge")
    e.initial = EdgeModeStart{};
  else if (init == "site")
    e.initial = SiteStart{small_int(c, "initial_site")};
  else
    throw ConfigError("initial must be edge or site, got " + init);
  if (num(c, "degeneracy_tol") > 0.0) e.degeneracy_tol = num(c, "degeneracy_tol");
  validate(e);
  return e;
}

SpectrumWindow window(const json& c) { return {num(c, "e_min"), num(c, "e_max"), small_int(c, "oversample")}; }

EmissionOptions emission_options(const json& c) {
  EmissionOptions o;
  o.threads = threads_of(c);
  const auto a = text(c, "averaging");
  if (a == "spectra")
    o.averaging = AveragingOrder::spectra;
  else if (a == "correlation")
    o.averaging = AveragingOrder::correlation;
  else
    throw ConfigError("averaging must be spectra or correlation, got " + a);
  o.fit_options.window_fwhm = num(c, "fit_window");
  o.fit_options.max_residual = num(c, "max_residual");
  o.fit_options.smooth_fraction = num(c, "smooth_fraction");
  return o;
}

DisorderEnsemble ensemble(const json& c) {
  DisorderEnsemble e;
  e.chain = chain_params(c);
  e.epsilon = num(c, "epsilon");
  e.n_samples = small_int(c, "disorder_samples");
  e.seed = static_cast<std::uint64_t>(integer(c, "seed"));
  validate(e);
  return e;
}

PillarGeometry geometry(const json& c) {
  PillarGeometry g;
  g.dimension = small_int(c, "dimension");
  g.domain_size = num(c, "domain_size");
  g.grid_points = small_int(c, "grid_points");
  g.well_depth = num(c, "well_depth");
  g.well_diameter = num(c, "well_diameter");
  g.center_separation = g.well_diameter + num(c, "distance");
  g.m_eff = num(c, "m_eff");
  validate(g);
  return g;
}

SolverOptions solver(const json& c) {
  SolverOptions o;
  o.tol = num(c, "solver_tol");
  o.max_iterations = small_int(c, "max_iterations");
  o.keep_maps = flag(c, "keep_maps");
  o.require_bound = flag(c, "require_bound");
  return o;
}

std::vector<double> required_grid(const json& c, const char* key) {
  auto g = list(c, key);
  if (g.empty()) throw ConfigError(std::string(key) + " is empty");
  return g;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int emission(const json& c, Output& out, bool single) {
  auto cfg = evolution(c);
  if (single) cfg = single_emitter(cfg);
  const auto rec = simulate_emission(cfg, window(c), emission_options(c));
  {
    auto f = out.open("spectrum_averaged.csv", "realization-averaged spectrum");
    report::spectrum(f, rec.averaged);
  }
  if (flag(c, "write_realizations"))
    for (std::size_t r = 0; r < rec.per_realization.size(); ++r) {
      auto f = out.open("spectrum_r" + std::to_string(r) + ".csv", "single-realization spectrum");
      report::spectrum(f, rec.per_realization[r]);
    }
  if (!rec.fit) throw NumericalError("Lorentzian fit rejected: " + rec.fit_error);
  auto f = out.open("fit.csv", "Lorentzian fit of the averaged spectrum");
  report::fit(f, *rec.fit);
  std::cout << "gamma = " << rec.fit->fwhm << " meV, center = " << rec.fit->center << " meV\n";
  return 0;
}

int sweep(const json& c, Output& out, SweepKind kind) {
  const auto given = required_grid(c, "grid");
  const auto grid = kind == SweepKind::vs_theta ? times_pi(given) : given;
  json base_json = c;
  if (kind == SweepKind::vs_n || kind == SweepKind::trivial_chain) base_json["n_sites"] = std::lround(grid.front());
  auto res = run_sweep(kind, grid, evolution(base_json), window(c), emission_options(c));
  /// Report theta in the units it was given.
  for (std::size_t i = 0; i < res.rows.size(); ++i) res.rows[i].param = given[i];
  {
    auto f = out.open("sweep.csv", "linewidth sweep");
    report::sweep(f, res);
  }
  auto f = out.open("sweep_status.csv", "fit status per sweep point");
  report::sweep_status(f, res);
  std::cout << "gamma_QD = " << res.gamma_qd << " meV\n";
  for (const auto& r : res.rows)
    std::cout << r.param << ": " << (r.gamma ? std::to_string(*r.gamma) + " meV" : "no fit (" + r.reason + ")") << "\n";
  return 0;
}

int quasistatic_dos(const json& c, Output& out) {
  const auto ens = ensemble(c);
  const auto thetas = times_pi(required_grid(c, "thetas_pi"));
  const auto edges = uniform_edges(num(c, "dos_e_min"), num(c, "dos_e_max"), small_int(c, "dos_bins"));
  const auto map = dos_map(ens, thetas, edges, threads_of(c));
  auto f = out.open("dos_map.csv", "disorder-averaged density of states");
  report::dos_map(f, map);
  return 0;
}

int edge_stats(const json& c, Output& out) {
  const auto ens = ensemble(c);
  const auto thetas = times_pi(required_grid(c, "thetas_pi"));
  const auto st = edge_eigenvalue_stats(ens, thetas, small_int(c, "hist_bins"), threads_of(c));
  {
    auto f = out.open("edge_samples.csv", "in-gap eigenvalues per realization");
    report::edge_samples(f, st);
  }
  {
    auto f = out.open("edge_summary.csv", "mean and spread of the in-gap eigenvalues");
    report::edge_summary(f, st);
  }
  auto f = out.open("edge_histogram.csv", "normalised histogram of the in-gap eigenvalues");
  report::edge_histogram(f, st);
  for (const auto& s : st)
    std::cout << "theta/pi = " << s.theta / pi << ": std = " << s.std << " meV" << (s.ambiguous ? " (ambiguous)" : "")
              << "\n";
  return 0;
}

int dyson(const json& c, Output& out) {
  const double eps = num(c, "epsilon"), tau = num(c, "tau");
  const auto lowest = self_energy_lowest_order(eps, tau);
  SelfEnergy sigma = lowest;
  if (flag(c, "self_consistent")) {
    DysonOptions o;
    o.init = {0.0, num(c, "sigma_init_im")};
    o.tol = num(c, "tol");
    o.mixing = num(c, "mixing");
    o.max_iter = small_int(c, "max_iter");
    DysonTrace trace;
    try {
      sigma = self_energy_self_consistent(eps, tau, o, &trace);
    } catch (const NumericalError&) {
      auto f = out.open("dyson_trace.csv", "fixed-point iterates (not converged)");
      report::dyson_trace(f, trace);
      throw;
    }
    auto f = out.open("dyson_trace.csv", "fixed-point iterates");
    report::dyson_trace(f, trace);
    std::cout << "converged after " << sigma.iterations << " iterations\n";
  }
  {
    auto f = out.open("self_energy.csv", "self-energies");
    CsvWriter w(f, {"method", "re_sigma_meV", "im_sigma_meV", "gamma_meV"});
    w.row({std::string("lowest_order"), lowest.value.real(), lowest.value.imag(), lowest.linewidth()});
    if (sigma.method == SelfEnergyMethod::self_consistent)
      w.row({std::string("self_consistent"), sigma.value.real(), sigma.value.imag(), sigma.linewidth()});
    if (eps > 0.0) w.row({std::string("cumulant_fwhm"), 0.0, 0.0, cumulant_fwhm(eps, tau)});
  }
  const int n = small_int(c, "lineshape_points");
  if (n < 2) throw ConfigError("lineshape_points must be at least 2");
  if (eps > 0.0) {
    std::vector<double> e(n);
    for (int i = 0; i < n; ++i) e[i] = num(c, "e_min") + (num(c, "e_max") - num(c, "e_min")) * i / (n - 1);
    const auto lor = lorentzian_spectrum(sigma, e);
    const auto exact = cumulant_spectrum(eps, tau, e);
    auto f = out.open("lineshape.csv", "analytic line shapes");
    CsvWriter w(f, {"omega_meV", "lorentzian_S_per_meV", "cumulant_S_per_meV"});
    for (int i = 0; i < n; ++i) w.row({e[i], lor[i], exact[i]});
  }
  std::cout << "-Im Sigma = " << -sigma.value.imag() << " meV, gamma = " << sigma.linewidth() << " meV\n";
  return 0;
}

int pillar_hopping(const json& c, Output& out) {
  const auto g = geometry(c);
  const auto opt = solver(c);
  const auto h = flag(c, "cavity") ? solve_cavity_coupled(g, {num(c, "delta"), num(c, "m_c")}, opt)
                                   : solve_double_well(g, opt);
  {
    auto f = out.open("hopping.csv", "two lowest levels and J_sys");
    report::hopping(f, h);
  }
  if (h.ground) {
    auto f = out.open("ground_map.csv", "|psi_g|^2");
    report::intensity_map(f, g, *h.ground);
  }
  if (h.excited) {
    auto f = out.open("excited_map.csv", "|psi_e|^2");
    report::intensity_map(f, g, *h.excited);
  }
  std::cout << "J_sys = " << h.j_sys << " meV\n";
  return 0;
}

PillarVariable pillar_variable(const std::string& s) {
  if (s == "depth") return PillarVariable::depth;
  if (s == "distance") return PillarVariable::distance;
  if (s == "m_eff") return PillarVariable::m_eff;
  throw ConfigError("pillar_variable must be depth, distance or m_eff, got " + s);
}

int pillar_sweep(const json& c, Output& out, bool cavity_sweep) {
  const auto g = geometry(c);
  auto opt = solver(c);
  opt.keep_maps = false;
  const auto grid = required_grid(c, "grid");
  const auto var = cavity_sweep ? PillarVariable::delta : pillar_variable(text(c, "pillar_variable"));
  std::optional<CavityParams> cav;
  if (cavity_sweep || flag(c, "cavity")) cav = CavityParams{num(c, "delta"), num(c, "m_c")};
  const auto rows = sweep_pillars(var, grid, g, cav, opt, threads_of(c));
  auto f = out.open(cavity_sweep ? "cavity_sweep.csv" : "pillar_sweep.csv", "J_sys per grid value and material");
  report::pillar_rows(f, rows);
  return 0;
}

int validate_noise(const json& c, Output& out) {
  const auto p = noise_params(c);
  std::vector<double> lags = list(c, "lags_tau");
  for (double& l : lags) l *= p.tau;
  const auto est = autocovariance_check(p, small_int(c, "noise_trajectories"), lags, threads_of(c));
  const double z_max = num(c, "z_max");
  {
    auto f = out.open("noise_autocovariance.csv", "empirical vs analytic autocovariance");
    report::autocovariance(f, est, z_max);
  }
  bool ok = true;
  for (const auto& e : est) {
    const bool pass = std::abs(e.z()) <= z_max;
    ok = ok && pass;
    std::cout << (pass ? "PASS" : "FAIL") << " lag " << e.lag << " ps: " << e.empirical << " vs " << e.expected
              << " meV^2 (z = " << e.z() << ")\n";
  }
  if (!ok) throw NumericalError("autocovariance outside " + std::to_string(z_max) + " standard errors");
  return 0;
}

int validate_oracle(const json& c, Output& out) {
  const auto p = noise_params(c);
  const auto stride = static_cast<std::size_t>(integer(c, "oracle_stride"));
  const int n = small_int(c, "lineshape_points");
  if (n < 2) throw ConfigError("lineshape_points must be at least 2");
  std::vector<double> e(n);
  for (int i = 0; i < n; ++i) e[i] = num(c, "e_min") + (num(c, "e_max") - num(c, "e_min")) * i / (n - 1);
  const double tol = num(c, "oracle_tol");
  auto f = out.open("oracle.csv", "many-body vs single-particle spectra");
  CsvWriter w(f, {"n_sites", "max_deviation_per_meV", "peak_per_meV", "relative_deviation", "pass"});
  bool ok = true;
  for (double size : required_grid(c, "oracle_sizes")) {
    ChainParams chain = chain_params(c);
    chain.n_sites = static_cast<int>(std::lround(size));
    const auto r = oracle::compare_with_dynamics(chain, p, 0, stride, e);
    const bool pass = r.relative() < tol;
    ok = ok && pass;
    w.row({static_cast<long long>(r.n_sites), r.max_deviation, r.peak, r.relative(), static_cast<long long>(pass)});
    std::cout << (pass ? "PASS" : "FAIL") << " N = " << r.n_sites << ": relative deviation " << r.relative() << "\n";
  }
  if (!ok) throw NumericalError("oracle and single-particle spectra disagree");
  return 0;
}

std::vector<Command> commands() {
  const json theta_grid = json::array({0.1, 0.15, 0.2, 0.23});
  return {
      {"spectrum-single", "isolated emitter spectrum and linewidth", {},
       [](const json& c, Output& o) { return emission(c, o, true); }},
      {"spectrum-chain", "edge-emitter spectrum of the noisy chain", {},
       [](const json& c, Output& o) { return emission(c, o, false); }},
      {"sweep-size", "linewidth vs chain length", {{"grid", {20, 40, 80, 160}}},
       [](const json& c, Output& o) { return sweep(c, o, SweepKind::vs_n); }},
      {"sweep-theta", "linewidth vs dimerisation angle (grid in units of pi)", {{"grid", theta_grid}},
       [](const json& c, Output& o) { return sweep(c, o, SweepKind::vs_theta); }},
      {"sweep-j0", "linewidth vs hopping scale", {{"grid", {10, 20, 30, 50}}},
       [](const json& c, Output& o) { return sweep(c, o, SweepKind::vs_j0); }},
      {"trivial-chain", "uniform chain excited at site 1", {{"grid", {20, 40, 80}}},
       [](const json& c, Output& o) { return sweep(c, o, SweepKind::trivial_chain); }},
      {"quasistatic-dos", "frozen-disorder density of states vs theta",
       {{"j0", 5.0}, {"thetas_pi", {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5}}},
       [](const json& c, Output& o) { return quasistatic_dos(c, o); }},
      {"edge-stats", "in-gap eigenvalue statistics vs theta", {{"j0", 5.0}, {"thetas_pi", {0.0, 0.2, 0.23}}},
       [](const json& c, Output& o) { return edge_stats(c, o); }},
      {"dyson", "lowest-order or self-consistent self-energy", {},
       [](const json& c, Output& o) { return dyson(c, o); }},
      {"pillar-hopping", "double-well tunnel splitting", {},
       [](const json& c, Output& o) { return pillar_hopping(c, o); }},
      {"pillar-sweep", "J_sys vs depth, distance or m_eff", {{"grid", {5, 10, 15, 20, 25, 30}}},
       [](const json& c, Output& o) { return pillar_sweep(c, o, false); }},
      {"cavity-sweep", "J_sys vs QD-cavity coupling", {{"grid", {0, 20, 40, 60, 80, 100}}},
       [](const json& c, Output& o) { return pillar_sweep(c, o, true); }},
      {"validate-noise", "autocovariance of the generated noise", {{"t_total", 10.0}},
       [](const json& c, Output& o) { return validate_noise(c, o); }},
      {"validate-oracle", "many-body reference vs single-particle spectra",
       {{"t_total", 10.0}, {"e_min", -40.0}, {"e_max", 40.0}, {"lineshape_points", 401}},
       [](const json& c, Output& o) { return validate_oracle(c, o); }},
  };
}

// ---------------------------------------------------------------------------
// Config handling
// ---------------------------------------------------------------------------

json typed(const Key& k, const json& v) {
  const auto bad = [&] { return ConfigError("key " + k.name + ": wrong type (" + v.dump() + ")"); };
  switch (k.kind) {
    case Kind::number:
      if (!v.is_number()) throw bad();
      return v.get<double>();
    case Kind::integer:
      if (v.is_number_integer()) return v;
      if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) return v.get<long long>();
      throw bad();
    case Kind::boolean:
      if (!v.is_boolean()) throw bad();
      return v;
    case Kind::text:
      if (!v.is_string()) throw bad();
      return v;
    case Kind::numbers:
      if (!v.is_array()) throw bad();
      for (const auto& x : v)
        if (!x.is_number()) throw bad();
      return v;
  }
  throw bad();
}

/// Flag text to JSON of the key's kind.
json parse_flag(const Key& k, const std::string& s) {
  try {
    switch (k.kind) {
      case Kind::number: {
        std::size_t used = 0;
        const double d = std::stod(s, &used);
        if (used != s.size()) break;
        return d;
      }
      case Kind::integer: {
        std::size_t used = 0;
        const long long i = std::stoll(s, &used);
        if (used != s.size()) break;
        return i;
      }
      case Kind::boolean:
        if (s == "true" || s == "1" || s.empty()) return true;
        if (s == "false" || s == "0") return false;
        break;
      case Kind::text:
        return s;
      case Kind::numbers: {
        json a = json::array();
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
          std::size_t used = 0;
          const double d = std::stod(item, &used);
          if (used != item.size()) throw ConfigError("");
          a.push_back(d);
        }
        return a;
      }
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("--" + k.name + ": cannot parse '" + s + "'");
}

json effective_config(const Command& cmd, const std::string& path, const std::map<std::string, std::string>& flags) {
  const auto keys = key_table();
  std::map<std::string, const Key*> by_name;
  json c = json::object();
  for (const auto& k : keys) {
    by_name[k.name] = &k;
    c[k.name] = k.value;
  }
  for (const auto& [name, v] : cmd.defaults.items()) c[name] = typed(*by_name.at(name), v);
  if (!path.empty()) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config " + path);
    json file;
    try {
      file = json::parse(f);
    } catch (const json::parse_error& e) {
      throw ConfigError("config " + path + ": " + e.what());
    }
    if (!file.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [name, v] : file.items()) {
      if (name == "schema") {
        if (v != kSchema) throw ConfigError("unsupported schema " + v.dump() + ", expected " + kSchema);
        continue;
      }
      if (name == "experiment") {
        if (v != cmd.name) throw ConfigError("config is for experiment " + v.dump() + ", not " + cmd.name);
        continue;
      }
      const auto it = by_name.find(name);
      if (it == by_name.end()) throw ConfigError("unknown config key '" + name + "'");
      c[name] = typed(*it->second, v);
    }
  }
  for (const auto& [name, s] : flags) c[name] = parse_flag(*by_name.at(name), s);
  return c;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int execute(const Command& cmd, const std::string& config_path, const std::map<std::string, std::string>& flags) {
  json c;
  Output out;
  try {
    c = effective_config(cmd, config_path, flags);
    out.dir = text(c, "out");
    std::error_code ec;
    fs::create_directories(out.dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + out.dir.string() + ": " + ec.message());
    json echo = {{"schema", kSchema}, {"experiment", cmd.name}};
    for (const auto& [k, v] : c.items()) echo[k] = v;
    std::ofstream f(out.dir / "config.json");
    if (!f) throw ConfigError("cannot write " + (out.dir / "config.json").string());
    f << echo.dump(2) << "\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  std::string status = "ok", message;
  try {
    code = cmd.run(c, out);
  } catch (const ConfigError& e) {
    code = 2;
    status = "config_error";
    message = e.what();
  } catch (const NumericalError& e) {
    code = 3;
    status = "numerical_failure";
    message = e.what();
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!message.empty()) std::cerr << status << ": " << message << "\n";

  json files = json::array({{{"path", "config.json"}, {"role", "effective configuration"}}});
  for (const auto& f : out.files) files.push_back(f);
  json manifest = {{"schema", kSchema},      {"experiment", cmd.name}, {"status", status},
                   {"message", message},     {"exit_code", code},      {"seed", c.at("seed")},
                   {"started_utc", started}, {"wall_clock_s", seconds}, {"files", files},
                   {"parameters", c}};
  std::ofstream m(out.dir / "manifest.json");
  m << manifest.dump(2) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topological linewidth narrowing in SSH emitter chains"};
  app.require_subcommand(1);
  const auto cmds = commands();
  const auto keys = key_table();
  std::string config_path;
  std::map<std::string, std::string> flags;
  for (const auto& cmd : cmds) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    for (const auto& k : keys) {
      std::string names = "--" + k.name;
      std::string dashed = k.name;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != k.name) names += ",--" + dashed;
      if (k.kind == Kind::boolean) {
        sub->add_flag_function(
            names, [&flags, name = k.name](std::int64_t n) { flags[name] = n > 0 ? "true" : "false"; }, k.help);
      } else {
        sub->add_option_function<std::string>(
            names, [&flags, name = k.name](const std::string& v) { flags[name] = v; }, k.help);
      }
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  for (const auto& cmd : cmds)
    if (app.got_subcommand(cmd.name)) return execute(cmd, config_path, flags);
  return 2;
}
