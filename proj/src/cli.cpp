#include "levnoise/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <ostream>
#include <set>

#include "levnoise/config.hpp"
#include "levnoise/constants.hpp"
#include "levnoise/csv.hpp"
#include "levnoise/design_search.hpp"
#include "levnoise/errors.hpp"
#include "levnoise/noise_budget.hpp"
#include "levnoise/spectral.hpp"
#include "levnoise/trap_dynamics.hpp"

#ifndef LEVNOISE_VERSION
#define LEVNOISE_VERSION "unknown"
#endif

namespace levnoise {

namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kBudgetHeader[] = {"freq_hz",   "asd_shot",  "asd_backaction",
                                              "asd_gas",   "asd_extra", "asd_total",
                                              "asd_sql",   "figure_of_merit"};
constexpr std::string_view kSeriesHeader[] = {"t_s", "x_m", "y_meas_m", "f_fb_n"};
constexpr std::string_view kPsdHeader[] = {"freq_hz", "psd_m2_per_hz"};
constexpr std::string_view kDesignHeader[] = {"objective", "argmin_freq_hz", "R_m",
                                              "P_w",       "lambda_m",       "w_m",
                                              "Pvac_torr", "G",              "feasible"};

struct GlobalOptions {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 1;
  std::string extra_noise_path;
  int threads = 0;
  std::string command_line;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sidecar(const std::string& out, std::string_view suffix) {
  return out + std::string(suffix);
}

void write_json(const std::string& path, const json& doc) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

json warnings_json(const std::vector<std::string>& warnings) {
  json arr = json::array();
  for (const auto& w : warnings) arr.push_back(w);
  return arr;
}

ExperimentConfig load_experiment(const GlobalOptions& g) {
  if (g.config_path.empty()) throw UsageError("--config is required");
  auto config = load_config(g.config_path);
  if (!g.extra_noise_path.empty()) config.extra_noise = load_noise_curve(g.extra_noise_path);
  return config;
}

json manifest(const GlobalOptions& g, const ExperimentConfig* config, bool with_seed) {
  json m;
  m["tool_version"] = LEVNOISE_VERSION;
  m["command_line"] = g.command_line;
  if (config) {
    m["config_snapshot"] = serialize_config(*config);
    if (config->extra_noise) {
      m["extra_noise"] = {{"freq_hz", config->extra_noise->frequencies},
                          {"asd_m_per_sqrthz", config->extra_noise->asd_values}};
    }
  } else {
    m["config_snapshot"] = nullptr;
  }
  if (with_seed)
    m["seed"] = g.seed;
  else
    m["seed"] = nullptr;
  m["timestamp"] = utc_timestamp();
  return m;
}

void require_out(const GlobalOptions& g) {
  if (g.out_path.empty()) throw UsageError("--out is required");
}

// ---------------------------------------------------------------- budget

struct BudgetArgs {
  double fmin = 50.0;
  double fmax = 1e4;
  std::size_t points = 200;
};

int cmd_budget(const GlobalOptions& g, const BudgetArgs& a, std::ostream& out) {
  require_out(g);
  if (!(a.fmin > 0.0) || !(a.fmin < a.fmax)) throw UsageError("need 0 < --fmin < --fmax");
  if (a.points < 2) throw UsageError("--points must be >= 2");
  const auto config = load_experiment(g);
  const auto grid = log_spaced(a.fmin, a.fmax, a.points);
  const auto budget = compute_budget(config, grid);

  const auto n = budget.rows.size();
  std::vector<std::vector<double>> cols(8, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = budget.rows[i];
    const double vals[] = {r.frequency, r.asd_shot,  r.asd_backaction, r.asd_gas_thermal,
                           r.asd_extra, r.asd_total, r.asd_sql,        r.figure_of_merit};
    for (std::size_t c = 0; c < 8; ++c) cols[c][i] = vals[c];
  }
  std::vector<std::span<const double>> views(cols.begin(), cols.end());

  const auto best = std::min_element(budget.rows.begin(), budget.rows.end(),
                                     [](const auto& x, const auto& y) {
                                       return x.figure_of_merit < y.figure_of_merit;
                                     });
  const double intensity = central_intensity(config.beam);
  const auto damping = damping_dominance_check(config.sphere, config.vacuum, intensity);
  json s;
  s["min_figure_of_merit"] = best->figure_of_merit;
  s["argmin_freq_hz"] = best->frequency;
  s["shot_noise_asd_m_per_sqrthz"] =
      shot_noise_asd(config.sphere, config.beam, config.detector);
  s["shot_noise_asd_calibrated_m_per_sqrthz"] =
      shot_noise_asd_calibrated(config.sphere, config.beam, config.detector);
  s["tau_gas_s"] = damping.tau_gas;
  s["tau_rad_s"] = damping.tau_rad;
  s["radiation_dominates"] = damping.radiation_dominates;
  s["trap_omega_calibrated_rad_per_s"] =
      trap_frequency(config.sphere, intensity, TrapForm::calibrated);
  s["trap_omega_symbolic_rad_per_s"] = trap_frequency(config.sphere, intensity, TrapForm::symbolic);
  s["mechanical_q"] = mechanical_q(intensity);
  s["intensity_w_per_m2"] = intensity;
  s["mass_kg"] = sphere_mass(config.sphere);
  s["warnings"] = warnings_json(budget.warnings);

  write_file_atomic(g.out_path, format_csv(kBudgetHeader, views));
  write_json(sidecar(g.out_path, ".summary.json"), s);
  auto m = manifest(g, &config, false);
  m["fmin_hz"] = a.fmin;
  m["fmax_hz"] = a.fmax;
  m["points"] = a.points;
  write_json(sidecar(g.out_path, ".manifest.json"), m);
  for (const auto& w : budget.warnings) out << "warning: " << w << "\n";
  out << "wrote " << g.out_path << " (" << n << " rows), min F = "
      << format_double(best->figure_of_merit) << " at " << format_double(best->frequency)
      << " Hz\n";
  return exit_ok;
}

// -------------------------------------------------------------- simulate

struct SimulateArgs {
  double duration = 0.0;
};

int cmd_simulate(const GlobalOptions& g, const SimulateArgs& a, std::ostream& out) {
  require_out(g);
  const auto config = load_experiment(g);
  const double interval =
      static_cast<double>(config.sim.record_decimation) / config.detector.sampling_rate;
  if (!(a.duration > 0.0)) throw UsageError("--duration must be > 0");
  if (a.duration < interval)
    throw UsageError("--duration " + format_double(a.duration) +
                     " s is shorter than one sample interval (" + format_double(interval) +
                     " s)");
  const auto samples =
      static_cast<std::uint64_t>(std::floor(a.duration * config.detector.sampling_rate + 1e-9));
  const auto decimation = static_cast<std::uint64_t>(config.sim.record_decimation);
  if ((samples + decimation - 1) / decimation < 2)
    throw UsageError("--duration " + format_double(a.duration) +
                     " s records fewer than two samples");
  const auto series = simulate(config, a.duration, g.seed);

  const auto n = series.size();
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) * series.sample_interval;
  const std::span<const double> views[] = {t, series.true_position, series.measured_position,
                                           series.feedback_force};
  write_file_atomic(g.out_path, format_csv(kSeriesHeader, views));
  auto m = manifest(g, &config, true);
  m["duration_s"] = a.duration;
  m["sample_interval_s"] = series.sample_interval;
  m["samples"] = n;
  write_json(sidecar(g.out_path, ".manifest.json"), m);
  out << "wrote " << g.out_path << " (" << n << " samples)\n";
  return exit_ok;
}

// ------------------------------------------------------------------- psd

struct PsdArgs {
  std::string input;
  std::size_t segment_length = 4096;
  double overlap = 0.5;
  std::string window = "hann";
};

// Sampling rate from the time column. Integer rates are recovered exactly
// despite the rounding in t_s.
double sampling_rate_of(std::span<const double> t) {
  const double span = t.back() - t.front();
  if (!(span > 0.0)) throw ConfigError("t_s column is not increasing");
  const double fs = static_cast<double>(t.size() - 1) / span;
  const double rounded = std::round(fs);
  return std::abs(fs - rounded) <= 1e-9 * fs ? rounded : fs;
}

int cmd_psd(const GlobalOptions& g, const PsdArgs& a, std::ostream& out) {
  require_out(g);
  if (a.input.empty()) throw UsageError("--input is required");
  Window window;
  if (a.window == "hann")
    window = Window::hann;
  else if (a.window == "rectangular")
    window = Window::rectangular;
  else
    throw UsageError("--window must be hann or rectangular");
  if (a.segment_length < 2 || (a.segment_length & (a.segment_length - 1)) != 0)
    throw UsageError("--segment-length must be a power of two >= 2");
  if (!(a.overlap >= 0.0 && a.overlap < 1.0)) throw UsageError("--overlap must be in [0, 1)");

  const auto table = parse_numeric_csv(read_text_file(a.input), kSeriesHeader);
  const auto n = table.rows();
  if (n < 2) throw ConfigError(a.input + ": need at least 2 data rows");
  if (a.segment_length > n)
    throw UsageError("--segment-length " + std::to_string(a.segment_length) +
                     " exceeds the series length " + std::to_string(n));
  const double fs = sampling_rate_of(table.columns[0]);
  const auto est = welch_psd(table.columns[2], fs, a.segment_length, a.overlap, window);

  const std::span<const double> views[] = {est.frequencies, est.psd};
  write_file_atomic(g.out_path, format_csv(kPsdHeader, views));
  ExperimentConfig config;
  const bool have_config = !g.config_path.empty();
  if (have_config) config = load_experiment(g);
  auto m = manifest(g, have_config ? &config : nullptr, false);
  m["input"] = a.input;
  m["channel"] = "y_meas_m";
  m["sampling_rate_hz"] = est.sampling_rate;
  m["segment_length"] = est.segment_length;
  m["overlap_fraction"] = est.overlap_fraction;
  m["window"] = a.window;
  m["segment_count"] = est.segment_count;
  m["resolution_hz"] = est.resolution();
  write_json(sidecar(g.out_path, ".manifest.json"), m);
  out << "wrote " << g.out_path << " (" << est.frequencies.size() << " bins, "
      << est.segment_count << " segments)\n";
  return exit_ok;
}

// -------------------------------------------------------------- optimize

struct OptimizeArgs {
  std::vector<std::string> vary;
  double fmin = 50.0;
  double fmax = 1e4;
  std::size_t freq_points = 200;
  std::size_t points_per_axis = 16;
  std::size_t max_grid = 1'000'000;
};

std::string allowed_names() {
  std::string s;
  for (auto p : kAllDesignParams) {
    if (!s.empty()) s += ", ";
    s += param_name(p);
  }
  return s;
}

SearchAxis parse_vary(std::string_view spec) {
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos)
    throw UsageError("--vary expects NAME=min:max[:log|lin], got '" + std::string(spec) + "'");
  const auto name = spec.substr(0, eq);
  const auto param = parse_param_name(name);
  if (!param)
    throw UsageError("unknown parameter '" + std::string(name) + "'; allowed: " + allowed_names());
  std::vector<std::string_view> parts;
  auto rest = spec.substr(eq + 1);
  while (true) {
    const auto colon = rest.find(':');
    parts.push_back(rest.substr(0, colon));
    if (colon == std::string_view::npos) break;
    rest = rest.substr(colon + 1);
  }
  if (parts.size() < 2 || parts.size() > 3)
    throw UsageError("--vary " + std::string(name) + ": expected min:max[:log|lin]");
  const auto lo = parse_double(parts[0]);
  const auto hi = parse_double(parts[1]);
  if (!lo || !hi) throw UsageError("--vary " + std::string(name) + ": bounds are not numbers");
  SearchAxis axis{*param, *lo, *hi, AxisScale::log};
  if (parts.size() == 3) {
    if (parts[2] == "lin")
      axis.scale = AxisScale::linear;
    else if (parts[2] != "log")
      throw UsageError("--vary " + std::string(name) + ": scale must be log or lin");
  }
  if (!(axis.min < axis.max)) throw UsageError("--vary " + std::string(name) + ": need min < max");
  if (!(axis.min > 0.0)) throw UsageError("--vary " + std::string(name) + ": bounds must be > 0");
  return axis;
}

json design_json(const DesignResult& r) {
  json j;
  j["objective"] = r.objective;
  j["argmin_freq_hz"] = r.argmin_frequency;
  j["r_m"] = r.parameters.radius;
  j["p_w"] = r.parameters.power;
  j["lambda_m"] = r.parameters.wavelength;
  j["w_m"] = r.parameters.waist;
  j["pvac_torr"] = r.parameters.pressure_torr;
  j["g"] = r.parameters.geometric_factor;
  j["lambda_lt_r"] = r.constraints.lambda_lt_R;
  j["radiation_dominates"] = r.constraints.radiation_dominates;
  j["waist_near_r"] = r.constraints.waist_near_R;
  j["feasible"] = r.feasible;
  return j;
}

int cmd_optimize(const GlobalOptions& g, const OptimizeArgs& a, std::ostream& out) {
  require_out(g);
  SearchSpace space;
  std::set<DesignParam> seen;
  for (const auto& v : a.vary) {
    const auto axis = parse_vary(v);
    if (!seen.insert(axis.param).second)
      throw UsageError("duplicate --vary for " + std::string(param_name(axis.param)));
    space.axes.push_back(axis);
  }
  if (!(a.fmin > 0.0) || !(a.fmin < a.fmax)) throw UsageError("need 0 < --fmin < --fmax");
  if (a.freq_points < 2) throw UsageError("--freq-points must be >= 2");
  if (a.points_per_axis < 2) throw UsageError("--points-per-axis must be >= 2");
  const auto config = load_experiment(g);
  const auto grid = log_spaced(a.fmin, a.fmax, a.freq_points);

  ScanSettings settings;
  settings.points_per_axis = a.points_per_axis;
  settings.max_grid_size = a.max_grid;
  std::vector<DesignResult> scan;
  if (space.axes.empty())
    scan.push_back(evaluate_design(config, design_point_of(config), grid));
  else
    scan = grid_scan(space, config, grid, settings);
  const auto cert = certificate_from_scan(scan, space, config, grid);

  const auto n = scan.size();
  std::vector<std::vector<double>> cols(9, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = scan[i];
    const auto& p = r.parameters;
    const double vals[] = {r.objective,      r.argmin_frequency, p.radius,
                           p.power,          p.wavelength,       p.waist,
                           p.pressure_torr,  p.geometric_factor, r.feasible ? 1.0 : 0.0};
    for (std::size_t c = 0; c < 9; ++c) cols[c][i] = vals[c];
  }
  std::vector<std::span<const double>> views(cols.begin(), cols.end());

  json c;
  if (cert) {
    c["infeasible_in_space"] = false;
    c.update(design_json(*cert));
    c["warnings"] = warnings_json(validity_warnings(apply_design(config, cert->parameters)));
  } else {
    c["infeasible_in_space"] = true;
    c["evaluated_designs"] = n;
    c["warnings"] = json::array();
  }

  write_file_atomic(g.out_path, format_csv(kDesignHeader, views));
  write_json(sidecar(g.out_path, ".certificate.json"), c);
  auto m = manifest(g, &config, false);
  json axes = json::array();
  for (const auto& axis : space.axes)
    axes.push_back({{"name", param_name(axis.param)},
                    {"min", axis.min},
                    {"max", axis.max},
                    {"scale", axis.scale == AxisScale::log ? "log" : "lin"}});
  m["search_axes"] = axes;
  m["fmin_hz"] = a.fmin;
  m["fmax_hz"] = a.fmax;
  m["freq_points"] = a.freq_points;
  m["points_per_axis"] = a.points_per_axis;
  write_json(sidecar(g.out_path, ".manifest.json"), m);
  out << "wrote " << g.out_path << " (" << n << " designs); ";
  if (cert)
    out << "certificate objective " << format_double(cert->objective) << "\n";
  else
    out << "infeasible in search space\n";
  return exit_ok;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return exit_usage;
  if (dynamic_cast<const ConfigError*>(&e)) return exit_config;
  if (dynamic_cast<const IoError*>(&e)) return exit_io;
  if (dynamic_cast<const SimulationFault*>(&e)) return exit_simulation;
  return exit_domain;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noise budgets, simulation and design search for a levitated-sphere sensor",
               "levnoise"};
  app.set_version_flag("--version", std::string(LEVNOISE_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "Experiment config file");
  app.add_option("--out", g.out_path, "Output CSV path; JSON side files use it as prefix");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--extra-noise", g.extra_noise_path,
                 "Extra displacement noise CSV (freq_hz,asd_m_per_sqrthz)");
  app.add_option("--threads", g.threads, "OpenMP thread count (0 = runtime default)")
      ->check(CLI::NonNegativeNumber);

  BudgetArgs budget;
  auto* budget_cmd = app.add_subcommand("budget", "Analytic noise budget over a log grid");
  budget_cmd->add_option("--fmin", budget.fmin, "Lowest frequency (Hz)");
  budget_cmd->add_option("--fmax", budget.fmax, "Highest frequency (Hz)");
  budget_cmd->add_option("--points", budget.points, "Grid points");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Stochastic time-domain simulation");
  sim_cmd->add_option("--duration", sim.duration, "Simulated time (s)")->required();

  PsdArgs psd;
  auto* psd_cmd = app.add_subcommand("psd", "Welch PSD of a simulated measurement record");
  psd_cmd->add_option("--input", psd.input, "Time-series CSV from `simulate`")->required();
  psd_cmd->add_option("--segment-length", psd.segment_length, "Samples per segment");
  psd_cmd->add_option("--overlap", psd.overlap, "Segment overlap fraction");
  psd_cmd->add_option("--window", psd.window, "hann or rectangular");

  OptimizeArgs opt;
  auto* opt_cmd = app.add_subcommand("optimize", "Grid scan, refinement and certificate");
  opt_cmd->add_option("--vary", opt.vary, "NAME=min:max[:log|lin]; NAME in " + allowed_names());
  opt_cmd->add_option("--fmin", opt.fmin, "Lowest frequency (Hz)");
  opt_cmd->add_option("--fmax", opt.fmax, "Highest frequency (Hz)");
  opt_cmd->add_option("--freq-points", opt.freq_points, "Frequency grid points");
  opt_cmd->add_option("--points-per-axis", opt.points_per_axis, "Grid points per varied axis");
  opt_cmd->add_option("--max-grid", opt.max_grid, "Cap on the total number of grid points");

  g.command_line = "levnoise";
  for (const auto& a : args) g.command_line += " " + a;

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (g.threads > 0) omp_set_num_threads(g.threads);
    if (budget_cmd->parsed()) return cmd_budget(g, budget, out);
    if (sim_cmd->parsed()) return cmd_simulate(g, sim, out);
    if (psd_cmd->parsed()) return cmd_psd(g, psd, out);
    if (opt_cmd->parsed()) return cmd_optimize(g, opt, out);
  } catch (const std::exception& e) {
    err << "levnoise: error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return exit_usage;
}

}  // namespace levnoise
