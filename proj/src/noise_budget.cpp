#include "levnoise/noise_budget.hpp"

#include <cmath>

#include "levnoise/constants.hpp"
#include "levnoise/csv.hpp"
#include "levnoise/errors.hpp"

namespace levnoise {

namespace {

constexpr double kMicron = 1e-6;

void require_positive(double value, const char* what) {
  if (!(value > 0.0)) throw DomainError(std::string(what) + " must be > 0, got " + format_double(value));
}

}  // namespace

double shot_noise_asd(const SphereConfig& sphere, const BeamConfig& beam,
                      const DetectorConfig& detector) {
  const double r = sphere.radius;
  return detector.geometric_factor *
         std::sqrt(constants::hbar * constants::c * r * r / (beam.wavelength * beam.power));
}

double shot_noise_asd_calibrated(const SphereConfig& sphere, const BeamConfig& beam,
                                 const DetectorConfig& detector) {
  return 5e-16 * detector.geometric_factor * (sphere.radius / kMicron) *
         std::sqrt(0.1 / beam.power) * std::sqrt(kMicron / beam.wavelength);
}

double sql_asd(const SphereConfig& sphere, double frequency) {
  require_positive(frequency, "frequency");
  const double omega = 2.0 * constants::pi * frequency;
  return std::sqrt(constants::hbar / (sphere_mass(sphere) * omega * omega));
}

double central_intensity(const BeamConfig& beam) {
  return beam.power / (4.0 * beam.waist * beam.waist);
}

double gas_damping_time(const SphereConfig& sphere, const VacuumConfig& vacuum) {
  return 7.0 * (sphere.radius / kMicron) * (1e-10 / vacuum.pressure_torr) * constants::year_s;
}

double radiation_damping_time(const SphereConfig& sphere, double intensity) {
  require_positive(intensity, "intensity");
  return (sphere.radius / kMicron) * (1e10 / intensity) * (constants::year_s / 1000.0);
}

double trap_frequency(const SphereConfig& sphere, double intensity, TrapForm form) {
  require_positive(intensity, "intensity");
  if (form == TrapForm::symbolic) {
    const double r = sphere.radius;
    return std::sqrt(intensity / (sphere.density * r * r * constants::c));
  }
  return 2.0 * constants::pi * 5000.0 * (kMicron / sphere.radius) * std::sqrt(intensity / 1e9);
}

double mechanical_q(double intensity) {
  require_positive(intensity, "intensity");
  return 1e10 * std::sqrt(1e9 / intensity);
}

DampingTimes damping_dominance_check(const SphereConfig& sphere, const VacuumConfig& vacuum,
                                     double intensity) {
  DampingTimes t;
  t.tau_gas = gas_damping_time(sphere, vacuum);
  t.tau_rad = radiation_damping_time(sphere, intensity);
  t.radiation_dominates = t.tau_gas > t.tau_rad;
  return t;
}

double backaction_force_psd(const SphereConfig& sphere, const BeamConfig& beam,
                            const DetectorConfig& detector) {
  const double eta = detector.loss_factor();
  const double r = sphere.radius;
  return eta * eta * constants::hbar * beam.wavelength * beam.power /
         (4.0 * constants::c * r * r);
}

double mechanical_susceptibility(const SphereConfig& sphere, double trap_omega, double gamma,
                                 double frequency) {
  require_positive(frequency, "frequency");
  if (gamma < 0.0) throw DomainError("damping rate must be >= 0");
  const double omega = 2.0 * constants::pi * frequency;
  const double detune = trap_omega * trap_omega - omega * omega;
  const double denom = detune * detune + gamma * gamma * omega * omega;
  if (denom == 0.0) throw DomainError("undamped resonance: susceptibility is singular");
  return 1.0 / (sphere_mass(sphere) * std::sqrt(denom));
}

double gas_thermal_force_psd(const SphereConfig& sphere, const VacuumConfig& vacuum,
                             double tau_gas) {
  require_positive(tau_gas, "tau_gas");
  return 4.0 * constants::k_B * vacuum.gas_temperature * sphere_mass(sphere) / tau_gas;
}

double figure_of_merit(double asd_meas, double asd_sql) {
  require_positive(asd_sql, "SQL ASD");
  return asd_meas / asd_sql;
}

OscillatorModel oscillator_model(const ExperimentConfig& config) {
  OscillatorModel m;
  m.mass = sphere_mass(config.sphere);
  m.intensity = central_intensity(config.beam);
  // Light forces only confine transversely; the vertical mode is held by the
  // ring-electrode feedback.
  m.omega0 = config.trap_axis == TrapAxis::transverse
                 ? trap_frequency(config.sphere, m.intensity, TrapForm::calibrated)
                 : 0.0;
  m.tau_gas = gas_damping_time(config.sphere, config.vacuum);
  m.tau_rad = radiation_damping_time(config.sphere, m.intensity);
  return m;
}

NoiseBudget compute_budget(const ExperimentConfig& config, std::span<const double> frequencies,
                           const BudgetOptions& options) {
  if (frequencies.empty()) throw DomainError("compute_budget: empty frequency list");
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    require_positive(frequencies[i], "frequency");
    if (i > 0 && !(frequencies[i] > frequencies[i - 1]))
      throw DomainError("compute_budget: frequencies must be strictly increasing");
  }

  const auto model = oscillator_model(config);
  const double omega0 = options.trap_omega.value_or(model.omega0);
  const double gamma = model.gamma();
  const double shot = shot_noise_asd(config.sphere, config.beam, config.detector);
  const double sf_ba =
      options.include_backaction ? backaction_force_psd(config.sphere, config.beam, config.detector)
                                 : 0.0;
  const double sf_gas = options.include_gas_thermal
                            ? gas_thermal_force_psd(config.sphere, config.vacuum, model.tau_gas)
                            : 0.0;
  const NoiseCurve* extra =
      options.include_extra && config.extra_noise ? &*config.extra_noise : nullptr;

  NoiseBudget budget;
  budget.config_snapshot = config;
  budget.warnings = validity_warnings(config);
  budget.rows.reserve(frequencies.size());
  for (double f : frequencies) {
    BudgetComponents row;
    row.frequency = f;
    const double chi = mechanical_susceptibility(config.sphere, omega0, gamma, f);
    row.asd_shot = shot;
    row.asd_backaction = chi * std::sqrt(sf_ba);
    row.asd_gas_thermal = chi * std::sqrt(sf_gas);
    row.asd_extra = extra ? extra->interpolate(f) : 0.0;
    row.asd_total = std::sqrt(row.asd_shot * row.asd_shot + row.asd_backaction * row.asd_backaction +
                              row.asd_gas_thermal * row.asd_gas_thermal +
                              row.asd_extra * row.asd_extra);
    row.asd_sql = sql_asd(config.sphere, f);
    row.figure_of_merit = figure_of_merit(row.asd_total, row.asd_sql);
    budget.rows.push_back(row);
  }
  return budget;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo)) throw DomainError("log_spaced: need 0 < lo < hi");
  if (n < 2) throw DomainError("log_spaced: need at least 2 points");
  std::vector<double> out(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace levnoise
