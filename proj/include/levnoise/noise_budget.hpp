#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levnoise/config.hpp"

namespace levnoise {

// Closed-form noise and damping laws for a dielectric sphere levitated at the
// focus of a vertical beam, and their composition into a displacement-noise
// budget.
//
// Conventions used throughout:
//  * PSDs are one-sided; ASD = sqrt(PSD).
//  * Damping times are velocity-damping times: gamma = 1/tau, Q = omega0/gamma.
//  * Forms with numeric prefactors ("calibrated") use the prefactors exactly;
//    "years" are Julian years.

enum class TrapForm { symbolic, calibrated };

/// White shot-noise ASD of the shadow-sensor position readout,
/// G * sqrt(hbar c R^2 / (lambda P)), in m/sqrt(Hz).
double shot_noise_asd(const SphereConfig& sphere, const BeamConfig& beam,
                      const DetectorConfig& detector);

/// Same quantity from the rounded prefactor,
/// 5e-16 G (R/1um) (100mW/P)^1/2 (1um/lambda)^1/2. Cross-check only.
double shot_noise_asd_calibrated(const SphereConfig& sphere, const BeamConfig& beam,
                                 const DetectorConfig& detector);

/// Free-mass standard quantum limit sqrt(hbar / (m w^2)), w = 2 pi f.
double sql_asd(const SphereConfig& sphere, double frequency);

/// P / (4 w^2), W/m^2.
double central_intensity(const BeamConfig& beam);

/// 7 (R/1um) (1e-10 Torr / P_vac) years, returned in seconds.
double gas_damping_time(const SphereConfig& sphere, const VacuumConfig& vacuum);

/// 1e-3 (R/1um) (1e10 W m^-2 / I) years, returned in seconds.
double radiation_damping_time(const SphereConfig& sphere, double intensity);

/// Transverse dipole-trap angular frequency (rad/s).
/// symbolic:   sqrt(I / (rho R^2 c))
/// calibrated: 2 pi * 5 kHz * (1um/R) * (I / 1e9 W m^-2)^1/2
double trap_frequency(const SphereConfig& sphere, double intensity,
                      TrapForm form = TrapForm::calibrated);

/// 1e10 (1e9 W m^-2 / I)^1/2; independent of R.
double mechanical_q(double intensity);

struct DampingTimes {
  double tau_gas = 0.0;  // s
  double tau_rad = 0.0;  // s
  // Radiation-pressure noise exceeds gas noise; strict tau_gas > tau_rad.
  bool radiation_dominates = false;
};

DampingTimes damping_dominance_check(const SphereConfig& sphere, const VacuumConfig& vacuum,
                                     double intensity);

/// One-sided radiation-pressure back-action force PSD (N^2/Hz):
/// eta^2 hbar^2 / (4 S_x_ideal) with S_x_ideal the G = 1 shot PSD, which is
/// eta^2 hbar lambda P / (4 c R^2).
double backaction_force_psd(const SphereConfig& sphere, const BeamConfig& beam,
                            const DetectorConfig& detector);

/// |chi(w)| = 1 / (m sqrt((w0^2 - w^2)^2 + gamma^2 w^2)), m/N.
double mechanical_susceptibility(const SphereConfig& sphere, double trap_omega, double gamma,
                                 double frequency);

/// Fluctuation-dissipation force PSD 4 k_B T m / tau_gas (one-sided).
double gas_thermal_force_psd(const SphereConfig& sphere, const VacuumConfig& vacuum,
                             double tau_gas);

/// F = asd_meas / asd_sql.
double figure_of_merit(double asd_meas, double asd_sql);

/// Mechanical parameters of the simulated/budgeted axis.
struct OscillatorModel {
  double mass = 0.0;       // kg
  double intensity = 0.0;  // W/m^2
  double omega0 = 0.0;     // rad/s; zero on the vertical axis
  double tau_gas = 0.0;    // s
  double tau_rad = 0.0;    // s

  double gamma() const { return 1.0 / tau_gas + 1.0 / tau_rad; }
};

OscillatorModel oscillator_model(const ExperimentConfig& config);

struct BudgetComponents {
  double frequency = 0.0;  // Hz
  double asd_shot = 0.0;
  double asd_backaction = 0.0;
  double asd_gas_thermal = 0.0;
  double asd_extra = 0.0;
  double asd_total = 0.0;
  double asd_sql = 0.0;
  double figure_of_merit = 0.0;
};

/// Branch switches; the defaults produce the full budget.
struct BudgetOptions {
  std::optional<double> trap_omega;  // overrides the axis rule (0 = free mass)
  bool include_backaction = true;
  bool include_gas_thermal = true;
  bool include_extra = true;
};

struct NoiseBudget {
  ExperimentConfig config_snapshot;
  std::vector<BudgetComponents> rows;
  std::vector<std::string> warnings;
};

NoiseBudget compute_budget(const ExperimentConfig& config, std::span<const double> frequencies,
                           const BudgetOptions& options = {});

/// n log-spaced points from lo to hi inclusive (endpoints exact).
std::vector<double> log_spaced(double lo, double hi, std::size_t n);

}  // namespace levnoise
