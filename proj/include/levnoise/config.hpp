#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace levnoise {

// All lengths in metres, powers in watts. Vacuum pressure stays in Torr
// because the gas-damping law is calibrated in Torr.

struct SphereConfig {
  double radius = 1e-6;      // m
  double density = 2000.0;   // kg/m^3

  bool operator==(const SphereConfig&) const = default;
};

/// (4/3) pi rho R^3.
double sphere_mass(const SphereConfig& sphere);

struct BeamConfig {
  double power = 0.1;         // W
  double wavelength = 1e-6;   // m
  double waist = 1e-6;        // m

  bool operator==(const BeamConfig&) const = default;
};

struct VacuumConfig {
  double pressure_torr = 1e-10;
  double gas_temperature = 300.0;  // K

  double pressure_pa() const;

  bool operator==(const VacuumConfig&) const = default;
};

struct DetectorConfig {
  double geometric_factor = 10.0;
  double sampling_rate = 1e6;  // Hz
  // Unset means "follow geometric_factor": photons lost from the position
  // readout still push on the sphere.
  std::optional<double> backaction_loss_factor;

  double loss_factor() const { return backaction_loss_factor.value_or(geometric_factor); }

  bool operator==(const DetectorConfig&) const = default;
};

struct FeedbackConfig {
  bool enabled = false;
  double proportional_gain = 0.0;  // 1/s^2
  double derivative_gain = 0.0;    // 1/s
  double force_limit = 1e-9;       // N

  bool operator==(const FeedbackConfig&) const = default;
};

enum class TrapAxis { transverse, vertical };

/// User-supplied displacement noise floor (laser jitter, seismic, ...).
struct NoiseCurve {
  std::vector<double> frequencies;  // Hz, strictly increasing
  std::vector<double> asd_values;   // m/sqrt(Hz)

  /// Log-log linear inside the support, zero outside. Segments touching a
  /// zero ASD fall back to linear-in-log-frequency.
  double interpolate(double frequency) const;

  bool operator==(const NoiseCurve&) const = default;
};

/// Integration settings carried in the `sim.*` section.
struct SimSettings {
  std::optional<double> time_step;  // s; unset picks substeps automatically
  int record_decimation = 1;

  bool operator==(const SimSettings&) const = default;
};

struct ExperimentConfig {
  SphereConfig sphere;
  BeamConfig beam;
  VacuumConfig vacuum;
  DetectorConfig detector;
  FeedbackConfig feedback;
  TrapAxis trap_axis = TrapAxis::transverse;
  std::optional<NoiseCurve> extra_noise;
  SimSettings sim;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Regime-of-validity conditions. These are warnings, never errors.
struct ValidityFlags {
  bool wavelength_not_below_radius = false;  // lambda >= R
  bool waist_far_from_radius = false;        // w outside [R/2, 2R]
};

ValidityFlags validity_flags(const ExperimentConfig& config);
std::vector<std::string> validity_warnings(const ExperimentConfig& config);

/// Throws ConfigError naming the offending key and its bound.
void validate(const ExperimentConfig& config);
void validate(const NoiseCurve& curve);

/// Parses the line-oriented `section.key = value` document.
ExperimentConfig parse_config(std::string_view text);

/// Reads and parses a file; a missing or unreadable file is an IoError.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Inverse of parse_config; re-parsing yields an equal config (extra_noise
/// is not part of the key-value document and is dropped).
std::string serialize_config(const ExperimentConfig& config);

/// Two-column `freq_hz,asd_m_per_sqrthz` CSV with a mandatory header.
NoiseCurve parse_noise_curve_csv(std::string_view text);
NoiseCurve load_noise_curve(const std::filesystem::path& path);

/// R = 1 um, P = 100 mW, lambda = 1 um, w = 1 um, G = 10, 1e-10 Torr, 300 K.
ExperimentConfig reference_config();

std::string_view to_string(TrapAxis axis);

}  // namespace levnoise
