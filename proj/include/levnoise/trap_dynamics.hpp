#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "levnoise/config.hpp"
#include "levnoise/noise_budget.hpp"

namespace levnoise {

// Time-domain simulation of one motional degree of freedom:
//
//   x'' = -omega0^2 x - gamma x' + (F_fb + F_stoch) / m
//
// integrated with semi-implicit (symplectic) Euler-Maruyama. The white
// stochastic force has one-sided PSD S_F, drawn per step as a Gaussian with
// variance S_F / (2 dt). The shadow sensor adds white noise of one-sided ASD
// delta_x_shot at the detector sampling rate, and the PD controller runs at
// that rate with zero-order hold across integrator substeps.

struct SimParams {
  double duration = 0.0;   // s
  double time_step = 0.0;  // s, integrator step
  std::uint64_t seed = 0;
  double omega0 = 0.0;  // rad/s
  double gamma = 0.0;   // 1/s
  int record_decimation = 1;
  double initial_position = 0.0;  // m
  double initial_velocity = 0.0;  // m/s
  // Draw the initial state from the closed-loop thermal distribution.
  bool thermal_start = false;
};

/// Throws DomainError on violated invariants, including the resolution guard
/// omega0 * time_step < 0.1.
void validate(const SimParams& params);

/// Deterministic Gaussian source owned by one run.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : engine_(seed) {}

  double gaussian() { return normal_(engine_); }

  bool operator==(const NoiseSource&) const = default;

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

struct SimState {
  explicit SimState(std::uint64_t seed) : rng(seed) {}

  double time = 0.0;
  double position = 0.0;
  double velocity = 0.0;
  std::uint64_t step_index = 0;
  NoiseSource rng;

  bool operator==(const SimState&) const = default;
};

struct ForceNoise {
  double gas_psd = 0.0;         // N^2/Hz
  double backaction_psd = 0.0;  // N^2/Hz

  double total() const { return gas_psd + backaction_psd; }
};

/// Everything a run needs, derived from the experiment description.
struct SimInputs {
  SimParams params;
  ForceNoise forces;
  double measurement_asd = 0.0;  // m/sqrt(Hz)
  double mass = 0.0;
  double sampling_rate = 0.0;  // Hz, measurement/controller rate
  int substeps = 1;            // integrator steps per measurement
};

/// omega0 from the calibrated trap law (zero on the vertical axis),
/// gamma = 1/tau_gas + 1/tau_rad, force PSDs and shot-noise ASD. The time
/// step comes from `sim.time_step_s` when set; otherwise the smallest number
/// of substeps per sample with omega_eff * dt <= 0.05.
SimInputs derive_sim_inputs(const ExperimentConfig& config, double duration, std::uint64_t seed);

/// Precomputed single-step update for fixed parameters.
class Integrator {
 public:
  Integrator(const SimParams& params, double mass, double force_psd);

  /// One semi-implicit Euler-Maruyama step with feedback force held fixed.
  void advance(SimState& state, double feedback_force) const;

 private:
  double dt_;
  double omega0_sq_;
  double gamma_;
  double inv_mass_;
  double force_sigma_;
};

/// Value-semantics wrapper around Integrator::advance. Throws
/// SimulationFault if the new state is not finite.
SimState step(const SimState& state, const SimParams& params, double mass,
              const ForceNoise& forces, double feedback_force);

/// x_true + n with n ~ N(0, asd^2 f_s / 2).
double measure(double true_position, double measurement_asd, double sampling_rate,
               NoiseSource& rng);

/// PD law on the measurement history (latest last):
/// F = -m (g_p x_hat + g_d v_hat), v_hat a backward difference, clamped to
/// +-force_limit. Zero when disabled or while the history is too short.
double feedback_force(std::span<const double> history, const FeedbackConfig& feedback,
                      const SphereConfig& sphere, double sampling_rate);

/// Streaming form of feedback_force.
class FeedbackController {
 public:
  FeedbackController(const FeedbackConfig& feedback, double mass, double sampling_rate);

  double update(double measurement);

 private:
  FeedbackConfig feedback_;
  double mass_;
  double sampling_rate_;
  double previous_ = 0.0;
  std::size_t count_ = 0;
};

struct TimeSeries {
  double sample_interval = 0.0;  // s
  std::vector<double> true_position;
  std::vector<double> measured_position;
  std::vector<double> feedback_force;

  std::size_t size() const { return true_position.size(); }
  bool operator==(const TimeSeries&) const = default;
};

/// Noise-channel switches for controlled experiments.
struct SimOptions {
  bool thermal_force = true;
  bool backaction_force = true;
  bool measurement_noise = true;
};

/// Receives each recorded sample in time order.
class SampleSink {
 public:
  virtual ~SampleSink() = default;
  virtual void on_sample(double time, double true_position, double measured_position,
                         double feedback_force) = 0;
};

/// Core run loop shared by every entry point below. Returns the number of
/// recorded samples.
std::size_t run_simulation(const ExperimentConfig& config, const SimParams& params,
                           const SimOptions& options, SampleSink& sink);

TimeSeries simulate(const ExperimentConfig& config, const SimParams& params,
                    const SimOptions& options = {});

/// Convenience: derive_sim_inputs + simulate.
TimeSeries simulate(const ExperimentConfig& config, double duration, std::uint64_t seed,
                    const SimOptions& options = {});

// --- Ensemble kernels ------------------------------------------------------
// Each run is strictly sequential; independent runs are distributed across
// OpenMP threads. The *_serial variants are the reference implementations.

/// Welford accumulator.
struct RunningMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x);
  double variance() const;  // population variance
};

/// Variance of the true position over samples recorded after `burn_in` s.
/// The run lasts burn_in + params.duration.
double steady_state_variance(const ExperimentConfig& config, const SimParams& params,
                             const SimOptions& options, double burn_in);

struct EnsembleResult {
  std::vector<double> member_variances;
  double mean_variance = 0.0;
  double standard_error = 0.0;
};

/// SplitMix64 of (base, index); decorrelates member seeds.
std::uint64_t member_seed(std::uint64_t base, std::size_t index);

EnsembleResult ensemble_variance(const ExperimentConfig& config, const SimParams& params,
                                 std::size_t members, const SimOptions& options,
                                 double burn_in);
EnsembleResult ensemble_variance_serial(const ExperimentConfig& config, const SimParams& params,
                                        std::size_t members, const SimOptions& options,
                                        double burn_in);

struct ColdDampingPoint {
  double gain = 0.0;      // g_d, 1/s
  double variance = 0.0;  // m^2, true position
};

/// Derivative-feedback sweep. Each gain runs from a thermal start with the
/// same seed (common random numbers), discards 10/(gamma + g_d) s, then
/// measures over params.duration.
std::vector<ColdDampingPoint> cold_damping_scan(const ExperimentConfig& config,
                                                const SimParams& params,
                                                std::span<const double> gains);
std::vector<ColdDampingPoint> cold_damping_scan_serial(const ExperimentConfig& config,
                                                       const SimParams& params,
                                                       std::span<const double> gains);

}  // namespace levnoise
