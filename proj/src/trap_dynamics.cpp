#include "levnoise/trap_dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "levnoise/constants.hpp"
#include "levnoise/csv.hpp"
#include "levnoise/errors.hpp"

namespace levnoise {

namespace {

constexpr double kResolutionGuard = 0.1;
constexpr double kAutoResolution = 0.05;

void check_vertical_stabilized(const ExperimentConfig& config) {
  if (config.trap_axis == TrapAxis::vertical &&
      (!config.feedback.enabled || !(config.feedback.proportional_gain > 0.0)))
    throw DomainError("unstabilized vertical mode: vertical axis needs feedback with gp > 0");
}

int substeps_for(double sampling_rate, double time_step) {
  const double n = std::round(1.0 / (sampling_rate * time_step));
  return static_cast<int>(std::max(1.0, n));
}

}  // namespace

void validate(const SimParams& p) {
  if (!(p.time_step > 0.0)) throw DomainError("time_step must be > 0");
  if (!(p.duration >= 10.0 * p.time_step))
    throw DomainError("duration must be at least 10 time steps");
  if (!(p.omega0 >= 0.0)) throw DomainError("omega0 must be >= 0");
  if (!(p.gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  if (!(p.omega0 * p.time_step < kResolutionGuard))
    throw DomainError("resolution guard violated: omega0 * time_step = " +
                      format_double(p.omega0 * p.time_step) + " (must be < 0.1)");
  if (p.record_decimation < 1) throw DomainError("record_decimation must be >= 1");
}

SimInputs derive_sim_inputs(const ExperimentConfig& config, double duration,
                            std::uint64_t seed) {
  const auto model = oscillator_model(config);
  SimInputs in;
  in.mass = model.mass;
  in.sampling_rate = config.detector.sampling_rate;
  in.forces.gas_psd = gas_thermal_force_psd(config.sphere, config.vacuum, model.tau_gas);
  in.forces.backaction_psd = backaction_force_psd(config.sphere, config.beam, config.detector);
  in.measurement_asd = shot_noise_asd(config.sphere, config.beam, config.detector);

  if (config.sim.time_step) {
    in.substeps = substeps_for(in.sampling_rate, *config.sim.time_step);
  } else {
    const double gp = config.feedback.enabled ? config.feedback.proportional_gain : 0.0;
    const double omega_eff = std::sqrt(model.omega0 * model.omega0 + gp);
    in.substeps = std::max(1, static_cast<int>(std::ceil(omega_eff / (in.sampling_rate * kAutoResolution))));
  }

  auto& p = in.params;
  p.duration = duration;
  p.time_step = 1.0 / (in.sampling_rate * in.substeps);
  p.seed = seed;
  p.omega0 = model.omega0;
  p.gamma = model.gamma();
  p.record_decimation = config.sim.record_decimation;
  return in;
}

Integrator::Integrator(const SimParams& params, double mass, double force_psd)
    : dt_(params.time_step),
      omega0_sq_(params.omega0 * params.omega0),
      gamma_(params.gamma),
      inv_mass_(1.0 / mass),
      force_sigma_(std::sqrt(force_psd / (2.0 * params.time_step))) {}

void Integrator::advance(SimState& s, double feedback_force) const {
  const double stochastic = force_sigma_ > 0.0 ? force_sigma_ * s.rng.gaussian() : 0.0;
  s.velocity += dt_ * (-omega0_sq_ * s.position - gamma_ * s.velocity +
                       (feedback_force + stochastic) * inv_mass_);
  s.position += dt_ * s.velocity;
  ++s.step_index;
  s.time = static_cast<double>(s.step_index) * dt_;
}

SimState step(const SimState& state, const SimParams& params, double mass,
              const ForceNoise& forces, double feedback_force) {
  SimState next = state;
  Integrator(params, mass, forces.total()).advance(next, feedback_force);
  if (!std::isfinite(next.position) || !std::isfinite(next.velocity))
    throw SimulationFault("integration fault: non-finite state", next.step_index);
  return next;
}

double measure(double true_position, double measurement_asd, double sampling_rate,
               NoiseSource& rng) {
  if (measurement_asd == 0.0) return true_position;
  return true_position + measurement_asd * std::sqrt(0.5 * sampling_rate) * rng.gaussian();
}

namespace {

double pd_force(double x_hat, double v_hat, const FeedbackConfig& fb, double mass) {
  const double f = -mass * (fb.proportional_gain * x_hat + fb.derivative_gain * v_hat);
  return std::clamp(f, -fb.force_limit, fb.force_limit);
}

}  // namespace

double feedback_force(std::span<const double> history, const FeedbackConfig& feedback,
                      const SphereConfig& sphere, double sampling_rate) {
  if (!feedback.enabled || history.empty()) return 0.0;
  const bool needs_derivative = feedback.derivative_gain > 0.0;
  if (needs_derivative && history.size() < 2) return 0.0;
  const double x_hat = history.back();
  const double v_hat =
      needs_derivative ? (history.back() - history[history.size() - 2]) * sampling_rate : 0.0;
  return pd_force(x_hat, v_hat, feedback, sphere_mass(sphere));
}

FeedbackController::FeedbackController(const FeedbackConfig& feedback, double mass,
                                       double sampling_rate)
    : feedback_(feedback), mass_(mass), sampling_rate_(sampling_rate) {}

double FeedbackController::update(double measurement) {
  const double prev = previous_;
  previous_ = measurement;
  ++count_;
  if (!feedback_.enabled) return 0.0;
  const bool needs_derivative = feedback_.derivative_gain > 0.0;
  if (needs_derivative && count_ < 2) return 0.0;
  const double v_hat = needs_derivative ? (measurement - prev) * sampling_rate_ : 0.0;
  return pd_force(measurement, v_hat, feedback_, mass_);
}

std::size_t run_simulation(const ExperimentConfig& config, const SimParams& params,
                           const SimOptions& options, SampleSink& sink) {
  validate(params);
  check_vertical_stabilized(config);

  const auto model = oscillator_model(config);
  const double mass = model.mass;
  const double f_s = config.detector.sampling_rate;
  const int substeps = substeps_for(f_s, params.time_step);
  SimParams run = params;
  run.time_step = 1.0 / (f_s * substeps);

  double force_psd = 0.0;
  if (options.thermal_force)
    force_psd += gas_thermal_force_psd(config.sphere, config.vacuum, model.tau_gas);
  if (options.backaction_force)
    force_psd += backaction_force_psd(config.sphere, config.beam, config.detector);
  const double meas_asd =
      options.measurement_noise ? shot_noise_asd(config.sphere, config.beam, config.detector) : 0.0;

  const auto samples = static_cast<std::uint64_t>(std::floor(run.duration * f_s + 1e-9));
  const auto decimation = static_cast<std::uint64_t>(run.record_decimation);
  if (samples / decimation + (samples % decimation ? 1 : 0) < 2)
    throw DomainError("duration shorter than two recorded samples");

  SimState state(run.seed);
  state.position = run.initial_position;
  state.velocity = run.initial_velocity;
  if (run.thermal_start) {
    const double kT = constants::k_B * config.vacuum.gas_temperature;
    const double gp = config.feedback.enabled ? config.feedback.proportional_gain : 0.0;
    const double stiffness = run.omega0 * run.omega0 + gp;
    if (stiffness > 0.0) state.position += std::sqrt(kT / (mass * stiffness)) * state.rng.gaussian();
    state.velocity += std::sqrt(kT / mass) * state.rng.gaussian();
  }

  const Integrator integrator(run, mass, force_psd);
  FeedbackController controller(config.feedback, mass, f_s);
  std::size_t recorded = 0;
  for (std::uint64_t k = 0; k < samples; ++k) {
    const double y = measure(state.position, meas_asd, f_s, state.rng);
    const double f_fb = controller.update(y);
    if (k % decimation == 0) {
      sink.on_sample(static_cast<double>(k) / f_s, state.position, y, f_fb);
      ++recorded;
    }
    for (int j = 0; j < substeps; ++j) integrator.advance(state, f_fb);
    if (!std::isfinite(state.position) || !std::isfinite(state.velocity))
      throw SimulationFault("integration fault: non-finite state", state.step_index);
  }
  return recorded;
}

namespace {

class SeriesSink final : public SampleSink {
 public:
  explicit SeriesSink(TimeSeries& out) : out_(out) {}
  void on_sample(double, double x, double y, double f) override {
    out_.true_position.push_back(x);
    out_.measured_position.push_back(y);
    out_.feedback_force.push_back(f);
  }

 private:
  TimeSeries& out_;
};

}  // namespace

TimeSeries simulate(const ExperimentConfig& config, const SimParams& params,
                    const SimOptions& options) {
  TimeSeries series;
  series.sample_interval = params.record_decimation / config.detector.sampling_rate;
  const auto expected = static_cast<std::size_t>(
      params.duration * config.detector.sampling_rate / params.record_decimation + 2);
  series.true_position.reserve(expected);
  series.measured_position.reserve(expected);
  series.feedback_force.reserve(expected);
  SeriesSink sink(series);
  run_simulation(config, params, options, sink);
  return series;
}

TimeSeries simulate(const ExperimentConfig& config, double duration, std::uint64_t seed,
                    const SimOptions& options) {
  return simulate(config, derive_sim_inputs(config, duration, seed).params, options);
}

}  // namespace levnoise
