#include <cmath>
#include <exception>
#include <numeric>

#include "levnoise/errors.hpp"
#include "levnoise/trap_dynamics.hpp"

namespace levnoise {

void RunningMoments::add(double x) {
  ++count;
  const double delta = x - mean;
  mean += delta / static_cast<double>(count);
  m2 += delta * (x - mean);
}

double RunningMoments::variance() const {
  return count > 0 ? m2 / static_cast<double>(count) : 0.0;
}

namespace {

class MomentSink final : public SampleSink {
 public:
  explicit MomentSink(double burn_in) : burn_in_(burn_in) {}
  void on_sample(double t, double x, double, double) override {
    if (t >= burn_in_) moments.add(x);
  }
  RunningMoments moments;

 private:
  double burn_in_;
};

EnsembleResult summarize(std::vector<double> variances) {
  EnsembleResult r;
  const double n = static_cast<double>(variances.size());
  r.mean_variance = std::accumulate(variances.begin(), variances.end(), 0.0) / n;
  if (variances.size() > 1) {
    double ss = 0.0;
    for (double v : variances) ss += (v - r.mean_variance) * (v - r.mean_variance);
    r.standard_error = std::sqrt(ss / (n - 1.0) / n);
  }
  r.member_variances = std::move(variances);
  return r;
}

SimParams member_params(const SimParams& params, std::size_t index) {
  SimParams p = params;
  p.seed = member_seed(params.seed, index);
  return p;
}

ExperimentConfig with_derivative_gain(const ExperimentConfig& config, double gain) {
  ExperimentConfig c = config;
  c.feedback.enabled = true;
  c.feedback.derivative_gain = gain;
  return c;
}

double cold_damping_variance(const ExperimentConfig& config, const SimParams& params, double gain) {
  SimParams p = params;
  p.thermal_start = true;
  const double burn_in = 10.0 / (params.gamma + gain);
  return steady_state_variance(with_derivative_gain(config, gain), p, SimOptions{}, burn_in);
}

// Runs body(i) for i in [0, n) across threads; rethrows the first failure.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(levnoise_ensemble_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

double steady_state_variance(const ExperimentConfig& config, const SimParams& params,
                             const SimOptions& options, double burn_in) {
  SimParams p = params;
  p.duration = burn_in + params.duration;
  MomentSink sink(burn_in);
  run_simulation(config, p, options, sink);
  if (sink.moments.count < 2) throw DomainError("too few samples after burn-in");
  return sink.moments.variance();
}

std::uint64_t member_seed(std::uint64_t base, std::size_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

EnsembleResult ensemble_variance_serial(const ExperimentConfig& config, const SimParams& params,
                                        std::size_t members, const SimOptions& options,
                                        double burn_in) {
  if (members == 0) throw DomainError("ensemble needs at least one member");
  std::vector<double> variances(members);
  for (std::size_t i = 0; i < members; ++i)
    variances[i] = steady_state_variance(config, member_params(params, i), options, burn_in);
  return summarize(std::move(variances));
}

EnsembleResult ensemble_variance(const ExperimentConfig& config, const SimParams& params,
                                 std::size_t members, const SimOptions& options,
                                 double burn_in) {
  if (members == 0) throw DomainError("ensemble needs at least one member");
  std::vector<double> variances(members);
  parallel_for(members, [&](std::size_t i) {
    variances[i] = steady_state_variance(config, member_params(params, i), options, burn_in);
  });
  return summarize(std::move(variances));
}

std::vector<ColdDampingPoint> cold_damping_scan_serial(const ExperimentConfig& config,
                                                       const SimParams& params,
                                                       std::span<const double> gains) {
  if (config.trap_axis != TrapAxis::transverse)
    throw DomainError("cold_damping_scan requires the transverse axis");
  std::vector<ColdDampingPoint> out;
  out.reserve(gains.size());
  for (double g : gains) out.push_back({g, cold_damping_variance(config, params, g)});
  return out;
}

std::vector<ColdDampingPoint> cold_damping_scan(const ExperimentConfig& config,
                                                const SimParams& params,
                                                std::span<const double> gains) {
  if (config.trap_axis != TrapAxis::transverse)
    throw DomainError("cold_damping_scan requires the transverse axis");
  std::vector<ColdDampingPoint> out(gains.size());
  parallel_for(gains.size(), [&](std::size_t i) {
    out[i] = {gains[i], cold_damping_variance(config, params, gains[i])};
  });
  return out;
}

}  // namespace levnoise
