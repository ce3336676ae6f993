#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "levnoise/config.hpp"
#include "levnoise/errors.hpp"
#include "levnoise/noise_budget.hpp"
#include "levnoise/trap_dynamics.hpp"
#include "../support/oracles.hpp"

using namespace levnoise;
using oracle::rel_err;
namespace frozen = oracle::frozen;

namespace {

// 1 uW beam at 1e-2 Torr: omega0 = 2 pi 79 Hz, gamma = 0.45 1/s.
ExperimentConfig desk_config() {
  auto c = reference_config();
  c.beam.power = 1e-6;
  c.vacuum.pressure_torr = 1e-2;
  c.detector.sampling_rate = 10240.0;
  return c;
}

double equipartition(const ExperimentConfig& c) {
  const auto m = oscillator_model(c);
  return oracle::k_B * c.vacuum.gas_temperature / (m.mass * m.omega0 * m.omega0);
}

SimParams quiet_params(double omega0, double gamma, double dt, double duration) {
  SimParams p;
  p.omega0 = omega0;
  p.gamma = gamma;
  p.time_step = dt;
  p.duration = duration;
  return p;
}

}  // namespace

TEST_SUITE("trap_dynamics") {
  TEST_CASE("derive_sim_inputs on the reference config") {
    auto c = reference_config();
    const auto in = derive_sim_inputs(c, 1.0, 7);
    CHECK(rel_err(in.params.omega0, frozen::omega0_ref) < 1e-12);
    CHECK(rel_err(in.params.omega0, 2 * oracle::pi * 25000.0) < 1e-12);
    CHECK(rel_err(in.params.gamma, frozen::gamma_ref) < 1e-12);
    CHECK(in.params.seed == 7);
    CHECK(in.substeps == 4);
    CHECK(in.params.omega0 * in.params.time_step < 0.05);
    CHECK(rel_err(in.measurement_asd, 10 * frozen::shot_g1) < 1e-12);
    CHECK(rel_err(in.forces.backaction_psd, 100 * frozen::force_ba_eta1) < 1e-12);
    c.sim.time_step = 1e-7;
    CHECK(derive_sim_inputs(c, 1.0, 7).substeps == 10);
    c.trap_axis = TrapAxis::vertical;
    CHECK(derive_sim_inputs(c, 1.0, 7).params.omega0 == 0.0);
  }

  TEST_CASE("SimParams validation") {
    auto p = quiet_params(1000.0, 1.0, 1e-5, 1.0);
    CHECK_NOTHROW(validate(p));
    p.time_step = 1e-4;
    CHECK_THROWS_WITH_AS(validate(p), doctest::Contains("resolution guard"), DomainError);
    p = quiet_params(1000.0, 1.0, 1e-5, 5e-5);
    CHECK_THROWS_AS(validate(p), DomainError);
    p = quiet_params(1000.0, -1.0, 1e-5, 1.0);
    CHECK_THROWS_AS(validate(p), DomainError);
    p = quiet_params(1000.0, 1.0, 0.0, 1.0);
    CHECK_THROWS_AS(validate(p), DomainError);
  }

  TEST_CASE("step: fixed point, determinism and fault") {
    const auto p = quiet_params(1000.0, 1.0, 1e-5, 1.0);
    SimState s(1);
    const auto next = step(s, p, frozen::mass_1um, {}, 0.0);
    CHECK(next.position == 0.0);
    CHECK(next.velocity == 0.0);
    CHECK(next.step_index == 1);

    const ForceNoise forces{1e-30, 1e-31};
    SimState a(42);
    a.position = 1e-9;
    SimState b = a;
    for (int i = 0; i < 1000; ++i) {
      a = step(a, p, frozen::mass_1um, forces, 1e-18);
      b = step(b, p, frozen::mass_1um, forces, 1e-18);
    }
    CHECK(a == b);
    CHECK(a.position != 0.0);

    SimState bad(3);
    bad.velocity = std::numeric_limits<double>::infinity();
    try {
      step(bad, p, frozen::mass_1um, forces, 0.0);
      FAIL("expected SimulationFault");
    } catch (const SimulationFault& e) {
      CHECK(e.step_index() == 1);
    }
  }

  TEST_CASE("step: energy drift over 1000 periods at omega0 dt = 0.01") {
    const double w = 1000.0;
    const double dt = 0.01 / w;
    const auto p = quiet_params(w, 0.0, dt, 1.0);
    const Integrator integ(p, 1.0, 0.0);
    SimState s(0);
    s.position = 1e-9;
    const auto period = static_cast<long>(std::llround(2 * oracle::pi / (w * dt)));
    auto mean_energy = [&](long steps) {
      double e = 0.0;
      for (long i = 0; i < steps; ++i) {
        integ.advance(s, 0.0);
        e += s.velocity * s.velocity + w * w * s.position * s.position;
      }
      return e / static_cast<double>(steps);
    };
    const double first = mean_energy(period);
    for (int k = 0; k < 998; ++k) mean_energy(period);
    const double last = mean_energy(period);
    CHECK(std::abs(last / first - 1.0) < 1e-3);
  }

  TEST_CASE("damped, noiseless runs: energy decreases period by period") {
    const double w = 2 * oracle::pi * 100;
    const double gamma = 5.0;
    const double dt = 1e-5;
    const auto p = quiet_params(w, gamma, dt, 1.0);
    const Integrator integ(p, frozen::mass_1um, 0.0);
    SimState s(0);
    s.position = 1e-9;
    const auto period = static_cast<long>(std::llround(2 * oracle::pi / (w * dt)));
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 200; ++k) {
      const double e = s.velocity * s.velocity + w * w * s.position * s.position;
      CHECK(e < previous);
      previous = e;
      for (long i = 0; i < period; ++i) integ.advance(s, 0.0);
    }
  }

  TEST_CASE("T = 0, no noise: decay follows exp(-gamma t / 2)") {
    auto c = desk_config();
    c.vacuum.gas_temperature = 0.0;
    c.detector.sampling_rate = 1e5;
    SimParams p = quiet_params(2 * oracle::pi * 100, 5.0, 1e-5, 1.0);
    p.initial_position = 1e-9;
    SimOptions opt;
    opt.backaction_force = false;
    opt.measurement_noise = false;
    const auto ts = simulate(c, p, opt);
    REQUIRE(ts.size() == 100000);
    CHECK(ts.measured_position == ts.true_position);
    // Peak per period against the analytic envelope.
    const std::size_t per = 1000;
    for (std::size_t k = 1; k < 90; k += 7) {
      double peak = 0.0;
      for (std::size_t i = k * per; i < (k + 1) * per; ++i)
        peak = std::max(peak, std::abs(ts.true_position[i]));
      const double t_peak = static_cast<double>(k * per) * ts.sample_interval;
      const double envelope = 1e-9 * std::exp(-0.5 * 5.0 * t_peak);
      CHECK(peak <= envelope * 1.01);
      CHECK(peak >= envelope * std::exp(-0.5 * 5.0 * 0.01) * 0.99);
    }
  }

  TEST_CASE("measure: per-sample noise statistics") {
    CHECK(rel_err(10 * frozen::shot_g1 * std::sqrt(5e5), frozen::measurement_sigma) < 1e-12);
    NoiseSource rng(123);
    const double x = 3e-9;
    const int n = 1'000'000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double y = measure(x, 10 * frozen::shot_g1, 1e6, rng) - x;
      sum += y;
      sq += y * y;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean) < 5 * frozen::measurement_sigma / std::sqrt(double(n)));
    CHECK(rel_err(sd, frozen::measurement_sigma) < 0.005);
    NoiseSource quiet(1);
    CHECK(measure(x, 0.0, 1e6, quiet) == x);
  }

  TEST_CASE("feedback_force examples") {
    const SphereConfig s{1e-6, 2000.0};
    FeedbackConfig fb;
    fb.enabled = true;
    fb.derivative_gain = 10.0;
    fb.force_limit = 1e-9;
    const double hist[] = {0.0, 1e-9};
    CHECK(rel_err(feedback_force(hist, fb, s, 1e6), frozen::feedback_example) < 1e-12);
    CHECK(feedback_force(std::span(hist, 1), fb, s, 1e6) == 0.0);
    fb.force_limit = 0.5 * std::abs(frozen::feedback_example);
    CHECK(feedback_force(hist, fb, s, 1e6) == -fb.force_limit);
    const double up[] = {1e-9, 0.0};
    CHECK(feedback_force(up, fb, s, 1e6) == fb.force_limit);
    fb.enabled = false;
    CHECK(feedback_force(hist, fb, s, 1e6) == 0.0);
  }

  TEST_CASE("property: streaming controller equals the history form") {
    oracle::Draws draws(17);
    const SphereConfig s{1e-6, 2000.0};
    for (int trial = 0; trial < 1000; ++trial) {
      FeedbackConfig fb;
      fb.enabled = draws.coin() || draws.coin();
      fb.proportional_gain = draws.coin() ? draws.log_uniform(1.0, 1e8) : 0.0;
      fb.derivative_gain = draws.coin() ? draws.log_uniform(0.1, 1e4) : 0.0;
      fb.force_limit = draws.log_uniform(1e-18, 1e-9);
      const double fs = draws.log_uniform(1e3, 1e7);
      FeedbackController ctl(fb, sphere_mass(s), fs);
      std::vector<double> history;
      for (int i = 0; i < 20; ++i) {
        history.push_back(1e-9 * draws.gaussian());
        CHECK(ctl.update(history.back()) == feedback_force(history, fb, s, fs));
      }
    }
  }

  TEST_CASE("simulate: determinism and seeds") {
    auto c = reference_config();
    c.vacuum.pressure_torr = 1e-2;
    const auto a = simulate(c, 0.01, 42);
    const auto b = simulate(c, 0.01, 42);
    const auto d = simulate(c, 0.01, 43);
    CHECK(a.size() == 10000);
    CHECK(a == b);
    CHECK_FALSE(a == d);
    CHECK(a.sample_interval == 1e-6);
    c.sim.record_decimation = 7;
    const auto e = simulate(c, 0.01, 42);
    CHECK(e.size() == 1429);
    CHECK(e.true_position[3] == a.true_position[21]);
    CHECK_THROWS_AS(simulate(c, 1e-6, 1), DomainError);
  }

  TEST_CASE("vertical axis: rejected without feedback, bounded with PD") {
    auto c = desk_config();
    c.trap_axis = TrapAxis::vertical;
    CHECK_THROWS_WITH_AS(simulate(c, 1.0, 1), doctest::Contains("unstabilized vertical mode"),
                         DomainError);
    c.feedback.enabled = true;
    CHECK_THROWS_AS(simulate(c, 1.0, 1), DomainError);  // g_p = 0
    c.feedback.proportional_gain = std::pow(2 * oracle::pi * 50, 2);
    c.feedback.derivative_gain = 50.0;
    c.feedback.force_limit = 1e-6;
    c.detector.geometric_factor = 1.0;
    const auto ts = simulate(c, 20.0, 5);
    RunningMoments mom;
    for (std::size_t i = ts.size() / 4; i < ts.size(); ++i) mom.add(ts.true_position[i]);
    const double kT_over_k =
        oracle::k_B * 300.0 / (sphere_mass(c.sphere) * c.feedback.proportional_gain);
    CHECK(std::isfinite(mom.variance()));
    CHECK(mom.variance() < 10 * kT_over_k);
    CHECK(mom.variance() > 0.0);
  }

  TEST_CASE("stationary variance matches the discrete Lyapunov oracle; dt convergence") {
    // Heavily damped so that 0.5% statistics are cheap.
    auto c = desk_config();
    c.vacuum.pressure_torr = 1e-2 * 100.0 / frozen::gamma_gas_1e2torr;
    c.detector.sampling_rate = 20000.0;
    const auto model = oscillator_model(c);
    const double w = 2 * oracle::pi * 100;
    SimParams p = quiet_params(w, model.gamma(), 1.0 / 20000.0, 400.0);
    p.thermal_start = true;
    p.seed = 9;
    SimOptions opt;
    opt.backaction_force = false;
    opt.measurement_noise = false;
    const double s_f = gas_thermal_force_psd(c.sphere, c.vacuum, model.tau_gas);
    const double kt = oracle::k_B * 300.0 / (model.mass * w * w);

    const double oracle_dt = oracle::lyapunov_position_variance(w, p.gamma, p.time_step, model.mass, s_f);
    const double oracle_half =
        oracle::lyapunov_position_variance(w, p.gamma, p.time_step / 2, model.mass, s_f);
    CHECK(std::abs(oracle_dt / oracle_half - 1.0) < 0.02);
    CHECK(std::abs(oracle_half / kt - 1.0) < 0.02);

    const double v_dt = steady_state_variance(c, p, opt, 0.0);
    SimParams half = p;
    half.time_step = p.time_step / 2;
    half.seed = 10;
    const double v_half = steady_state_variance(c, half, opt, 0.0);
    const double stat = std::sqrt(2.0 / (p.gamma * p.duration));  // ~0.7%
    CHECK(std::abs(v_dt / oracle_dt - 1.0) < 4 * stat);
    CHECK(std::abs(v_half / oracle_half - 1.0) < 4 * stat);
    CHECK(std::abs(v_dt / v_half - 1.0) < 0.02 + 4 * stat);
  }

  TEST_CASE("ensemble kernels: parallel equals serial, members decorrelated") {
    const auto c = desk_config();
    auto p = derive_sim_inputs(c, 5.0, 77).params;
    p.thermal_start = true;
    SimOptions opt;
    opt.backaction_force = false;
    const auto par = ensemble_variance(c, p, 6, opt, 0.0);
    const auto ser = ensemble_variance_serial(c, p, 6, opt, 0.0);
    CHECK(par.member_variances == ser.member_variances);
    CHECK(par.mean_variance == ser.mean_variance);
    CHECK(par.standard_error > 0.0);
    std::set<std::uint64_t> seeds;
    for (std::size_t i = 0; i < 1000; ++i) seeds.insert(member_seed(77, i));
    CHECK(seeds.size() == 1000);
    CHECK_THROWS_AS(ensemble_variance(c, p, 0, opt, 0.0), DomainError);
  }

  TEST_CASE("cold damping: zero gain, moderate gain, parallel equals serial") {
    const auto c = desk_config();
    const double gamma = oscillator_model(c).gamma();
    auto p = derive_sim_inputs(c, 60.0, 2024).params;
    const double gains[] = {0.0, 100.0 * gamma};
    const auto scan = cold_damping_scan(c, p, gains);
    const auto serial = cold_damping_scan_serial(c, p, gains);
    REQUIRE(scan.size() == 2);
    CHECK(scan[0].variance == serial[0].variance);
    CHECK(scan[1].variance == serial[1].variance);

    // g_d = 0 is the no-feedback run with the same seed, bit for bit.
    SimParams plain = p;
    plain.thermal_start = true;
    CHECK(scan[0].variance == steady_state_variance(c, plain, {}, 10.0 / gamma));

    // T_eff = T gamma / (gamma + g_d) within a factor of 2.
    const double predicted = equipartition(c) / 101.0;
    CHECK(scan[1].variance < 2.0 * predicted);
    CHECK(scan[1].variance > 0.5 * predicted);

    auto vertical = c;
    vertical.trap_axis = TrapAxis::vertical;
    CHECK_THROWS_AS(cold_damping_scan(vertical, p, gains), DomainError);
  }

  TEST_CASE("cold damping: noisy readout gives a U-shaped curve") {
    auto c = desk_config();
    c.detector.geometric_factor = 2e5;
    c.detector.backaction_loss_factor = 1.0;
    c.feedback.force_limit = 1e-6;
    auto p = derive_sim_inputs(c, 40.0, 31).params;
    const double gains[] = {0.0, 50.0, 3000.0};
    const auto scan = cold_damping_scan(c, p, gains);
    CHECK(scan[1].variance < 0.2 * scan[0].variance);
    CHECK(scan[2].variance > 4.0 * scan[1].variance);
  }
}
