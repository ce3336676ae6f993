#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "levnoise/config.hpp"
#include "levnoise/errors.hpp"
#include "levnoise/noise_budget.hpp"
#include "levnoise/spectral.hpp"
#include "../support/oracles.hpp"

using namespace levnoise;
using oracle::rel_err;

namespace {

std::vector<double> white(std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  std::vector<double> x(n);
  for (auto& v : x) v = normal(engine);
  return x;
}

double variance(const std::vector<double>& x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size());
}

PsdEstimate model_psd(double omega0, double gamma, double s_f, double mass, double fs,
                      std::size_t n) {
  PsdEstimate p;
  p.sampling_rate = fs;
  p.segment_length = n;
  p.segment_count = 1;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double f = fs * static_cast<double>(k) / static_cast<double>(n);
    const double w = 2 * oracle::pi * f;
    const double d = (omega0 * omega0 - w * w);
    p.frequencies.push_back(f);
    p.psd.push_back(s_f / (mass * mass * (d * d + gamma * gamma * w * w)));
  }
  return p;
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("welch_psd matches the direct-DFT oracle") {
    const auto x = white(1000, 1.3, 4);
    for (const bool hann : {true, false}) {
      for (const double overlap : {0.0, 0.5, 0.75}) {
        const auto win = hann ? Window::hann : Window::rectangular;
        const auto est = welch_psd(x, 250.0, 128, overlap, win);
        const auto ser = welch_psd_serial(x, 250.0, 128, overlap, win);
        const auto ref = oracle::direct_welch(x, 250.0, 128, overlap, hann);
        REQUIRE(est.psd.size() == ref.size());
        CHECK(est.frequencies.back() == 125.0);
        for (std::size_t k = 1; k < ref.size(); ++k) {
          CHECK(std::abs(est.psd[k] - ref[k]) <= 1e-10 * ref[k] + 1e-14);
          CHECK(std::abs(ser.psd[k] - ref[k]) <= 1e-10 * ref[k] + 1e-14);
        }
        CHECK(est.segment_count == ser.segment_count);
        CHECK(est.resolution() == 250.0 / 128);
      }
    }
  }

  TEST_CASE("white noise: level and Parseval") {
    const double sigma = 1.0;
    const double fs = 1.0;
    const auto x = white(1 << 18, sigma, 8);
    const auto est = welch_psd(x, fs, 1024);
    CHECK(est.segment_count >= 64);
    // One-sided level 2 sigma^2 / fs.
    double mean = 0.0;
    for (std::size_t k = 1; k + 1 < est.psd.size(); ++k) mean += est.psd[k];
    mean /= static_cast<double>(est.psd.size() - 2);
    CHECK(std::abs(mean / 2.0 - 1.0) < 0.01);
    const double total = integrate_psd(est, 0.0, fs / 2);
    CHECK(std::abs(total / variance(x) - 1.0) < 0.05);
  }

  TEST_CASE("sinusoid: integrated line power is A^2 / 2") {
    const double fs = 1000.0;
    const double a = 0.7;
    std::vector<double> x(1 << 16);
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = a * std::sin(2 * oracle::pi * 125.0 * static_cast<double>(i) / fs);
    const auto est = welch_psd(x, fs, 1024);
    const double line = integrate_psd(est, 120.0, 130.0);
    CHECK(rel_err(line, a * a / 2) < 0.02);
  }

  TEST_CASE("zero input, offset invariance, asd identity") {
    std::vector<double> zeros(4096, 0.0);
    for (double v : welch_psd(zeros, 1.0, 256).psd) CHECK(v == 0.0);

    auto x = white(8192, 1.0, 12);
    const auto base = welch_psd(x, 10.0, 256);
    for (auto& v : x) v += 5.0;
    const auto shifted = welch_psd(x, 10.0, 256);
    for (std::size_t k = 1; k < base.psd.size(); ++k)
      CHECK(std::abs(shifted.psd[k] - base.psd[k]) <= 1e-9 * base.psd[k]);

    const auto amp = asd(base);
    for (std::size_t k = 0; k < amp.size(); ++k) CHECK(amp[k] * amp[k] == doctest::Approx(base.psd[k]));
  }

  TEST_CASE("doubling the segment count shrinks the scatter by about 1/sqrt(2)") {
    auto scatter = [](std::size_t length) {
      const auto x = white(length, 1.0, 99);
      const auto est = welch_psd(x, 1.0, 256, 0.0, Window::rectangular);
      double m = 0.0;
      double s = 0.0;
      const std::size_t n = est.psd.size() - 2;
      for (std::size_t k = 1; k <= n; ++k) m += est.psd[k];
      m /= static_cast<double>(n);
      for (std::size_t k = 1; k <= n; ++k) s += (est.psd[k] - m) * (est.psd[k] - m);
      return std::sqrt(s / static_cast<double>(n)) / m;
    };
    const double ratio = scatter(256 * 128) / scatter(256 * 64);
    CHECK(ratio > std::sqrt(0.5) * 0.8);
    CHECK(ratio < std::sqrt(0.5) * 1.2);
  }

  TEST_CASE("welch_psd errors") {
    const auto x = white(100, 1.0, 1);
    CHECK_THROWS_WITH_AS(welch_psd(x, 1.0, 100), doctest::Contains("invalid segment length"),
                         DomainError);
    CHECK_THROWS_WITH_AS(welch_psd(x, 1.0, 128), doctest::Contains("series too short"),
                         DomainError);
    CHECK_THROWS_AS(welch_psd(x, 1.0, 64, 1.0), DomainError);
    CHECK_THROWS_AS(welch_psd(x, 1.0, 64, -0.1), DomainError);
    CHECK_THROWS_AS(welch_psd(x, 0.0, 64), DomainError);
    auto bad = x;
    bad[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(welch_psd(bad, 1.0, 64), DomainError);
    CHECK_THROWS_AS(welch_psd_serial(bad, 1.0, 64), DomainError);
  }

  TEST_CASE("fit_lorentzian recovers an exact model") {
    const SphereConfig s{1e-6, 2000.0};
    const double m = sphere_mass(s);
    const double w0 = 2 * oracle::pi * 25000;
    const double gamma = 10.0;
    const auto p = model_psd(w0, gamma, 1e-40, m, 1e6, 1 << 20);
    const auto fit = fit_lorentzian(p, s, 24990.0, 25010.0);
    CHECK(rel_err(fit.omega0, w0) < 1e-3);
    CHECK(rel_err(fit.gamma, gamma) < 1e-2);
    CHECK(rel_err(fit.force_psd_level, 1e-40) < 1e-2);
    CHECK(fit.residual < 1e-6);
  }

  TEST_CASE("fit_lorentzian rejects an unbracketed band") {
    const SphereConfig s{1e-6, 2000.0};
    PsdEstimate flat;
    flat.sampling_rate = 1000.0;
    flat.segment_length = 1024;
    for (std::size_t k = 0; k <= 512; ++k) {
      flat.frequencies.push_back(1000.0 * k / 1024.0);
      flat.psd.push_back(1.0 / (1.0 + static_cast<double>(k)));
    }
    CHECK_THROWS_WITH_AS(fit_lorentzian(flat, s, 10.0, 400.0),
                         doctest::Contains("resonance not bracketed"), DomainError);
    CHECK_THROWS_AS(fit_lorentzian(flat, s, 10.0, 11.0), DomainError);
  }

  TEST_CASE("budget_overlay: ratio scaling and errors") {
    auto c = reference_config();
    c.vacuum.pressure_torr = 1e-2;
    const double fs = 1e6;
    const double floor_asd = shot_noise_asd(c.sphere, c.beam, c.detector);
    const auto x = white(1 << 16, floor_asd * std::sqrt(fs / 2), 3);
    const auto est = welch_psd(x, fs, 1024);
    const auto budget = compute_budget(c, log_spaced(1e3, 5e5, 200));
    const auto table = budget_overlay(est, budget, 2e5, 4e5);
    CHECK(table.frequencies.size() == table.ratios.size());
    CHECK(std::abs(table.median_ratio - 1.0) < 0.05);

    auto doubled = x;
    for (auto& v : doubled) v *= 2.0;
    const auto table2 = budget_overlay(welch_psd(doubled, fs, 1024), budget, 2e5, 4e5);
    for (std::size_t i = 0; i < table.ratios.size(); ++i)
      CHECK(table2.ratios[i] == doctest::Approx(2.0 * table.ratios[i]).epsilon(1e-12));

    CHECK_THROWS_WITH_AS(budget_overlay(est, budget, 100.0, 4e5), doctest::Contains("range mismatch"),
                         DomainError);
    CHECK_THROWS_WITH_AS(budget_overlay(est, budget, 3e5, 3e5), doctest::Contains("empty overlap band"),
                         DomainError);
    CHECK_THROWS_WITH_AS(budget_overlay(est, budget, 2e5 + 1.0, 2e5 + 2.0),
                         doctest::Contains("empty overlap band"), DomainError);
  }
}
