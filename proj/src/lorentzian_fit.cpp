#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "levnoise/constants.hpp"
#include "levnoise/errors.hpp"
#include "levnoise/spectral.hpp"

namespace levnoise {

namespace {

struct Band {
  std::vector<double> omega;
  std::vector<double> log_psd;
  std::vector<double> psd;
};

// Parameters: (omega0 / omega_ref, log gamma, log S_F). log S_F is linear in
// the model, the other two are not.
using Params = Eigen::Vector3d;

double log_model(const Params& p, double omega_ref, double log_mass_sq, double omega) {
  const double w0 = p[0] * omega_ref;
  const double gamma = std::exp(p[1]);
  const double detune = w0 * w0 - omega * omega;
  return p[2] - log_mass_sq - std::log(detune * detune + gamma * gamma * omega * omega);
}

double cost(const Band& band, const Params& p, double omega_ref, double log_mass_sq) {
  double s = 0.0;
  for (std::size_t i = 0; i < band.omega.size(); ++i) {
    const double r = band.log_psd[i] - log_model(p, omega_ref, log_mass_sq, band.omega[i]);
    s += r * r;
  }
  return s;
}

}  // namespace

LorentzianFit fit_lorentzian(const PsdEstimate& psd, const SphereConfig& sphere, double f_lo,
                             double f_hi) {
  Band band;
  for (std::size_t k = 0; k < psd.psd.size(); ++k) {
    const double f = psd.frequencies[k];
    if (f < f_lo || f > f_hi || !(f > 0.0)) continue;
    band.omega.push_back(2.0 * constants::pi * f);
    band.psd.push_back(psd.psd[k]);
  }
  if (band.omega.size() < 16) throw DomainError("fit_lorentzian: fewer than 16 bins in band");

  const auto peak_it = std::max_element(band.psd.begin(), band.psd.end());
  const auto peak = static_cast<std::size_t>(peak_it - band.psd.begin());
  if (peak == 0 || peak + 1 == band.psd.size() || !(*peak_it > 0.0))
    throw DomainError("resonance not bracketed: band maximum lies on the band edge");
  for (double v : band.psd)
    if (!(v > 0.0)) throw DomainError("fit_lorentzian: non-positive PSD bin in band");
  band.log_psd.resize(band.psd.size());
  std::transform(band.psd.begin(), band.psd.end(), band.log_psd.begin(),
                 [](double p) { return std::log(p); });

  // Initial guess from the peak and its half-maximum crossings.
  const double omega_ref = band.omega[peak];
  const double half = 0.5 * band.psd[peak];
  std::size_t left = peak;
  while (left > 0 && band.psd[left] > half) --left;
  std::size_t right = peak;
  while (right + 1 < band.psd.size() && band.psd[right] > half) ++right;
  double gamma0 = band.omega[right] - band.omega[left];
  const double bin = band.omega[1] - band.omega[0];
  if (!(gamma0 > bin)) gamma0 = bin;
  const double mass = sphere_mass(sphere);
  const double log_mass_sq = 2.0 * std::log(mass);

  Params p;
  p << 1.0, std::log(gamma0), 0.0;
  // Best S_F for the starting shape is the mean log-residual.
  {
    double mean = 0.0;
    for (std::size_t i = 0; i < band.omega.size(); ++i)
      mean += band.log_psd[i] - log_model(p, omega_ref, log_mass_sq, band.omega[i]);
    p[2] = mean / static_cast<double>(band.omega.size());
  }

  // Levenberg-Marquardt with analytic Jacobian.
  double lambda = 1e-3;
  double current = cost(band, p, omega_ref, log_mass_sq);
  bool converged = false;
  for (int iter = 0; iter < 500 && !converged; ++iter) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    const double w0 = p[0] * omega_ref;
    const double gamma = std::exp(p[1]);
    for (std::size_t i = 0; i < band.omega.size(); ++i) {
      const double w = band.omega[i];
      const double detune = w0 * w0 - w * w;
      const double d = detune * detune + gamma * gamma * w * w;
      Eigen::Vector3d grad;
      grad[0] = -4.0 * detune * w0 * omega_ref / d;
      grad[1] = -2.0 * gamma * gamma * w * w / d;
      grad[2] = 1.0;
      const double r = band.log_psd[i] - log_model(p, omega_ref, log_mass_sq, w);
      jtj += grad * grad.transpose();
      jtr += grad * r;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::Matrix3d a = jtj;
      a.diagonal() += lambda * jtj.diagonal();
      const Params delta = a.ldlt().solve(jtr);
      const Params trial = p + delta;
      const double c = trial[0] > 0.0 ? cost(band, trial, omega_ref, log_mass_sq) : INFINITY;
      if (c < current) {
        const double rel = (current - c) / std::max(current, 1e-300);
        p = trial;
        current = c;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        converged = rel < 1e-14 && delta.norm() < 1e-12;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }

  LorentzianFit fit;
  fit.omega0 = p[0] * omega_ref;
  fit.gamma = std::exp(p[1]);
  fit.force_psd_level = std::exp(p[2]);
  fit.residual = std::sqrt(current / static_cast<double>(band.omega.size()));
  return fit;
}

}  // namespace levnoise
