#pragma once

#include <span>
#include <vector>

#include "levnoise/config.hpp"
#include "levnoise/noise_budget.hpp"

namespace levnoise {

enum class Window { hann, rectangular };

/// One-sided PSD on the grid k f_s / N, k = 0 .. N/2.
struct PsdEstimate {
  std::vector<double> frequencies;  // Hz
  std::vector<double> psd;          // units^2 / Hz
  std::size_t segment_length = 0;
  double overlap_fraction = 0.0;
  Window window = Window::hann;
  std::size_t segment_count = 0;
  double sampling_rate = 0.0;

  double resolution() const { return sampling_rate / static_cast<double>(segment_length); }
};

/// Welch estimate: mean of windowed, per-segment mean-removed periodograms,
/// normalized by f_s and the window power so that the PSD integrated over
/// [0, f_s/2] equals the variance of a stationary input. Interior bins are
/// doubled; DC and Nyquist are not. Segments are transformed in parallel.
PsdEstimate welch_psd(std::span<const double> series, double sampling_rate,
                      std::size_t segment_length, double overlap_fraction = 0.5,
                      Window window = Window::hann);

/// Single-threaded reference for welch_psd.
PsdEstimate welch_psd_serial(std::span<const double> series, double sampling_rate,
                             std::size_t segment_length, double overlap_fraction = 0.5,
                             Window window = Window::hann);

/// Element-wise square root.
std::vector<double> asd(const PsdEstimate& psd);

/// Rectangle-rule integral of the PSD over bins with f in [f_lo, f_hi].
double integrate_psd(const PsdEstimate& psd, double f_lo, double f_hi);

struct LorentzianFit {
  double omega0 = 0.0;           // rad/s
  double gamma = 0.0;            // 1/s
  double force_psd_level = 0.0;  // N^2/Hz
  double residual = 0.0;         // rms of log-residuals
};

/// Fits S_x(w) = S_F / (m^2 ((w0^2 - w^2)^2 + gamma^2 w^2)) to the PSD in
/// [f_lo, f_hi] by least squares on log(psd). Throws DomainError
/// ("resonance not bracketed") when the band maximum is on its edge.
LorentzianFit fit_lorentzian(const PsdEstimate& psd, const SphereConfig& sphere, double f_lo,
                             double f_hi);

struct OverlayTable {
  std::vector<double> frequencies;
  std::vector<double> ratios;  // measured ASD / analytic total ASD
  double median_ratio = 0.0;   // over the requested band
};

/// Compares a measured PSD against the analytic budget (log-log interpolated
/// onto the PSD grid) inside [band_lo, band_hi].
OverlayTable budget_overlay(const PsdEstimate& psd, const NoiseBudget& budget, double band_lo,
                            double band_hi);

}  // namespace levnoise
