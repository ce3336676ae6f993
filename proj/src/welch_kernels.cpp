// Welch periodogram kernels: the serial reference and the OpenMP version
// share the per-segment transform and differ only in how segments are
// distributed and reduced.

#include <fftw3.h>
#include <omp.h>

#include <cmath>
#include <memory>
#include <mutex>

#include "levnoise/constants.hpp"
#include "levnoise/errors.hpp"
#include "levnoise/spectral.hpp"

namespace levnoise {

namespace {

// The FFTW planner is not re-entrant; execution with new-array calls is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

class RealFftPlan {
 public:
  explicit RealFftPlan(std::size_t n) : n_(n) {
    auto in = fftw_buffer<double>(n);
    auto out = fftw_buffer<fftw_complex>(n / 2 + 1);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
    if (!plan_) throw Error("FFTW plan creation failed");
  }
  RealFftPlan(const RealFftPlan&) = delete;
  RealFftPlan& operator=(const RealFftPlan&) = delete;
  ~RealFftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }

  void execute(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(plan_, in, out); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  fftw_plan plan_ = nullptr;
};

struct WelchSetup {
  std::size_t length = 0;
  std::size_t hop = 0;
  std::size_t segments = 0;
  std::vector<double> window;
  double window_power = 0.0;  // sum of w^2
};

WelchSetup make_setup(std::span<const double> series, std::size_t segment_length,
                      double overlap_fraction, Window window) {
  if (segment_length < 2 || (segment_length & (segment_length - 1)) != 0)
    throw DomainError("invalid segment length: must be a power of two >= 2");
  if (series.size() < segment_length)
    throw DomainError("series too short: " + std::to_string(series.size()) +
                      " samples for segment length " + std::to_string(segment_length));
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
    throw DomainError("overlap fraction must be in [0, 1)");
  WelchSetup s;
  s.length = segment_length;
  const auto overlap =
      static_cast<std::size_t>(std::llround(overlap_fraction * static_cast<double>(segment_length)));
  s.hop = std::max<std::size_t>(1, segment_length - overlap);
  s.segments = (series.size() - segment_length) / s.hop + 1;
  s.window.resize(segment_length);
  for (std::size_t i = 0; i < segment_length; ++i) {
    // Periodic Hann.
    s.window[i] = window == Window::hann
                      ? 0.5 * (1.0 - std::cos(2.0 * constants::pi * static_cast<double>(i) /
                                              static_cast<double>(segment_length)))
                      : 1.0;
    s.window_power += s.window[i] * s.window[i];
  }
  return s;
}

// Adds |FFT(window * (segment - mean))|^2 for one segment into `acc`.
void accumulate_segment(const RealFftPlan& plan, const WelchSetup& setup,
                        std::span<const double> segment, double* in, fftw_complex* out,
                        std::vector<double>& acc) {
  const std::size_t n = setup.length;
  double mean = 0.0;
  for (double v : segment) mean += v;
  mean /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) in[i] = (segment[i] - mean) * setup.window[i];
  plan.execute(in, out);
  for (std::size_t k = 0; k <= n / 2; ++k) acc[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
}

PsdEstimate finish(std::vector<double> acc, const WelchSetup& setup, double sampling_rate,
                   double overlap_fraction, Window window) {
  const std::size_t n = setup.length;
  const double norm =
      1.0 / (sampling_rate * setup.window_power * static_cast<double>(setup.segments));
  PsdEstimate est;
  est.segment_length = n;
  est.overlap_fraction = overlap_fraction;
  est.window = window;
  est.segment_count = setup.segments;
  est.sampling_rate = sampling_rate;
  est.frequencies.resize(n / 2 + 1);
  est.psd = std::move(acc);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    est.frequencies[k] = static_cast<double>(k) * sampling_rate / static_cast<double>(n);
    const bool edge = k == 0 || k == n / 2;
    est.psd[k] *= norm * (edge ? 1.0 : 2.0);
  }
  return est;
}

void check_inputs(std::span<const double> series, double sampling_rate) {
  if (!(sampling_rate > 0.0)) throw DomainError("sampling rate must be > 0");
  for (double v : series)
    if (!std::isfinite(v)) throw DomainError("series contains non-finite samples");
}

}  // namespace

PsdEstimate welch_psd_serial(std::span<const double> series, double sampling_rate,
                             std::size_t segment_length, double overlap_fraction, Window window) {
  check_inputs(series, sampling_rate);
  const auto setup = make_setup(series, segment_length, overlap_fraction, window);
  const RealFftPlan plan(setup.length);
  auto in = fftw_buffer<double>(setup.length);
  auto out = fftw_buffer<fftw_complex>(setup.length / 2 + 1);
  std::vector<double> acc(setup.length / 2 + 1, 0.0);
  for (std::size_t s = 0; s < setup.segments; ++s)
    accumulate_segment(plan, setup, series.subspan(s * setup.hop, setup.length), in.get(),
                       out.get(), acc);
  return finish(std::move(acc), setup, sampling_rate, overlap_fraction, window);
}

PsdEstimate welch_psd(std::span<const double> series, double sampling_rate,
                      std::size_t segment_length, double overlap_fraction, Window window) {
  check_inputs(series, sampling_rate);
  const auto setup = make_setup(series, segment_length, overlap_fraction, window);
  const RealFftPlan plan(setup.length);
  const std::size_t bins = setup.length / 2 + 1;

  const int threads = std::max(1, std::min<int>(omp_get_max_threads(),
                                                static_cast<int>(setup.segments)));
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(threads),
                                           std::vector<double>(bins, 0.0));
#pragma omp parallel num_threads(threads)
  {
    auto in = fftw_buffer<double>(setup.length);
    auto out = fftw_buffer<fftw_complex>(bins);
    auto& acc = partial[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(setup.segments); ++s)
      accumulate_segment(plan, setup,
                         series.subspan(static_cast<std::size_t>(s) * setup.hop, setup.length),
                         in.get(), out.get(), acc);
  }
  std::vector<double> acc(bins, 0.0);
  for (const auto& p : partial)
    for (std::size_t k = 0; k < bins; ++k) acc[k] += p[k];
  return finish(std::move(acc), setup, sampling_rate, overlap_fraction, window);
}

}  // namespace levnoise
