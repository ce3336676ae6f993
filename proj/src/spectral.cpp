#include "levnoise/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "levnoise/errors.hpp"

namespace levnoise {

std::vector<double> asd(const PsdEstimate& psd) {
  std::vector<double> out(psd.psd.size());
  std::transform(psd.psd.begin(), psd.psd.end(), out.begin(),
                 [](double p) { return std::sqrt(p); });
  return out;
}

double integrate_psd(const PsdEstimate& psd, double f_lo, double f_hi) {
  const double df = psd.resolution();
  double sum = 0.0;
  for (std::size_t k = 0; k < psd.psd.size(); ++k)
    if (psd.frequencies[k] >= f_lo && psd.frequencies[k] <= f_hi) sum += psd.psd[k];
  return sum * df;
}

namespace {

double interpolate_total(const NoiseBudget& budget, double f) {
  const auto& rows = budget.rows;
  auto it = std::lower_bound(rows.begin(), rows.end(), f,
                             [](const BudgetComponents& r, double x) { return r.frequency < x; });
  if (it == rows.begin()) return it->asd_total;
  if (it == rows.end()) return rows.back().asd_total;
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double t = std::log(f / lo.frequency) / std::log(hi.frequency / lo.frequency);
  return lo.asd_total * std::pow(hi.asd_total / lo.asd_total, t);
}

double median(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lower);
  }
  return m;
}

}  // namespace

OverlayTable budget_overlay(const PsdEstimate& psd, const NoiseBudget& budget, double band_lo,
                            double band_hi) {
  if (budget.rows.empty()) throw DomainError("budget_overlay: empty budget");
  if (!(band_hi > band_lo)) throw DomainError("budget_overlay: empty overlap band");
  if (band_lo < budget.rows.front().frequency || band_hi > budget.rows.back().frequency)
    throw DomainError("budget_overlay: range mismatch, band not covered by the budget");
  OverlayTable table;
  std::vector<double> in_band;
  for (std::size_t k = 0; k < psd.psd.size(); ++k) {
    const double f = psd.frequencies[k];
    if (f < band_lo || f > band_hi) continue;
    const double ratio = std::sqrt(psd.psd[k]) / interpolate_total(budget, f);
    table.frequencies.push_back(f);
    table.ratios.push_back(ratio);
  }
  if (table.ratios.empty()) throw DomainError("budget_overlay: empty overlap band");
  table.median_ratio = median(table.ratios);
  return table;
}

}  // namespace levnoise
