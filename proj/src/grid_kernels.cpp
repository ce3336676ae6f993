// Full-factorial design evaluation: serial reference and OpenMP kernel.
// Every grid point is evaluated into its own slot and the result is sorted
// by a strict total order, so the output does not depend on thread count.

#include <algorithm>
#include <cmath>
#include <exception>

#include "levnoise/design_search.hpp"
#include "levnoise/errors.hpp"

namespace levnoise {

namespace {

struct Grid {
  std::vector<std::vector<double>> values;  // per axis
  std::size_t size = 1;
  bool tie_waist = false;
};

std::vector<double> axis_values(const SearchAxis& axis, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    v[i] = axis.scale == AxisScale::log
               ? std::exp(std::log(axis.min) + t * (std::log(axis.max) - std::log(axis.min)))
               : axis.min + t * (axis.max - axis.min);
  }
  v.front() = axis.min;
  v.back() = axis.max;
  return v;
}

Grid make_grid(const SearchSpace& space, const ScanSettings& settings) {
  space.validate();
  if (settings.points_per_axis < 2) throw DomainError("points_per_axis must be >= 2");
  Grid g;
  bool has_r = false;
  bool has_w = false;
  for (const auto& axis : space.axes) {
    has_r |= axis.param == DesignParam::radius;
    has_w |= axis.param == DesignParam::waist;
    if (g.size > settings.max_grid_size / settings.points_per_axis)
      throw DomainError("grid-size cap exceeded (" + std::to_string(settings.max_grid_size) + ")");
    g.size *= settings.points_per_axis;
    g.values.push_back(axis_values(axis, settings.points_per_axis));
  }
  g.tie_waist = space.tie_waist_to_radius && has_r && !has_w;
  return g;
}

DesignPoint grid_point(const SearchSpace& space, const Grid& grid, const DesignPoint& base,
                       std::size_t index) {
  DesignPoint p = base;
  for (std::size_t a = space.axes.size(); a-- > 0;) {
    const auto n = grid.values[a].size();
    p.set(space.axes[a].param, grid.values[a][index % n]);
    index /= n;
  }
  if (grid.tie_waist) p.waist = p.radius;
  return p;
}

}  // namespace

std::vector<DesignResult> grid_scan_serial(const SearchSpace& space, const ExperimentConfig& base,
                                           std::span<const double> freq_grid,
                                           const ScanSettings& settings) {
  const auto grid = make_grid(space, settings);
  const auto base_point = design_point_of(base);
  std::vector<DesignResult> out(grid.size);
  for (std::size_t i = 0; i < grid.size; ++i)
    out[i] = evaluate_design(base, grid_point(space, grid, base_point, i), freq_grid,
                             settings.budget);
  std::sort(out.begin(), out.end(), design_order);
  return out;
}

std::vector<DesignResult> grid_scan(const SearchSpace& space, const ExperimentConfig& base,
                                    std::span<const double> freq_grid,
                                    const ScanSettings& settings) {
  const auto grid = make_grid(space, settings);
  const auto base_point = design_point_of(base);
  std::vector<DesignResult> out(grid.size);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(grid.size); ++i) {
    try {
      const auto idx = static_cast<std::size_t>(i);
      out[idx] = evaluate_design(base, grid_point(space, grid, base_point, idx), freq_grid,
                                 settings.budget);
    } catch (...) {
#pragma omp critical(levnoise_grid_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::sort(out.begin(), out.end(), design_order);
  return out;
}

}  // namespace levnoise
