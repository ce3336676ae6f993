#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "levnoise/config.hpp"
#include "levnoise/noise_budget.hpp"

namespace levnoise {

// Deterministic search of the experiment design space for the smallest
// best-case figure of merit min_f F(f).

enum class DesignParam { radius, power, wavelength, waist, pressure, geometric_factor };

inline constexpr std::array<DesignParam, 6> kAllDesignParams = {
    DesignParam::radius, DesignParam::power,    DesignParam::wavelength,
    DesignParam::waist,  DesignParam::pressure, DesignParam::geometric_factor};

/// "R", "P", "lambda", "w", "Pvac", "G".
std::string_view param_name(DesignParam param);
std::optional<DesignParam> parse_param_name(std::string_view name);

enum class AxisScale { linear, log };

struct SearchAxis {
  DesignParam param;
  double min = 0.0;  // SI (Torr for pressure)
  double max = 0.0;
  AxisScale scale = AxisScale::log;
};

struct SearchSpace {
  std::vector<SearchAxis> axes;
  // When R varies and w does not, w follows R.
  bool tie_waist_to_radius = true;

  /// Throws DomainError on duplicate names, min >= max, or log axes with
  /// min <= 0.
  void validate() const;
};

/// The six searchable knobs, in the fixed lexicographic order used for
/// tie-breaking.
struct DesignPoint {
  double radius = 0.0;
  double power = 0.0;
  double wavelength = 0.0;
  double waist = 0.0;
  double pressure_torr = 0.0;
  double geometric_factor = 0.0;

  double get(DesignParam param) const;
  void set(DesignParam param, double value);

  auto operator<=>(const DesignPoint&) const = default;
};

DesignPoint design_point_of(const ExperimentConfig& config);
ExperimentConfig apply_design(const ExperimentConfig& base, const DesignPoint& point);

struct DesignConstraints {
  bool lambda_lt_R = false;
  bool radiation_dominates = false;
  bool waist_near_R = false;

  bool all() const { return lambda_lt_R && radiation_dominates && waist_near_R; }
};

struct DesignResult {
  DesignPoint parameters;
  double objective = 0.0;         // min over the grid of F
  double argmin_frequency = 0.0;  // Hz
  DesignConstraints constraints;
  bool feasible = false;
};

struct ObjectiveValue {
  double value = 0.0;
  double argmin_frequency = 0.0;
};

/// min over freq_grid of F; ties go to the lowest frequency.
ObjectiveValue objective(const ExperimentConfig& config, std::span<const double> freq_grid,
                         const BudgetOptions& options = {});

DesignConstraints design_constraints(const ExperimentConfig& config);

DesignResult evaluate_design(const ExperimentConfig& base, const DesignPoint& point,
                             std::span<const double> freq_grid,
                             const BudgetOptions& options = {});

/// Feasible designs first, then ascending objective, then lexicographic
/// parameters.
bool design_order(const DesignResult& a, const DesignResult& b);

struct ScanSettings {
  std::size_t points_per_axis = 16;
  std::size_t max_grid_size = 1'000'000;
  BudgetOptions budget;
};

/// Full-factorial scan, evaluated in parallel and sorted by design_order.
std::vector<DesignResult> grid_scan(const SearchSpace& space, const ExperimentConfig& base,
                                    std::span<const double> freq_grid,
                                    const ScanSettings& settings = {});

/// Single-threaded reference for grid_scan.
std::vector<DesignResult> grid_scan_serial(const SearchSpace& space, const ExperimentConfig& base,
                                           std::span<const double> freq_grid,
                                           const ScanSettings& settings = {});

/// Cyclic coordinate descent with golden-section line searches (in log
/// coordinates on log axes). Stops when a full cycle improves the objective
/// by less than `tolerance` (relative) or after 50 cycles. Never returns a
/// point worse than, or less feasible than, `start`.
DesignResult refine(const DesignResult& start, const SearchSpace& space,
                    const ExperimentConfig& base, std::span<const double> freq_grid,
                    double tolerance, const BudgetOptions& options = {});

/// Grid scan, then refine the best feasible point. Returns it if feasible
/// with objective < 1, otherwise nullopt.
std::optional<DesignResult> feasibility_certificate(const SearchSpace& space,
                                                    const ExperimentConfig& base,
                                                    std::span<const double> freq_grid,
                                                    const ScanSettings& settings = {});

/// Same as feasibility_certificate for a scan that is already sorted by
/// design_order.
std::optional<DesignResult> certificate_from_scan(std::span<const DesignResult> scan,
                                                  const SearchSpace& space,
                                                  const ExperimentConfig& base,
                                                  std::span<const double> freq_grid,
                                                  const BudgetOptions& options = {});

/// R in [0.5, 2.5] um, P in [10 mW, 1 W], both log-scaled, w tied to R.
SearchSpace default_certificate_space();

}  // namespace levnoise
