#include "levnoise/design_search.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "levnoise/errors.hpp"
#include "levnoise/golden_section.hpp"

namespace levnoise {

std::string_view param_name(DesignParam param) {
  switch (param) {
    case DesignParam::radius: return "R";
    case DesignParam::power: return "P";
    case DesignParam::wavelength: return "lambda";
    case DesignParam::waist: return "w";
    case DesignParam::pressure: return "Pvac";
    case DesignParam::geometric_factor: return "G";
  }
  return "?";
}

std::optional<DesignParam> parse_param_name(std::string_view name) {
  for (auto p : kAllDesignParams)
    if (param_name(p) == name) return p;
  return std::nullopt;
}

void SearchSpace::validate() const {
  std::set<DesignParam> seen;
  for (const auto& axis : axes) {
    const auto name = std::string(param_name(axis.param));
    if (!seen.insert(axis.param).second) throw DomainError("duplicate search axis " + name);
    if (!(axis.min < axis.max)) throw DomainError("search axis " + name + ": min must be < max");
    if (!(axis.min > 0.0)) throw DomainError("search axis " + name + ": bounds must be > 0");
    if (axis.param == DesignParam::geometric_factor && axis.min < 1.0)
      throw DomainError("search axis G: min must be >= 1");
  }
}

double DesignPoint::get(DesignParam param) const {
  switch (param) {
    case DesignParam::radius: return radius;
    case DesignParam::power: return power;
    case DesignParam::wavelength: return wavelength;
    case DesignParam::waist: return waist;
    case DesignParam::pressure: return pressure_torr;
    case DesignParam::geometric_factor: return geometric_factor;
  }
  return 0.0;
}

void DesignPoint::set(DesignParam param, double value) {
  switch (param) {
    case DesignParam::radius: radius = value; break;
    case DesignParam::power: power = value; break;
    case DesignParam::wavelength: wavelength = value; break;
    case DesignParam::waist: waist = value; break;
    case DesignParam::pressure: pressure_torr = value; break;
    case DesignParam::geometric_factor: geometric_factor = value; break;
  }
}

DesignPoint design_point_of(const ExperimentConfig& c) {
  return {c.sphere.radius, c.beam.power,           c.beam.wavelength,
          c.beam.waist,    c.vacuum.pressure_torr, c.detector.geometric_factor};
}

ExperimentConfig apply_design(const ExperimentConfig& base, const DesignPoint& p) {
  ExperimentConfig c = base;
  c.sphere.radius = p.radius;
  c.beam.power = p.power;
  c.beam.wavelength = p.wavelength;
  c.beam.waist = p.waist;
  c.vacuum.pressure_torr = p.pressure_torr;
  c.detector.geometric_factor = p.geometric_factor;
  return c;
}

ObjectiveValue objective(const ExperimentConfig& config, std::span<const double> freq_grid,
                         const BudgetOptions& options) {
  if (freq_grid.empty()) throw DomainError("objective: empty frequency grid");
  const auto budget = compute_budget(config, freq_grid, options);
  ObjectiveValue best{budget.rows.front().figure_of_merit, budget.rows.front().frequency};
  for (const auto& row : budget.rows)
    if (row.figure_of_merit < best.value) best = {row.figure_of_merit, row.frequency};
  return best;
}

DesignConstraints design_constraints(const ExperimentConfig& config) {
  DesignConstraints c;
  const auto flags = validity_flags(config);
  c.lambda_lt_R = !flags.wavelength_not_below_radius;
  c.waist_near_R = !flags.waist_far_from_radius;
  c.radiation_dominates =
      damping_dominance_check(config.sphere, config.vacuum, central_intensity(config.beam))
          .radiation_dominates;
  return c;
}

DesignResult evaluate_design(const ExperimentConfig& base, const DesignPoint& point,
                             std::span<const double> freq_grid, const BudgetOptions& options) {
  const auto config = apply_design(base, point);
  const auto obj = objective(config, freq_grid, options);
  DesignResult r;
  r.parameters = point;
  r.objective = obj.value;
  r.argmin_frequency = obj.argmin_frequency;
  r.constraints = design_constraints(config);
  r.feasible = r.constraints.all();
  return r;
}

bool design_order(const DesignResult& a, const DesignResult& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (a.objective != b.objective) return a.objective < b.objective;
  return a.parameters < b.parameters;
}

namespace {

// Continuous constraint-violation measure; zero exactly when feasible.
double violation(const DesignResult& r) {
  constexpr double strict = 1e-12;
  const auto& p = r.parameters;
  double v = 0.0;
  if (!r.constraints.lambda_lt_R) v += std::log(p.wavelength / p.radius) + strict;
  if (!r.constraints.waist_near_R)
    v += std::max(0.0, std::log(p.waist / (2.0 * p.radius))) +
         std::max(0.0, std::log(0.5 * p.radius / p.waist)) + strict;
  if (!r.constraints.radiation_dominates) {
    // tau_rad / tau_gas from the design parameters alone.
    ExperimentConfig c;
    c = apply_design(c, p);
    const auto t = damping_dominance_check(c.sphere, c.vacuum, central_intensity(c.beam));
    v += std::max(0.0, std::log(t.tau_rad / t.tau_gas)) + strict;
  }
  return v;
}

struct Merit {
  double violation;
  double objective;
};

bool merit_less(const Merit& a, const Merit& b) {
  if (a.violation != b.violation) return a.violation < b.violation;
  return a.objective < b.objective;
}

Merit merit_of(const DesignResult& r) { return {violation(r), r.objective}; }

bool waist_follows_radius(const SearchSpace& space) {
  if (!space.tie_waist_to_radius) return false;
  bool has_r = false;
  bool has_w = false;
  for (const auto& a : space.axes) {
    has_r |= a.param == DesignParam::radius;
    has_w |= a.param == DesignParam::waist;
  }
  return has_r && !has_w;
}

double to_search(const SearchAxis& axis, double x) {
  return axis.scale == AxisScale::log ? std::log(x) : x;
}

double from_search(const SearchAxis& axis, double u) {
  return axis.scale == AxisScale::log ? std::exp(u) : u;
}

}  // namespace

DesignResult refine(const DesignResult& start, const SearchSpace& space,
                    const ExperimentConfig& base, std::span<const double> freq_grid,
                    double tolerance, const BudgetOptions& options) {
  space.validate();
  const bool tie = waist_follows_radius(space);
  DesignResult current = start;
  Merit current_merit = merit_of(current);

  auto evaluate_along = [&](const SearchAxis& axis, double value) {
    DesignPoint p = current.parameters;
    p.set(axis.param, value);
    if (tie && axis.param == DesignParam::radius) p.waist = value;
    return evaluate_design(base, p, freq_grid, options);
  };

  constexpr int kMaxCycles = 50;
  for (int cycle = 0; cycle < kMaxCycles; ++cycle) {
    const double before = current.objective;
    const Merit before_merit = current_merit;
    for (const auto& axis : space.axes) {
      const double lo = to_search(axis, axis.min);
      const double hi = to_search(axis, axis.max);
      auto f = [&](double u) {
        const double x = std::clamp(from_search(axis, u), axis.min, axis.max);
        auto r = evaluate_along(axis, x);
        return std::pair{merit_of(r), r};
      };
      auto less = [](const auto& a, const auto& b) { return merit_less(a.first, b.first); };
      auto [u, best] = golden_section_minimize(f, lo, hi, 0.0, 1e-10 * (hi - lo), 200, less);
      for (double edge : {axis.min, axis.max}) {
        auto r = evaluate_along(axis, edge);
        auto m = merit_of(r);
        if (merit_less(m, best.first)) best = {m, r};
      }
      if (merit_less(best.first, current_merit)) {
        current = best.second;
        current_merit = best.first;
      }
    }
    const bool merit_improved = merit_less(current_merit, before_merit);
    if (!merit_improved) break;
    if (before_merit.violation == 0.0 &&
        (before - current.objective) <= tolerance * std::abs(before))
      break;
  }

  if (merit_less(merit_of(start), current_merit)) return start;
  if (start.feasible && !current.feasible) return start;
  return current;
}

std::optional<DesignResult> certificate_from_scan(std::span<const DesignResult> scan,
                                                  const SearchSpace& space,
                                                  const ExperimentConfig& base,
                                                  std::span<const double> freq_grid,
                                                  const BudgetOptions& options) {
  const auto best = std::find_if(scan.begin(), scan.end(),
                                 [](const DesignResult& r) { return r.feasible; });
  if (best == scan.end()) return std::nullopt;
  auto refined = space.axes.empty() ? *best : refine(*best, space, base, freq_grid, 1e-9, options);
  if (refined.feasible && refined.objective < 1.0) return refined;
  return std::nullopt;
}

std::optional<DesignResult> feasibility_certificate(const SearchSpace& space,
                                                    const ExperimentConfig& base,
                                                    std::span<const double> freq_grid,
                                                    const ScanSettings& settings) {
  space.validate();
  if (space.axes.empty()) {
    const auto r = evaluate_design(base, design_point_of(base), freq_grid, settings.budget);
    return certificate_from_scan(std::span(&r, 1), space, base, freq_grid, settings.budget);
  }
  const auto scan = grid_scan(space, base, freq_grid, settings);
  return certificate_from_scan(scan, space, base, freq_grid, settings.budget);
}

SearchSpace default_certificate_space() {
  SearchSpace s;
  s.axes = {{DesignParam::radius, 0.5e-6, 2.5e-6, AxisScale::log},
            {DesignParam::power, 0.01, 1.0, AxisScale::log}};
  s.tie_waist_to_radius = true;
  return s;
}

}  // namespace levnoise
