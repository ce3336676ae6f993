#include "levnoise/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "levnoise/constants.hpp"
#include "levnoise/csv.hpp"
#include "levnoise/errors.hpp"

namespace levnoise {

double sphere_mass(const SphereConfig& sphere) {
  return 4.0 / 3.0 * constants::pi * sphere.density * sphere.radius * sphere.radius *
         sphere.radius;
}

double VacuumConfig::pressure_pa() const { return pressure_torr * constants::torr_to_pa; }

double NoiseCurve::interpolate(double frequency) const {
  if (frequencies.empty() || frequency < frequencies.front() || frequency > frequencies.back())
    return 0.0;
  const auto it = std::upper_bound(frequencies.begin(), frequencies.end(), frequency);
  if (it == frequencies.end()) return asd_values.back();
  const auto hi = static_cast<std::size_t>(it - frequencies.begin());
  const auto lo = hi - 1;
  const double t = std::log(frequency / frequencies[lo]) / std::log(frequencies[hi] / frequencies[lo]);
  const double a = asd_values[lo];
  const double b = asd_values[hi];
  if (a > 0.0 && b > 0.0) return a * std::pow(b / a, t);
  return a + (b - a) * t;
}

namespace {

std::string bound_message(std::string_view key, std::string_view bound, double value) {
  return "invalid value for " + std::string(key) + ": " + format_double(value) +
         " (must be " + std::string(bound) + ")";
}

void require(bool ok, std::string_view key, std::string_view bound, double value) {
  if (!ok || std::isnan(value)) throw ConfigError(bound_message(key, bound, value));
}

// Unit-suffixed document key -> SI field. `scale` converts document units to
// SI (value_si = value_doc * scale).
struct NumericKey {
  std::string_view key;
  double scale;
  std::function<double&(ExperimentConfig&)> field;
};

const std::vector<NumericKey>& numeric_keys() {
  static const std::vector<NumericKey> keys = {
      {"sphere.radius_um", 1e-6, [](ExperimentConfig& c) -> double& { return c.sphere.radius; }},
      {"sphere.density_kg_m3", 1.0,
       [](ExperimentConfig& c) -> double& { return c.sphere.density; }},
      {"beam.power_mw", 1e-3, [](ExperimentConfig& c) -> double& { return c.beam.power; }},
      {"beam.wavelength_um", 1e-6,
       [](ExperimentConfig& c) -> double& { return c.beam.wavelength; }},
      {"beam.waist_um", 1e-6, [](ExperimentConfig& c) -> double& { return c.beam.waist; }},
      {"vacuum.pressure_torr", 1.0,
       [](ExperimentConfig& c) -> double& { return c.vacuum.pressure_torr; }},
      {"vacuum.temperature_k", 1.0,
       [](ExperimentConfig& c) -> double& { return c.vacuum.gas_temperature; }},
      {"detector.geometric_factor", 1.0,
       [](ExperimentConfig& c) -> double& { return c.detector.geometric_factor; }},
      {"detector.sampling_rate_hz", 1.0,
       [](ExperimentConfig& c) -> double& { return c.detector.sampling_rate; }},
      {"feedback.gp_per_s2", 1.0,
       [](ExperimentConfig& c) -> double& { return c.feedback.proportional_gain; }},
      {"feedback.gd_per_s", 1.0,
       [](ExperimentConfig& c) -> double& { return c.feedback.derivative_gain; }},
      {"feedback.force_limit_n", 1.0,
       [](ExperimentConfig& c) -> double& { return c.feedback.force_limit; }},
  };
  return keys;
}

constexpr std::string_view kRequired[] = {"sphere.radius_um", "beam.power_mw",
                                          "beam.wavelength_um", "beam.waist_um",
                                          "vacuum.pressure_torr"};

bool parse_bool(std::string_view v, bool& out) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0" || v == "no" || v == "off") {
    out = false;
    return true;
  }
  return false;
}

double number_or_throw(std::string_view key, std::string_view value, std::size_t line) {
  const auto v = parse_double(value);
  if (!v)
    throw ConfigError("line " + std::to_string(line) + ": non-numeric value '" +
                      std::string(value) + "' for " + std::string(key));
  return *v;
}

// Shortest document value `d` with d * scale == si, searched in a few ulps
// around si / scale. Values that came from parse_config always have one.
std::string document_value(double si, double scale) {
  if (scale == 1.0) return format_double(si);
  const double guess = si / scale;
  std::string best;
  double probe = guess;
  for (int i = 0; i < 8; ++i) probe = std::nextafter(probe, -INFINITY);
  for (int i = 0; i < 17; ++i, probe = std::nextafter(probe, INFINITY)) {
    if (probe * scale != si) continue;
    auto s = format_double(probe);
    if (best.empty() || s.size() < best.size()) best = std::move(s);
  }
  return best.empty() ? format_double(guess) : best;
}

}  // namespace

ValidityFlags validity_flags(const ExperimentConfig& config) {
  ValidityFlags flags;
  const double r = config.sphere.radius;
  flags.wavelength_not_below_radius = config.beam.wavelength >= r;
  flags.waist_far_from_radius = config.beam.waist < 0.5 * r || config.beam.waist > 2.0 * r;
  return flags;
}

std::vector<std::string> validity_warnings(const ExperimentConfig& config) {
  const auto flags = validity_flags(config);
  std::vector<std::string> out;
  if (flags.wavelength_not_below_radius)
    out.emplace_back("lambda >= R: shot-noise formula assumes wavelength below sphere radius");
  if (flags.waist_far_from_radius)
    out.emplace_back("waist not within a factor of 2 of R: formulas assume w ~ R");
  return out;
}

void validate(const NoiseCurve& curve) {
  if (curve.frequencies.size() != curve.asd_values.size())
    throw ConfigError("extra noise curve: frequency and ASD columns differ in length");
  if (curve.frequencies.size() < 2)
    throw ConfigError("extra noise curve: at least 2 points required");
  for (std::size_t i = 0; i < curve.frequencies.size(); ++i) {
    const double f = curve.frequencies[i];
    if (!(f > 0.0) || !std::isfinite(f))
      throw ConfigError("extra noise curve: frequency " + format_double(f) + " must be > 0");
    if (i > 0 && !(f > curve.frequencies[i - 1]))
      throw ConfigError("extra noise curve: frequencies must be strictly increasing");
    const double a = curve.asd_values[i];
    if (!(a >= 0.0) || !std::isfinite(a))
      throw ConfigError("extra noise curve: ASD " + format_double(a) + " must be >= 0");
  }
}

void validate(const ExperimentConfig& c) {
  require(c.sphere.radius > 0, "sphere.radius_um", "> 0", c.sphere.radius);
  require(c.sphere.density > 0, "sphere.density_kg_m3", "> 0", c.sphere.density);
  require(c.beam.power > 0, "beam.power_mw", "> 0", c.beam.power);
  require(c.beam.wavelength > 0, "beam.wavelength_um", "> 0", c.beam.wavelength);
  require(c.beam.waist > 0, "beam.waist_um", "> 0", c.beam.waist);
  require(c.vacuum.pressure_torr > 0, "vacuum.pressure_torr", "> 0", c.vacuum.pressure_torr);
  require(c.vacuum.gas_temperature > 0, "vacuum.temperature_k", "> 0",
          c.vacuum.gas_temperature);
  require(c.detector.geometric_factor >= 1, "detector.geometric_factor", ">= 1",
          c.detector.geometric_factor);
  require(c.detector.sampling_rate > 0, "detector.sampling_rate_hz", "> 0",
          c.detector.sampling_rate);
  if (c.detector.backaction_loss_factor)
    require(*c.detector.backaction_loss_factor >= 1, "detector.backaction_loss_factor", ">= 1",
            *c.detector.backaction_loss_factor);
  require(std::isfinite(c.feedback.proportional_gain) && c.feedback.proportional_gain >= 0,
          "feedback.gp_per_s2", "finite and >= 0", c.feedback.proportional_gain);
  require(std::isfinite(c.feedback.derivative_gain) && c.feedback.derivative_gain >= 0,
          "feedback.gd_per_s", "finite and >= 0", c.feedback.derivative_gain);
  if (c.feedback.enabled)
    require(c.feedback.force_limit > 0, "feedback.force_limit_n", "> 0 when feedback is enabled",
            c.feedback.force_limit);
  if (c.sim.time_step)
    require(*c.sim.time_step > 0, "sim.time_step_s", "> 0", *c.sim.time_step);
  require(c.sim.record_decimation >= 1, "sim.record_decimation", ">= 1",
          c.sim.record_decimation);
  for (double v : {c.sphere.radius, c.sphere.density, c.beam.power, c.beam.wavelength,
                   c.beam.waist, c.vacuum.pressure_torr, c.vacuum.gas_temperature,
                   c.detector.geometric_factor, c.detector.sampling_rate})
    if (!std::isfinite(v)) throw ConfigError("non-finite configuration value");
  if (c.extra_noise) validate(*c.extra_noise);
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'section.key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (value.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty value for " +
                        std::string(key));
    if (seen.contains(key))
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key " +
                        std::string(key));

    const auto& keys = numeric_keys();
    if (auto it = std::find_if(keys.begin(), keys.end(),
                               [&](const NumericKey& k) { return k.key == key; });
        it != keys.end()) {
      it->field(config) = number_or_throw(key, value, line_no) * it->scale;
    } else if (key == "detector.backaction_loss_factor") {
      config.detector.backaction_loss_factor = number_or_throw(key, value, line_no);
    } else if (key == "feedback.enabled") {
      if (!parse_bool(value, config.feedback.enabled))
        throw ConfigError("line " + std::to_string(line_no) + ": feedback.enabled expects true/false");
    } else if (key == "trap.axis") {
      if (value == "transverse")
        config.trap_axis = TrapAxis::transverse;
      else if (value == "vertical")
        config.trap_axis = TrapAxis::vertical;
      else
        throw ConfigError("line " + std::to_string(line_no) +
                          ": trap.axis must be 'transverse' or 'vertical'");
    } else if (key == "sim.time_step_s") {
      config.sim.time_step = number_or_throw(key, value, line_no);
    } else if (key == "sim.record_decimation") {
      const double d = number_or_throw(key, value, line_no);
      if (d != std::floor(d) || d < 1 || d > 1e9)
        throw ConfigError("line " + std::to_string(line_no) +
                          ": sim.record_decimation must be a positive integer");
      config.sim.record_decimation = static_cast<int>(d);
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key " + std::string(key));
    }
    seen.emplace(key);
  }

  for (auto key : kRequired)
    if (!seen.contains(key)) throw ConfigError("missing required key " + std::string(key));

  validate(config);
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path));
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  ExperimentConfig copy = config;
  for (const auto& k : numeric_keys()) {
    out += k.key;
    out += " = ";
    out += document_value(k.field(copy), k.scale);
    out += '\n';
  }
  if (config.detector.backaction_loss_factor)
    out += "detector.backaction_loss_factor = " +
           format_double(*config.detector.backaction_loss_factor) + '\n';
  out += std::string("feedback.enabled = ") + (config.feedback.enabled ? "true" : "false") + '\n';
  out += "trap.axis = " + std::string(to_string(config.trap_axis)) + '\n';
  if (config.sim.time_step) out += "sim.time_step_s = " + format_double(*config.sim.time_step) + '\n';
  out += "sim.record_decimation = " + std::to_string(config.sim.record_decimation) + '\n';
  return out;
}

NoiseCurve parse_noise_curve_csv(std::string_view text) {
  constexpr std::string_view header[] = {"freq_hz", "asd_m_per_sqrthz"};
  auto table = parse_numeric_csv(text, header);
  NoiseCurve curve{std::move(table.columns[0]), std::move(table.columns[1])};
  validate(curve);
  return curve;
}

NoiseCurve load_noise_curve(const std::filesystem::path& path) {
  return parse_noise_curve_csv(read_text_file(path));
}

ExperimentConfig reference_config() {
  ExperimentConfig c;
  c.sphere = {1e-6, 2000.0};
  c.beam = {0.1, 1e-6, 1e-6};
  c.vacuum = {1e-10, 300.0};
  c.detector.geometric_factor = 10.0;
  c.detector.sampling_rate = 1e6;
  return c;
}

std::string_view to_string(TrapAxis axis) {
  return axis == TrapAxis::vertical ? "vertical" : "transverse";
}

}  // namespace levnoise
