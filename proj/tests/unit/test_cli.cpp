#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "json.hpp"
#include "levnoise/cli.hpp"
#include "levnoise/config.hpp"
#include "levnoise/csv.hpp"
#include "levnoise/design_search.hpp"
#include "../support/oracles.hpp"

using namespace levnoise;
using json = nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string write_config(const oracle::TempDir& dir, const std::string& name,
                         const std::string& extra = "") {
  const auto path = dir / name;
  std::ofstream(path) << "sphere.radius_um = 1.5\nbeam.power_mw = 100\nbeam.wavelength_um = 1.0\n"
                         "beam.waist_um = 1.5\nvacuum.pressure_torr = 1e-10\n"
                      << extra;
  return path.string();
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char ch : text) n += ch == '\n';
  return n;
}

json read_json(const std::string& path) { return json::parse(read_text_file(path)); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("budget: header, row count and summary") {
    oracle::TempDir dir;
    const auto cfg = write_config(dir, "a.cfg");
    const auto out = (dir / "b.csv").string();
    auto r = cli({"budget", "--config", cfg, "--out", out, "--points", "2"});
    REQUIRE(r.code == 0);
    const auto csv = read_text_file(out);
    CHECK(first_line(csv) ==
          "freq_hz,asd_shot,asd_backaction,asd_gas,asd_extra,asd_total,asd_sql,figure_of_merit");
    CHECK(line_count(csv) == 3);

    r = cli({"budget", "--config", cfg, "--out", out});
    REQUIRE(r.code == 0);
    const auto summary = read_json(out + ".summary.json");
    const auto config = load_config(cfg);
    const auto budget = compute_budget(config, log_spaced(50.0, 1e4, 200));
    double best = 1e300;
    for (const auto& row : budget.rows) best = std::min(best, row.figure_of_merit);
    CHECK(summary["min_figure_of_merit"].get<double>() == doctest::Approx(best).epsilon(1e-6));
    CHECK(summary["shot_noise_asd_m_per_sqrthz"].get<double>() ==
          doctest::Approx(shot_noise_asd(config.sphere, config.beam, config.detector)).epsilon(1e-6));
    CHECK(summary["radiation_dominates"].get<bool>());
    const auto manifest = read_json(out + ".manifest.json");
    CHECK(manifest["seed"].is_null());
    CHECK(manifest["config_snapshot"].get<std::string>() == serialize_config(config));
    CHECK(manifest.contains("timestamp"));
  }

  TEST_CASE("exit codes") {
    oracle::TempDir dir;
    const auto cfg = write_config(dir, "a.cfg");
    const auto out = (dir / "x.csv").string();
    CHECK(cli({}).code == 1);
    CHECK(cli({"bogus"}).code == 1);
    CHECK(cli({"budget", "--config", cfg, "--out", out, "--fmin", "100", "--fmax", "10"}).code == 1);
    CHECK(cli({"budget", "--config", (dir / "none.cfg").string(), "--out", out}).code == 4);
    const auto bad = write_config(dir, "bad.cfg", "sphere.colour = red\n");
    const auto r = cli({"budget", "--config", bad, "--out", out});
    CHECK(r.code == 2);
    CHECK(r.err.find("levnoise: error:") != std::string::npos);
    const auto vertical = write_config(dir, "v.cfg", "trap.axis = vertical\n");
    CHECK(cli({"simulate", "--config", vertical, "--out", out, "--duration", "0.01"}).code == 3);
    CHECK(cli({"simulate", "--config", cfg, "--out", out, "--duration", "1e-7"}).code == 1);
    CHECK(cli({"optimize", "--config", cfg, "--out", out, "--vary", "X=1:2"}).code == 1);
    CHECK(cli({"optimize", "--config", cfg, "--out", out, "--vary", "R=1e-6:2e-6", "--vary",
               "R=1e-6:3e-6"})
              .code == 1);
    CHECK(cli({"budget", "--config", cfg, "--out", (dir / "no" / "x.csv").string()}).code == 4);
  }

  TEST_CASE("simulate is byte-identical for a fixed seed, psd reads it back") {
    oracle::TempDir dir;
    const auto cfg = write_config(dir, "a.cfg", "vacuum.pressure_torr = 1e-2\n");
    // The duplicated pressure key is a config error.
    const auto cfg2 = (dir / "b.cfg").string();
    std::ofstream(cfg2) << "sphere.radius_um = 1.5\nbeam.power_mw = 100\nbeam.wavelength_um = 1.0\n"
                           "beam.waist_um = 1.5\nvacuum.pressure_torr = 1e-2\n";
    CHECK(cli({"simulate", "--config", cfg, "--out", (dir / "s.csv").string(), "--duration", "0.01"})
              .code == 2);
    const auto a = (dir / "a.csv").string();
    const auto b = (dir / "b.csv").string();
    const auto c = (dir / "c.csv").string();
    REQUIRE(cli({"simulate", "--config", cfg2, "--out", a, "--duration", "0.01", "--seed", "5"}).code == 0);
    REQUIRE(cli({"simulate", "--config", cfg2, "--out", b, "--duration", "0.01", "--seed", "5"}).code == 0);
    REQUIRE(cli({"simulate", "--config", cfg2, "--out", c, "--duration", "0.01", "--seed", "6"}).code == 0);
    CHECK(read_text_file(a) == read_text_file(b));
    CHECK(read_text_file(a) != read_text_file(c));
    CHECK(first_line(read_text_file(a)) == "t_s,x_m,y_meas_m,f_fb_n");
    CHECK(line_count(read_text_file(a)) == 10001);
    CHECK(read_json(a + ".manifest.json")["seed"].get<int>() == 5);

    const auto p = (dir / "p.csv").string();
    REQUIRE(cli({"psd", "--input", a, "--out", p, "--segment-length", "1024"}).code == 0);
    CHECK(first_line(read_text_file(p)) == "freq_hz,psd_m2_per_hz");
    CHECK(line_count(read_text_file(p)) == 514);
    const auto m = read_json(p + ".manifest.json");
    CHECK(m["sampling_rate_hz"].get<double>() == 1e6);
    CHECK(m["segment_count"].get<int>() == 18);
    CHECK(cli({"psd", "--input", a, "--out", p, "--segment-length", "1000"}).code == 1);
    CHECK(cli({"psd", "--input", a, "--out", p, "--segment-length", "16384"}).code == 1);
    std::ofstream(dir / "junk.csv") << "t_s,x_m,y_meas_m,f_fb_n\n0,1,2,3\n1,2,oops,4\n";
    const auto junk = cli({"psd", "--input", (dir / "junk.csv").string(), "--out", p});
    CHECK(junk.code == 2);
    CHECK(junk.err.find("line 3") != std::string::npos);
  }

  TEST_CASE("optimize: sorted design table and certificate") {
    oracle::TempDir dir;
    const auto cfg = write_config(dir, "a.cfg");
    const auto out = (dir / "d.csv").string();
    REQUIRE(cli({"optimize", "--config", cfg, "--out", out, "--vary", "R=1.2e-6:4e-6",
                 "--points-per-axis", "12"})
                .code == 0);
    const std::string_view header[] = {"objective", "argmin_freq_hz", "R_m", "P_w", "lambda_m",
                                       "w_m", "Pvac_torr", "G", "feasible"};
    const auto table = parse_numeric_csv(read_text_file(out), header);
    REQUIRE(table.rows() == 12);
    const auto base = load_config(cfg);
    const auto grid = log_spaced(50.0, 1e4, 200);
    for (std::size_t i = 0; i < table.rows(); ++i) {
      const double r = table.columns[2][i];
      CHECK(table.columns[5][i] == r);
      auto c = base;
      c.sphere.radius = r;
      c.beam.waist = r;
      CHECK(table.columns[0][i] == objective(c, grid).value);
      if (i > 0) CHECK(table.columns[0][i] >= table.columns[0][i - 1]);
    }
    const auto cert = read_json(out + ".certificate.json");
    CHECK_FALSE(cert["infeasible_in_space"].get<bool>());
    CHECK(cert["objective"].get<double>() <= table.columns[0][0]);
    CHECK(cert["feasible"].get<bool>());
  }

  TEST_CASE("optimize: certificate identical across thread counts") {
    oracle::TempDir dir;
    const auto cfg = write_config(dir, "a.cfg");
    std::string first;
    for (const char* threads : {"1", "2", "4"}) {
      const auto out = (dir / (std::string("t") + threads + ".csv")).string();
      REQUIRE(cli({"--threads", threads, "optimize", "--config", cfg, "--out", out, "--vary",
                   "R=0.5e-6:2.5e-6", "--vary", "P=0.01:1"})
                  .code == 0);
      const auto text = read_text_file(out + ".certificate.json") + read_text_file(out);
      if (first.empty())
        first = text;
      else
        CHECK(text == first);
    }
    omp_set_num_threads(omp_get_num_procs());
  }

  TEST_CASE("optimize: infeasible space is reported, not an error") {
    oracle::TempDir dir;
    const auto cfg = write_config(dir, "a.cfg");
    const auto out = (dir / "d.csv").string();
    REQUIRE(cli({"optimize", "--config", cfg, "--out", out, "--vary", "lambda=2e-6:3e-6"}).code == 0);
    const auto cert = read_json(out + ".certificate.json");
    CHECK(cert["infeasible_in_space"].get<bool>());
    CHECK(cert["evaluated_designs"].get<int>() == 16);
  }
}
