// Command-line front end: sim, compare, certify, plotdata.
//
// Exit codes: 0 success, 1 configuration error, 2 diverged run.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vtolreg/errors.hpp"
#include "vtolreg/experiment.hpp"
#include "vtolreg/lyapunov.hpp"
#include "vtolreg/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDiverged = 2;

json matrix_json(const vtolreg::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const vtolreg::VectorX<double>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw vtolreg::ConfigError("cannot open " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw vtolreg::ConfigError(path.string() + ": " + e.what());
  }
}

int run_sim(const fs::path& config, const fs::path& out_dir) {
  const vtolreg::Scenario scenario = vtolreg::load_scenario(config);
  const vtolreg::RunResult run = vtolreg::run_scenario(scenario);
  fs::create_directories(out_dir);
  vtolreg::write_trace_csv(run.trace, out_dir / "trace.csv");
  json metrics = vtolreg::metrics_to_json(run.metrics);
  metrics["schema_version"] = vtolreg::kSchemaVersion;
  metrics["scenario"] = scenario.name;
  metrics["mode"] = vtolreg::to_string(scenario.mode);
  if (!run.error.empty()) metrics["error"] = run.error;
  std::ofstream(out_dir / "metrics.json") << metrics.dump(2) << '\n';
  std::cout << metrics.dump(2) << '\n';
  return run.metrics.diverged ? kExitDiverged : kExitOk;
}

// A compare config either holds "tracking" and "regulation" scenarios or a
// single scenario that is run in both modes.
int run_compare(const fs::path& config, const fs::path& out_dir) {
  const json j = read_json(config);
  const fs::path base = config.parent_path();
  vtolreg::Scenario tracking, regulation;
  if (j.contains("tracking") || j.contains("regulation")) {
    tracking = vtolreg::scenario_from_json(j.at("tracking"), base);
    regulation = vtolreg::scenario_from_json(j.at("regulation"), base);
  } else {
    json t = j, r = j;
    t["mode"] = "tracking";
    r["mode"] = "regulation";
    tracking = vtolreg::scenario_from_json(t, base);
    regulation = vtolreg::scenario_from_json(r, base);
  }
  const vtolreg::Comparison c = vtolreg::compare(tracking, regulation);
  vtolreg::write_comparison(c, out_dir);
  std::cout << c.summary.dump(2) << '\n';
  return c.tracking.metrics.diverged || c.regulation.metrics.diverged ? kExitDiverged : kExitOk;
}

int run_certify(const fs::path& config) {
  const json j = read_json(config);
  vtolreg::Gainsd gains;
  const fs::path base = config.parent_path();
  if (j.contains("mode")) {
    gains = vtolreg::scenario_from_json(j, base).gains;
  } else if (j.contains("gains")) {
    gains = j.at("gains").is_string() ? vtolreg::gains_from_json(read_json(base / j.at("gains").get<std::string>()))
                                      : vtolreg::gains_from_json(j.at("gains"));
  } else {
    gains = vtolreg::gains_from_json(j);
  }
  const bool with_integral = j.value("with_integral", false);
  const vtolreg::LyapunovCertificated cert = vtolreg::certify<double>(gains, with_integral);
  json out = {{"schema_version", vtolreg::kSchemaVersion},
              {"with_integral", with_integral},
              {"gains", vtolreg::gains_to_json(gains)},
              {"A_c", matrix_json(cert.loop.A_c)},
              {"Q", matrix_json(cert.Q)},
              {"P", matrix_json(cert.P)},
              {"residual", cert.residual},
              {"eigenvalues_P", vector_json(cert.eig_P)},
              {"eigenvalues_Q", vector_json(cert.eig_Q)},
              {"min_eig_P", cert.min_eig_P},
              {"min_eig_Q", cert.min_eig_Q},
              {"max_real_eig_Ac", cert.max_real_eig_Ac},
              {"condition_estimate", cert.condition_estimate},
              {"ill_conditioned", cert.ill_conditioned},
              {"cholesky_ok", cert.P_cholesky_ok},
              {"passed", cert.passed()}};
  std::cout << out.dump(2) << '\n';
  return cert.passed() ? kExitOk : kExitConfig;
}

int run_plotdata(const fs::path& trace, const fs::path& out_dir) {
  const vtolreg::TraceLog log = vtolreg::read_trace_csv(trace);
  for (const fs::path& p : vtolreg::write_plot_data(log, out_dir)) std::cout << p.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VTOL trajectory tracking vs maneuver regulation laboratory"};
  app.require_subcommand(1);

  std::string config, out_dir, trace;
  auto* sim = app.add_subcommand("sim", "Run one scenario and write trace.csv + metrics.json");
  sim->add_option("--config", config, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "Output directory")->required();

  auto* cmp = app.add_subcommand("compare", "Run tracking and regulation on the same scenario");
  cmp->add_option("--config", config, "Comparison or scenario JSON")->required()->check(CLI::ExistingFile);
  cmp->add_option("--out", out_dir, "Output directory")->required();

  auto* cert = app.add_subcommand("certify", "Print the Lyapunov certificate for the configured gains");
  cert->add_option("--config", config, "Scenario or gains JSON")->required()->check(CLI::ExistingFile);

  auto* plot = app.add_subcommand("plotdata", "Split a trace into tidy per-panel CSVs");
  plot->add_option("--trace", trace, "Trace CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sim) return run_sim(config, out_dir);
    if (*cmp) return run_compare(config, out_dir);
    if (*cert) return run_certify(config);
    if (*plot) return run_plotdata(trace, out_dir);
  } catch (const vtolreg::NotHurwitzError& e) {
    std::cerr << "certify: " << e.what() << '\n';
    return kExitConfig;
  } catch (const vtolreg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
