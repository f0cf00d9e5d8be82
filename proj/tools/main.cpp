// stochexp command line: simulate catalog models, check the analytic
// certificate, run the martingale diagnostics and the girsanov comparison,
// and emit a deterministic JSON report.
//
// Exit codes: 0 success, 1 usage or validation error, 2 the combined verdict
// is "contradiction" (certificate and measurement disagree).
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stochexp/catalog.hpp"
#include "stochexp/conditions.hpp"
#include "stochexp/diagnostics.hpp"
#include "stochexp/grid.hpp"
#include "stochexp/measure_change.hpp"
#include "stochexp/report.hpp"
#include "stochexp/simulate.hpp"

namespace {

using namespace stochexp;

struct CommonOpts {
  std::string model;
  double horizon = 0.0;  // 0 = use the model's own horizon
  double dt = 1e-3;
  std::size_t paths = 10000;
  std::uint64_t seed = 20260825ull;
  unsigned workers = 1;
  std::vector<double> levels{1e2, 1e3, 1e4, 1e5};
  std::string out;
  std::string config;
  bool no_timestamp = false;
  bool seed_from_config = false;
  std::map<std::string, CLI::Option*> opts;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  o.opts["model"] = cmd->add_option("--model", o.model, "catalog model name");
  o.opts["T"] =
      cmd->add_option("--T", o.horizon, "time horizon (default: model horizon)")
          ->check(CLI::PositiveNumber);
  o.opts["dt"] =
      cmd->add_option("--dt", o.dt, "grid step")->check(CLI::PositiveNumber);
  o.opts["paths"] =
      cmd->add_option("--paths", o.paths, "number of monte-carlo paths");
  o.opts["seed"] = cmd->add_option(
      "--seed", o.seed, "master seed (env STOCHEXP_SEED when unset)");
  o.opts["workers"] = cmd->add_option("--workers", o.workers, "worker threads");
  o.opts["levels"] =
      cmd->add_option("--levels", o.levels, "stopping ladder levels")
          ->delimiter(',');
  o.opts["out"] =
      cmd->add_option("--out", o.out, "write the JSON report to this file");
  cmd->add_flag("--no-timestamp", o.no_timestamp,
                "omit the runtime section (byte-reproducible reports)");
  cmd->add_option("--config", o.config, "key = value config file")
      ->check(CLI::ExistingFile);
}

std::string trim(std::string s) {
  const char* ws = " \t\r";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string::npos) return "";
  return s.substr(first, s.find_last_not_of(ws) - first + 1);
}

// Fills options from a key = value file; flags given on the command line win.
// (CLI11's own config loader never reaches options owned by a subcommand.)
void apply_config(CommonOpts& o) {
  if (o.config.empty()) return;
  std::ifstream f(o.config);
  if (!f) throw std::invalid_argument("cannot open config file: " + o.config);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const auto it = o.opts.find(key);
    if (it == o.opts.end())
      throw std::invalid_argument("unknown config key: " + key);
    if (it->second->count() > 0) continue;  // flag beats config
    try {
      if (key == "model") {
        o.model = val;
      } else if (key == "T") {
        o.horizon = std::stod(val);
      } else if (key == "dt") {
        o.dt = std::stod(val);
      } else if (key == "paths") {
        o.paths = std::stoull(val);
      } else if (key == "seed") {
        o.seed = std::stoull(val);
        o.seed_from_config = true;
      } else if (key == "workers") {
        o.workers = static_cast<unsigned>(std::stoul(val));
      } else if (key == "levels") {
        o.levels.clear();
        std::istringstream ls(val);
        for (std::string tok; std::getline(ls, tok, ',');)
          o.levels.push_back(std::stod(trim(tok)));
      } else {
        o.out = val;
      }
    } catch (const std::logic_error&) {
      throw std::invalid_argument("bad config value for " + key + ": " + val);
    }
  }
}

// precedence: flag > config file > STOCHEXP_SEED > built-in default
void apply_env_seed(CommonOpts& o) {
  if (o.opts["seed"]->count() > 0 || o.seed_from_config) return;
  if (const char* env = std::getenv("STOCHEXP_SEED")) {
    o.seed = std::strtoull(env, nullptr, 10);
  }
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot open output file: " + out);
  f << text;
}

// Resolves the entry, applies the horizon override and validates the
// coefficients over the entry's sampling box.
struct Resolved {
  CatalogEntry entry;
  ModelSpec spec;
  DomainConfig domain;
};

Resolved resolve_model(const CommonOpts& o) {
  if (o.model.empty())
    throw std::invalid_argument("--model is required (flag or config file)");
  Resolved r{catalog_entry(o.model), {}, {}};
  r.spec = r.entry.spec;
  r.domain = r.entry.domain;
  if (o.horizon > 0.0 && o.horizon != r.spec.horizon) {
    r.spec.horizon = o.horizon;
    r.domain.time_samples = default_domain(r.spec).time_samples;
  }
  ValidationConfig vcfg;
  vcfg.box_lo = r.domain.lo;
  vcfg.box_hi = r.domain.hi;
  ValidationReport vr = validate_model(r.spec, vcfg);
  if (!vr.pass) {
    std::string msg = "model validation failed:";
    for (const ValidationIssue& issue : vr.issues) {
      msg += "\n  " + issue.what + " at t=" + std::to_string(issue.time);
    }
    throw std::invalid_argument(msg);
  }
  return r;
}

int cmd_run(const CommonOpts& o, bool with_girsanov, double threshold,
            const std::string& csv_path) {
  const auto t0 = std::chrono::steady_clock::now();
  Resolved r = resolve_model(o);
  const TimeGrid grid = make_grid(r.spec.horizon, o.dt);

  RunArtifacts art;
  art.conditions = benes_verdict(r.spec, r.domain);
  art.explosion = explosion_probe(r.spec, r.domain);
  const bool suspect = art.explosion.suspect || r.entry.explosion_suspect;

  DiagnosticsConfig dcfg;
  dcfg.levels = o.levels;
  dcfg.n_paths = o.paths;
  dcfg.master_seed = o.seed;
  dcfg.n_workers = o.workers;
  dcfg.stop_at_max_level = suspect;
  dcfg.use_running_sup = use_running_sup(r.spec);
  art.diag = run_diagnostics(r.spec, grid, dcfg);

  if (with_girsanov) {
    GirsanovConfig gcfg;
    gcfg.n_paths = o.paths;
    gcfg.master_seed = o.seed;
    gcfg.n_workers = o.workers;
    gcfg.envelope = r.entry.girsanov_envelope;
    gcfg.indicator_threshold = threshold;
    art.girsanov = girsanov_consistency(r.spec, grid, gcfg);
  }
  art.verdict = martingale_verdict(art.conditions, art.diag, suspect);
  art.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  ReportConfig rcfg;
  rcfg.model = r.spec.name;
  rcfg.horizon = r.spec.horizon;
  rcfg.dt = o.dt;
  rcfg.n_paths = o.paths;
  rcfg.master_seed = o.seed;
  rcfg.levels = o.levels;
  rcfg.girsanov = with_girsanov;
  rcfg.envelope = r.entry.girsanov_envelope;
  rcfg.indicator_threshold = threshold;
  rcfg.stop_at_max_level = suspect;
  rcfg.use_running_sup = dcfg.use_running_sup;
  rcfg.with_timestamp = !o.no_timestamp;
  emit(render_report(build_run_report(rcfg, art)), o.out);

  if (!csv_path.empty()) {
    StoppingRule rule;
    rule.use_running_sup = dcfg.use_running_sup;
    if (suspect && !o.levels.empty())
      rule.level = *std::max_element(o.levels.begin(), o.levels.end());
    const DriverPath driver = simulate_driver(r.spec, grid, o.seed, 0);
    const PathBundle bundle =
        integrate_path(r.spec, grid, driver, &rule, o.seed, 0);
    std::ofstream f(csv_path);
    if (!f) throw std::runtime_error("cannot open csv file: " + csv_path);
    write_path_csv(f, bundle);
  }
  return art.verdict.combined == "contradiction" ? 2 : 0;
}

int cmd_check(const CommonOpts& o) {
  Resolved r = resolve_model(o);
  Json j;
  Json cj;
  cj["model"] = r.spec.name;
  cj["horizon"] = r.spec.horizon;
  j["config"] = std::move(cj);
  j["conditions"] =
      conditions_json(benes_verdict(r.spec, r.domain),
                      explosion_probe(r.spec, r.domain));
  emit(render_report(j), o.out);
  return 0;
}

int cmd_girsanov(const CommonOpts& o, double envelope, double threshold,
                 double level) {
  Resolved r = resolve_model(o);
  const TimeGrid grid = make_grid(r.spec.horizon, o.dt);
  GirsanovConfig gcfg;
  gcfg.n_paths = o.paths;
  gcfg.master_seed = o.seed;
  gcfg.n_workers = o.workers;
  gcfg.envelope = envelope > 0.0 ? envelope : r.entry.girsanov_envelope;
  gcfg.indicator_threshold = threshold;
  gcfg.level = level;
  const GirsanovReport rep = girsanov_consistency(r.spec, grid, gcfg);
  const QvCheck qv = quadratic_variation_check(r.spec, grid, gcfg);

  Json j;
  Json cj;
  cj["model"] = r.spec.name;
  cj["horizon"] = r.spec.horizon;
  cj["dt"] = o.dt;
  cj["n_paths"] = o.paths;
  cj["master_seed"] = o.seed;
  cj["envelope"] = gcfg.envelope;
  cj["indicator_threshold"] = threshold;
  cj["level"] = level;
  j["config"] = std::move(cj);
  j["girsanov"] = girsanov_json(rep);
  Json qj;
  qj["realized_cont"] = estimate_json(qv.realized_cont);
  qj["expected_cont"] = estimate_json(qv.expected_cont);
  qj["realized_jump"] = estimate_json(qv.realized_jump);
  qj["expected_jump"] = estimate_json(qv.expected_jump);
  qj["cont_ok"] = qv.cont_ok;
  qj["jump_ok"] = qv.jump_ok;
  j["quadratic_variation"] = std::move(qj);
  emit(render_report(j), o.out);
  return 0;
}

int cmd_catalog() {
  for (const CatalogEntry& e : catalog()) {
    const char* cls = "markov";
    switch (e.spec.dependence.cls) {
      case DependenceClass::markov: cls = "markov"; break;
      case DependenceClass::path_dependent: cls = "path-dependent"; break;
      case DependenceClass::delay: cls = "delay"; break;
      case DependenceClass::volterra: cls = "volterra"; break;
    }
    std::printf("%-28s %-14s certificate=%-12s E[z_T]=%.10g%s\n",
                e.spec.name.c_str(), cls, to_string(e.expected_overall),
                e.expected_ez, e.explosion_suspect ? "  (stopped)" : "");
    std::printf("    %s\n", e.description.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic exponentials: simulation, certificates, "
               "diagnostics and change of measure"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  bool run_girsanov = false;
  double run_threshold = 1.0;
  std::string run_csv;
  CLI::App* run = app.add_subcommand(
      "run", "simulate a model and produce the full martingale report");
  add_common(run, run_opts);
  run->add_flag("--girsanov", run_girsanov,
                "include the change-of-measure comparison");
  run->add_option("--indicator-threshold", run_threshold,
                  "threshold of the indicator functional");
  run->add_option("--csv-paths", run_csv,
                  "write the first path as CSV to this file");

  CommonOpts check_opts;
  CLI::App* check = app.add_subcommand(
      "check", "evaluate the analytic certificate only (no simulation)");
  add_common(check, check_opts);

  CommonOpts gir_opts;
  double gir_envelope = 0.0;  // 0 = catalog default
  double gir_threshold = 1.0;
  double gir_level = 0.0;
  CLI::App* gir = app.add_subcommand(
      "girsanov", "compare weighted and tilted expectations");
  add_common(gir, gir_opts);
  gir->add_option("--envelope", gir_envelope,
                  "thinning envelope (default: catalog value)");
  gir->add_option("--indicator-threshold", gir_threshold,
                  "threshold of the indicator functional");
  gir->add_option("--level", gir_level,
                  "compare at the stopped node T ^ tau_level");

  CLI::App* cat = app.add_subcommand("catalog", "list the built-in models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (run->parsed()) {
      apply_config(run_opts);
      apply_env_seed(run_opts);
      return cmd_run(run_opts, run_girsanov, run_threshold, run_csv);
    }
    if (check->parsed()) {
      apply_config(check_opts);
      return cmd_check(check_opts);
    }
    if (gir->parsed()) {
      apply_config(gir_opts);
      apply_env_seed(gir_opts);
      return cmd_girsanov(gir_opts, gir_envelope, gir_threshold, gir_level);
    }
    if (cat->parsed()) {
      return cmd_catalog();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
