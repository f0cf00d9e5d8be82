#include "stochexp/report.hpp"

#include <iomanip>

namespace stochexp {

Json estimate_json(const MCEstimate& est) {
  Json j;
  j["mean"] = est.mean;
  j["se"] = est.se;
  j["ci_lo"] = est.ci_lo;
  j["ci_hi"] = est.ci_hi;
  j["n_paths"] = est.n_paths;
  return j;
}

Json conditions_json(const ConditionReport& rep, const ExplosionProbe& probe) {
  Json j;
  j["model"] = rep.model;
  j["dependence"] = rep.dependence;
  j["overall"] = to_string(rep.overall);
  j["summary"] = rep.summary;
  Json checks = Json::array();
  for (const ConditionCheck& c : rep.checks) {
    Json cj;
    cj["name"] = c.name;
    cj["verdict"] = to_string(c.verdict);
    cj["estimated_r"] = c.estimated_r;
    cj["witness"] = c.witness;
    cj["witness_time"] = c.witness_time;
    cj["note"] = c.note;
    checks.push_back(std::move(cj));
  }
  j["checks"] = std::move(checks);
  Json pj;
  pj["suspect"] = probe.suspect;
  pj["exponent_estimate"] = probe.exponent_estimate;
  pj["note"] = probe.note;
  j["explosion"] = std::move(pj);
  return j;
}

Json ez_json(const EzReport& rep) {
  Json j = estimate_json(rep.est);
  j["level"] = rep.level;
  j["fired_fraction"] = rep.fired_fraction;
  Json tj;
  tj["max_weight"] = rep.guard.max_weight;
  tj["top_mass_share"] = rep.guard.top_mass_share;
  tj["dominance_warning"] = rep.guard.dominance_warning;
  tj["trimmed_mean"] = rep.guard.trimmed_mean;
  j["tail"] = std::move(tj);
  return j;
}

Json diagnostics_json(const DiagnosticsResult& diag) {
  Json j;
  j["ez"] = ez_json(diag.ez);

  Json lj;
  lj["stopped_at_max_level"] = diag.ladder.stopped_at_max_level;
  lj["trend"] = diag.ladder.trend;
  lj["self_test_pass"] = diag.ladder.self_test_pass;
  Json levels = Json::array();
  for (const LadderLevel& l : diag.ladder.levels) {
    Json ljl;
    ljl["level"] = l.level;
    ljl["stopped"] = estimate_json(l.stopped);
    ljl["fired_fraction"] = l.fired_fraction;
    ljl["truncated"] = estimate_json(l.truncated);
    ljl["within_3se"] = l.within_3se;
    levels.push_back(std::move(ljl));
  }
  lj["levels"] = std::move(levels);
  j["ladder"] = std::move(lj);

  Json uj;
  uj["trend"] = diag.ui.trend;
  Json ulevels = Json::array();
  for (const UiLevel& l : diag.ui.levels) {
    Json ujl;
    ujl["level"] = l.level;
    ujl["ez_log_z"] = estimate_json(l.ez_log_z);
    ujl["fired_fraction"] = l.fired_fraction;
    ulevels.push_back(std::move(ujl));
  }
  uj["levels"] = std::move(ulevels);
  j["ui_diagnostic"] = std::move(uj);

  Json sj;
  sj["ok"] = diag.scan.supermartingale_ok;
  sj["times"] = diag.scan.times;
  Json means = Json::array();
  Json ses = Json::array();
  for (const MCEstimate& e : diag.scan.ez) {
    means.push_back(e.mean);
    ses.push_back(e.se);
  }
  sj["means"] = std::move(means);
  sj["ses"] = std::move(ses);
  j["supermartingale"] = std::move(sj);
  return j;
}

Json girsanov_json(const GirsanovReport& rep) {
  Json j;
  j["level"] = rep.level;
  j["localized"] = rep.localized;
  j["all_overlap"] = rep.all_overlap;
  j["indicator_threshold"] = rep.indicator_threshold;
  j["ez_p"] = estimate_json(rep.ez_p);
  j["q_proposals"] = rep.q_proposals;
  j["q_accepted"] = rep.q_accepted;
  Json fs = Json::array();
  for (const FunctionalComparison& f : rep.functionals) {
    Json fj;
    fj["name"] = f.name;
    fj["weighted_p"] = estimate_json(f.weighted_p);
    fj["plain_q"] = estimate_json(f.plain_q);
    fj["gap_se"] = f.gap_se;
    fj["overlap"] = f.overlap;
    fs.push_back(std::move(fj));
  }
  j["functionals"] = std::move(fs);
  return j;
}

Json verdict_json(const MartingaleVerdict& v) {
  Json j;
  j["analytic"] = to_string(v.analytic);
  j["empirical"] = v.empirical;
  j["combined"] = v.combined;
  j["defect_estimate"] = v.defect_estimate;
  j["note"] = v.note;
  return j;
}

Json build_run_report(const ReportConfig& cfg, const RunArtifacts& art) {
  Json j;
  Json cj;
  cj["model"] = cfg.model;
  cj["horizon"] = cfg.horizon;
  cj["dt"] = cfg.dt;
  cj["n_paths"] = cfg.n_paths;
  cj["master_seed"] = cfg.master_seed;
  cj["levels"] = cfg.levels;
  cj["girsanov"] = cfg.girsanov;
  if (cfg.girsanov) {
    cj["envelope"] = cfg.envelope;
    cj["indicator_threshold"] = cfg.indicator_threshold;
  }
  cj["stop_at_max_level"] = cfg.stop_at_max_level;
  cj["use_running_sup"] = cfg.use_running_sup;
  j["config"] = std::move(cj);
  j["conditions"] = conditions_json(art.conditions, art.explosion);
  j["diagnostics"] = diagnostics_json(art.diag);
  if (art.girsanov) j["girsanov"] = girsanov_json(*art.girsanov);
  j["verdict"] = verdict_json(art.verdict);
  if (cfg.with_timestamp) {
    Json rj;
    rj["elapsed_seconds"] = art.elapsed_seconds;
    j["runtime"] = std::move(rj);
  }
  return j;
}

std::string render_report(const Json& j) { return j.dump(2) + "\n"; }

void write_path_csv(std::ostream& os, const PathBundle& bundle) {
  os << "t";
  for (std::size_t k = 0; k < bundle.d_state; ++k) os << ",x" << k;
  os << ",z,stopped\n";
  os << std::setprecision(17);
  const std::size_t n = bundle.grid.n_steps;
  for (std::size_t i = 0; i <= n; ++i) {
    os << bundle.times[i];
    for (std::size_t k = 0; k < bundle.d_state; ++k)
      os << "," << bundle.state(i, k);
    const bool stopped = bundle.stop_index && i >= *bundle.stop_index;
    os << "," << bundle.z(i) << "," << (stopped ? 1 : 0) << "\n";
  }
}

}  // namespace stochexp
