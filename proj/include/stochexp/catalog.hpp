// Built-in model catalog: the worked examples, counterexamples and
// stress models, with their expected condition verdicts and sampling domains.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stochexp/conditions.hpp"
#include "stochexp/model.hpp"

namespace stochexp {

struct CatalogEntry {
  ModelSpec spec;
  DomainConfig domain;
  // per-check expectations, keyed by the check names benes_verdict emits
  std::vector<std::pair<std::string, Verdict>> expected_checks;
  Verdict expected_overall = Verdict::pass;
  double expected_ez = 1.0;  // E z_T (0.6827 for the bessel counterexample)
  bool explosion_suspect = false;  // must be integrated with a stopping rule
  double girsanov_envelope = 1.0;  // dominates sup(1 + phi)
  std::string description;
};

const std::vector<CatalogEntry>& catalog();
const CatalogEntry& catalog_entry(const std::string& name);
std::vector<std::string> catalog_names();

// Stopping statistic flavor: running sup for non-markov dependence classes.
bool use_running_sup(const ModelSpec& spec);

}  // namespace stochexp
