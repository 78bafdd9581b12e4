#pragma once

#include <string>
#include <vector>

#include "unravel/config.hpp"
#include "unravel/stats.hpp"

namespace unravel {

struct SchemeReport {
  std::string scheme;
  double max_residual = 0.0;
};

// unraveling-identity residuals on 100 deterministic random states per
// configured scheme; observable-dependent schemes take the max over the
// configured observables
std::vector<SchemeReport> validate_schemes(const ExperimentConfig& cfg);

// exact oracle series only: one oracle_<label>.csv (t, exact) per observable;
// returns the paths written
std::vector<std::string> export_oracle(const ExperimentConfig& cfg);

// full experiment: <scheme>_<label>_rep<r>.csv per (scheme, observable,
// repeat) plus summary.json; partial outputs are removed on failure; returns
// the paths written
std::vector<std::string> run_experiment(const ExperimentConfig& cfg);

}  // namespace unravel
