#pragma once

#include <string>
#include <vector>

namespace rlest {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double observed = 0.0;   // figure of merit (residual, z-score, gap, ...)
  double threshold = 0.0;  // the bound it must satisfy
  std::string note;        // human-readable detail for the console
  double seconds = 0.0;    // wall time, console only (never in CSV)
};

// Runs the full end-to-end verification suite: replica formula vs exact
// oracles, transform identities, interpolation identities, posterior
// identities and determinism. Every tolerance is pinned here.
std::vector<CriterionResult> run_acceptance(int threads);

}  // namespace rlest
