#pragma once

#include <string>
#include <vector>

#include "rlest/config.hpp"

namespace rlest {

struct RunArtifact {
  std::string path;
  std::string content;
};

struct RunOutcome {
  int exit_code = 0;
  std::vector<RunArtifact> artifacts;
  std::string console;
};

// Dispatches the config to its module and assembles the CSV artifacts in
// memory. Deterministic: equal configs yield byte-identical artifact bodies
// regardless of the thread count.
RunOutcome run_config(const RunConfig& config);

// run_config + write artifacts to disk + print the console block.
int run(const RunConfig& config);

}  // namespace rlest
