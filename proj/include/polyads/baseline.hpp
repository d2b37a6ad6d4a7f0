#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polyads/covariates.hpp"
#include "polyads/graph.hpp"
#include "polyads/types.hpp"

namespace polyads {

struct PpmlConfig {
  int max_outer = 200;
  double tolerance = 1e-8;  // max parameter change
  double separation_log = -30.0;
  int64_t max_cells = 10'000'000;
  int max_halvings = 30;
  int max_fe_sweeps = 200;  // closed-form sweeps per outer iteration
};

// Reported values reconstruct the mean as
//   log lambda = intercept + beta.x + sum_g fe_values[g][level key],
// with the first non-separated level of each group pinned to 0 and
// separated levels held at separation_log.
struct PpmlResult {
  Eigen::VectorXd beta_hat;
  double intercept = 0.0;  // 0 and unused when the structure is empty
  std::vector<std::map<EdgeIndex, double>> fe_values;
  int iterations = 0;
  bool converged = false;
  double deviance = 0.0;
  int separated_levels = 0;
  std::vector<std::string> warnings;
};

// Poisson pseudo-likelihood over every cell of the dense index space,
// zeros included: alternating closed-form per-level fixed-effect updates
// and a damped Newton step on beta.
PpmlResult ppml_fit(const SparseCountGraph& graph, const CovariateProvider& cov,
                    const FixedEffectStructure& structure,
                    const PpmlConfig& config = PpmlConfig{});

}  // namespace polyads
