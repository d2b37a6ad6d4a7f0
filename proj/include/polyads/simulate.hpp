#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "polyads/covariates.hpp"
#include "polyads/graph.hpp"
#include "polyads/rng.hpp"

namespace polyads {

enum class NoiseKind { poisson, negbin };

// Three-way layout: dimensions (exporter, importer, period) of sizes
// (n1, n2, n3). Counts are exp(c + beta*X + u_ij + w_it + v_jt) means under
// Poisson or Gamma-Poisson noise; X follows an AR recursion along the third
// dimension seeded by the same w and v fields that enter the mean.
struct ThreeWayDesign {
  int32_t n1 = 0;
  int32_t n2 = 0;
  int32_t n3 = 5;
  double beta_star = 1.0;
  double fe_std = 0.25;
  double ar_coef = 0.5;
  double noise_scale = 0.25;
  double intercept_c = 0.0;
  NoiseKind noise = NoiseKind::poisson;
  double negbin_rate = 0.1;
  uint64_t seed = 0;
};

struct SimulatedDataset {
  SparseCountGraph graph;
  std::shared_ptr<DenseArrayCovariates> covariates;
  Eigen::VectorXd true_beta;
  double realized_density = 0.0;
};

// Each replication owns independent RNG streams derived from
// (design.seed, stream component, replication).
SimulatedDataset generate_three_way(const ThreeWayDesign& design,
                                    uint64_t replication = 0);

// G ~ Gamma(shape=rate, rate=rate) has unit mean; Poisson(lambda*G) then has
// mean lambda and variance lambda + lambda^2/rate.
int64_t negbin_draw(double lambda, double rate, PhiloxRng& rng);

// Bisection on the intercept c in [-30, 30] until the expected positive-cell
// share, averaged over mc_draws independent field draws, is within 5%
// relative of target_density.
double calibrate_intercept(const ThreeWayDesign& design, double target_density,
                           int mc_draws = 64);

struct SubsampleResult {
  SparseCountGraph graph;
  // Per dimension, the surviving original ids in ascending order; the
  // relabeled id is the 1-based position in this list.
  std::vector<std::vector<int32_t>> kept;
  // View over the original provider; keeps a reference, caller owns lifetime.
  std::shared_ptr<CovariateProvider> covariates;
};

// Samples round(p_d * n_d) nodes per dimension without replacement
// (proportion 1 keeps the dimension whole), keeps edges among sampled nodes,
// relabels coordinates densely.
SubsampleResult subsample_nodes(const SparseCountGraph& graph,
                                const CovariateProvider& cov,
                                const std::vector<double>& proportion_by_dim,
                                uint64_t seed, uint64_t replication = 0);

struct MetaResult {
  double pooled = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double tau2 = 0.0;
  int iterations = 0;
  bool used_fallback = false;
};

// Random-effects pooling of (estimate, variance) pairs: iterated
// Paule-Mandel between-study variance with a DerSimonian-Laird fallback.
MetaResult meta_analysis(
    const std::vector<std::pair<double, double>>& estimates);

}  // namespace polyads
