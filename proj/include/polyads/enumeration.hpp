#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "polyads/covariates.hpp"
#include "polyads/polyad.hpp"

namespace polyads {

// One canonical active polyad: columns 2..D ascending, positive-side orbit
// bound m >= 1, and top-first below bottom-first unless the negative side is
// pinned at zero. Carries everything the estimator touches so the count data
// and covariates are not consulted again.
struct ActivePolyadRecord {
  Polyad polyad;
  int64_t m;
  int64_t M;
  std::vector<int64_t> edge_counts;  // by edge selector
  Eigen::VectorXd did;

  int dims() const { return polyad.dims(); }
};

struct EnumerationOptions {
  // Cap on the canonical record count.
  uint64_t max_records = 100'000'000;
  int workers = 1;
};

struct EnumerationResult {
  std::vector<ActivePolyadRecord> records;  // sorted by (top, bottom)
  // Executions of the innermost candidate loop, the c * |E|^2 quantity.
  uint64_t inner_loop_count = 0;
  // Polyads counted with all 2^D permutations.
  uint64_t n_active = 0;
};

// Scans ordered first-coordinate pairs and adjacency-row pairs, keeping the
// canonical representative of every active polyad. Covariate coverage over
// the records' edges is validated in one pass before features are attached;
// the error lists every missing edge.
EnumerationResult enumerate_active(const SparseCountGraph& graph,
                                   const CovariateProvider& cov,
                                   const EnumerationOptions& options = {});

// enumerate_active without the covariate pass; did vectors are left empty.
EnumerationResult enumerate_active_structural(
    const SparseCountGraph& graph, const EnumerationOptions& options = {});

// Fills rec.did for every record, validating coverage first.
void attach_covariates(std::vector<ActivePolyadRecord>& records,
                       const CovariateProvider& cov, int workers = 1);

// For every edge of every active polyad (all 2^D permutations), the list of
// opposite rows together with the owning canonical record.
struct PolyadIncidence {
  struct Partner {
    EdgeIndex partner;
    uint32_t record;
  };
  std::unordered_map<EdgeIndex, std::vector<Partner>, EdgeIndexHash> by_edge;
  std::vector<EdgeIndex> sorted_keys;

  size_t num_keys() const { return sorted_keys.size(); }
};

PolyadIncidence build_incidence(const std::vector<ActivePolyadRecord>& records);

}  // namespace polyads
