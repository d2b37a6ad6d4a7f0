#pragma once

#include <Eigen/Core>
#include <memory>
#include <random>
#include <vector>

#include "../oracle/oracle.hpp"
#include "polyads/covariates.hpp"
#include "polyads/graph.hpp"
#include "polyads/polyad.hpp"
#include "polyads/types.hpp"

namespace testutil {

using Rng = std::mt19937_64;

inline polyads::EdgeIndex ei(std::initializer_list<int32_t> coords) {
  return polyads::EdgeIndex(coords);
}

// One random instance materialized for both the production library and the
// brute-force oracle: sparse counts plus covariates on every cell.
struct Instance {
  std::vector<int32_t> sizes;
  std::vector<std::pair<polyads::EdgeIndex, int64_t>> entries;
  std::shared_ptr<polyads::SparseCountGraph> graph;
  std::shared_ptr<polyads::DenseArrayCovariates> cov;
  oracle::CountMap counts;
  oracle::CovMap cmap;
  int p = 1;
};

inline bool advance_coords(std::vector<int32_t>& coords,
                           const std::vector<int32_t>& sizes) {
  for (size_t d = coords.size(); d-- > 0;) {
    if (coords[d] < sizes[d]) {
      ++coords[d];
      return true;
    }
    coords[d] = 1;
  }
  return false;
}

inline Instance random_instance(Rng& rng, int D, int32_t max_dim,
                                int64_t max_count, int p,
                                double fill = 0.45) {
  Instance inst;
  inst.p = p;
  std::uniform_int_distribution<int32_t> dim_dist(2, max_dim);
  for (int d = 0; d < D; ++d) inst.sizes.push_back(dim_dist(rng));

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int64_t> count_dist(1, max_count);
  std::normal_distribution<double> xdist(0.0, 1.0);

  inst.cov = std::make_shared<polyads::DenseArrayCovariates>(inst.sizes, p);
  std::vector<int32_t> coords(static_cast<size_t>(D), 1);
  do {
    polyads::EdgeIndex e = polyads::EdgeIndex::of(coords);
    if (u01(rng) < fill) {
      int64_t y = count_dist(rng);
      inst.entries.push_back({e, y});
      inst.counts[coords] = y;
    }
    Eigen::VectorXd x(p);
    for (int k = 0; k < p; ++k) x[k] = xdist(rng);
    double* cell = inst.cov->cell(e);
    for (int k = 0; k < p; ++k) cell[k] = x[k];
    inst.cmap[coords] = x;
  } while (advance_coords(coords, inst.sizes));

  inst.graph = std::make_shared<polyads::SparseCountGraph>(inst.sizes,
                                                           inst.entries);
  return inst;
}

inline Eigen::VectorXd random_beta(Rng& rng, int p, double scale = 0.7) {
  std::normal_distribution<double> dist(0.0, scale);
  Eigen::VectorXd beta(p);
  for (int k = 0; k < p; ++k) beta[k] = dist(rng);
  return beta;
}

inline oracle::PolyadTuple to_tuple(const polyads::Polyad& q) {
  oracle::PolyadTuple t(static_cast<size_t>(q.dims()));
  for (int d = 0; d < q.dims(); ++d)
    t[static_cast<size_t>(d)] = {q.top()[d], q.bottom()[d]};
  return t;
}

inline polyads::Polyad from_tuple(const oracle::PolyadTuple& t) {
  std::vector<int32_t> top, bottom;
  for (const auto& [a, b] : t) {
    top.push_back(a);
    bottom.push_back(b);
  }
  return polyads::Polyad(polyads::EdgeIndex::of(top),
                         polyads::EdgeIndex::of(bottom));
}

}  // namespace testutil
