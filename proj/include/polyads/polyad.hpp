#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "polyads/covariates.hpp"
#include "polyads/graph.hpp"
#include "polyads/types.hpp"

namespace polyads {

// An ordered pair of row indices that disagree in every column. Its 2^D
// edges are the cells obtained by picking the top or bottom coordinate per
// column; the selector's bit d-1 set means the bottom coordinate in column d.
class Polyad {
 public:
  Polyad(EdgeIndex top, EdgeIndex bottom);

  int dims() const { return top_.dims(); }
  const EdgeIndex& top() const { return top_; }
  const EdgeIndex& bottom() const { return bottom_; }
  int num_edges() const { return 1 << dims(); }

  EdgeIndex edge(uint32_t selector) const;

  // +1 for an even number of bottom picks, -1 for odd.
  static int selector_sign(uint32_t selector);

  // -1, 0 or +1; zero when the cell is not an edge of this polyad.
  int sign(const EdgeIndex& i) const;

  // Flips top and bottom in the columns of mask. mask = 0 is the identity.
  Polyad permutation(uint32_t mask) const;

  bool operator==(const Polyad& o) const {
    return top_ == o.top_ && bottom_ == o.bottom_;
  }
  std::strong_ordering operator<=>(const Polyad& o) const {
    if (auto c = top_ <=> o.top_; c != 0) return c;
    return bottom_ <=> o.bottom_;
  }

  std::string str() const { return top_.str() + "/" + bottom_.str(); }

 private:
  EdgeIndex top_;
  EdgeIndex bottom_;
};

struct OrbitBounds {
  int64_t m;  // min count over positive-sign edges
  int64_t M;  // min count over negative-sign edges
};

OrbitBounds orbit_bounds(const SparseCountGraph& graph, const Polyad& p);

// y + r * sign. Valid for -m <= r <= M, else NegativeCountError naming the
// first offending edge. Degrees under any structure are unchanged.
SparseCountGraph apply_transform(const SparseCountGraph& graph,
                                 const Polyad& p, int64_t r);

// Signed sum of covariates over the polyad's edges, the D-fold difference.
Eigen::VectorXd did_feature(const Polyad& p, const CovariateProvider& cov);

}  // namespace polyads
