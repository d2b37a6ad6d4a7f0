#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "polyads/types.hpp"

namespace polyads {

// Lookup structure for edge membership and counts. Hash keeps an index over
// full edges; sorted answers lookups by binary search in the per-row lists.
enum class AdjacencyMode { hash, sorted };

struct EdgeEntry {
  EdgeIndex tail;  // coordinates 2..D
  int64_t count;
};

// Immutable D-way count array stored sparsely. Rows are keyed by the first
// coordinate; row(i1) is exactly the projection of the support onto i_1 = i1,
// sorted by tail. Counts are strictly positive; zero-count input entries are
// dropped at construction.
class SparseCountGraph {
 public:
  SparseCountGraph(std::vector<int32_t> sizes,
                   const std::vector<std::pair<EdgeIndex, int64_t>>& entries,
                   AdjacencyMode mode = AdjacencyMode::hash);

  // Sizes inferred as the per-dimension coordinate maxima.
  static SparseCountGraph infer_sizes(
      const std::vector<std::pair<EdgeIndex, int64_t>>& entries,
      AdjacencyMode mode = AdjacencyMode::hash);

  int dims() const { return static_cast<int>(sizes_.size()); }
  int32_t size(int d) const { return sizes_[d]; }
  const std::vector<int32_t>& sizes() const { return sizes_; }

  int64_t count(const EdgeIndex& e) const;

  const std::vector<EdgeEntry>& row(int32_t i1) const {
    return rows_[static_cast<size_t>(i1) - 1];
  }

  int64_t num_edges() const { return num_edges_; }
  int64_t total_count() const { return total_count_; }

  // Product of sizes. Throws ResourceGuardError past 2^62 cells.
  int64_t num_cells() const;

  AdjacencyMode mode() const { return mode_; }
  SparseCountGraph with_mode(AdjacencyMode mode) const;

  // All positive entries in lexicographic edge order.
  std::vector<std::pair<EdgeIndex, int64_t>> entries() const;

 private:
  std::vector<int32_t> sizes_;
  AdjacencyMode mode_;
  std::vector<std::vector<EdgeEntry>> rows_;
  std::unordered_map<EdgeIndex, int64_t, EdgeIndexHash> index_;
  int64_t num_edges_ = 0;
  int64_t total_count_ = 0;
};

using LevelCounts = std::unordered_map<EdgeIndex, int64_t, EdgeIndexHash>;

struct DegreeMap {
  std::vector<LevelCounts> by_group;
  bool operator==(const DegreeMap&) const = default;
};

// Per fixed-effect group, the total count in each level slice.
DegreeMap degrees(const SparseCountGraph& graph,
                  const FixedEffectStructure& structure);

}  // namespace polyads
