#include "polyads/graph.hpp"

#include <algorithm>

namespace polyads {

SparseCountGraph::SparseCountGraph(
    std::vector<int32_t> sizes,
    const std::vector<std::pair<EdgeIndex, int64_t>>& entries,
    AdjacencyMode mode)
    : sizes_(std::move(sizes)), mode_(mode) {
  if (sizes_.empty() || sizes_.size() > static_cast<size_t>(kMaxDims))
    throw DimensionMismatchError("graph needs 1 to " +
                                 std::to_string(kMaxDims) + " dimensions");
  for (int32_t n : sizes_)
    if (n < 1) throw InvalidParameterError("dimension size must be positive");

  rows_.resize(static_cast<size_t>(sizes_[0]));
  int d = dims();
  for (const auto& [e, y] : entries) {
    if (e.dims() != d)
      throw DimensionMismatchError("edge dimension mismatch: " + e.str());
    for (int k = 0; k < d; ++k)
      if (e[k] < 1 || e[k] > sizes_[k])
        throw InputError("edge coordinate out of range: " + e.str());
    if (y < 0) throw NegativeCountError("negative count at edge " + e.str());
    if (y == 0) continue;
    rows_[static_cast<size_t>(e[0]) - 1].push_back({e.tail(), y});
  }
  for (auto& row : rows_) {
    std::sort(row.begin(), row.end(),
              [](const EdgeEntry& a, const EdgeEntry& b) {
                return a.tail < b.tail;
              });
    for (size_t k = 1; k < row.size(); ++k)
      if (row[k].tail == row[k - 1].tail)
        throw InputError("duplicate edge in input");
    num_edges_ += static_cast<int64_t>(row.size());
    for (const auto& en : row) total_count_ += en.count;
  }
  if (mode_ == AdjacencyMode::hash) {
    index_.reserve(static_cast<size_t>(num_edges_) * 2);
    for (int32_t i1 = 1; i1 <= sizes_[0]; ++i1)
      for (const auto& en : rows_[static_cast<size_t>(i1) - 1])
        index_.emplace(en.tail.with_front(i1), en.count);
  }
}

SparseCountGraph SparseCountGraph::infer_sizes(
    const std::vector<std::pair<EdgeIndex, int64_t>>& entries,
    AdjacencyMode mode) {
  if (entries.empty()) throw InputError("cannot infer sizes from no edges");
  int d = entries.front().first.dims();
  std::vector<int32_t> sizes(static_cast<size_t>(d), 1);
  for (const auto& [e, y] : entries) {
    if (e.dims() != d)
      throw DimensionMismatchError("edge dimension mismatch: " + e.str());
    for (int k = 0; k < d; ++k) sizes[k] = std::max(sizes[k], e[k]);
  }
  return SparseCountGraph(std::move(sizes), entries, mode);
}

int64_t SparseCountGraph::count(const EdgeIndex& e) const {
  if (e.dims() != dims())
    throw DimensionMismatchError("edge dimension mismatch: " + e.str());
  if (e[0] < 1 || e[0] > sizes_[0]) return 0;
  if (mode_ == AdjacencyMode::hash) {
    auto it = index_.find(e);
    return it == index_.end() ? 0 : it->second;
  }
  const auto& row = rows_[static_cast<size_t>(e[0]) - 1];
  EdgeIndex t = e.tail();
  auto it = std::lower_bound(row.begin(), row.end(), t,
                             [](const EdgeEntry& en, const EdgeIndex& key) {
                               return en.tail < key;
                             });
  return (it != row.end() && it->tail == t) ? it->count : 0;
}

int64_t SparseCountGraph::num_cells() const {
  int64_t n = 1;
  for (int32_t s : sizes_) {
    if (n > (int64_t{1} << 62) / s)
      throw ResourceGuardError("index space exceeds 2^62 cells");
    n *= s;
  }
  return n;
}

SparseCountGraph SparseCountGraph::with_mode(AdjacencyMode mode) const {
  return SparseCountGraph(sizes_, entries(), mode);
}

std::vector<std::pair<EdgeIndex, int64_t>> SparseCountGraph::entries() const {
  std::vector<std::pair<EdgeIndex, int64_t>> out;
  out.reserve(static_cast<size_t>(num_edges_));
  for (int32_t i1 = 1; i1 <= sizes_[0]; ++i1)
    for (const auto& en : rows_[static_cast<size_t>(i1) - 1])
      out.emplace_back(en.tail.with_front(i1), en.count);
  return out;
}

DegreeMap degrees(const SparseCountGraph& graph,
                  const FixedEffectStructure& structure) {
  if (structure.dims() != graph.dims())
    throw DimensionMismatchError("structure dimension mismatch");
  DegreeMap out;
  out.by_group.resize(structure.groups().size());
  for (const auto& [e, y] : graph.entries())
    for (size_t g = 0; g < structure.groups().size(); ++g)
      out.by_group[g][structure.project(g, e)] += y;
  return out;
}

}  // namespace polyads
