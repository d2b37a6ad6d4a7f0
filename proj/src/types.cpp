#include "polyads/types.hpp"

#include <algorithm>

namespace polyads {

FixedEffectStructure::FixedEffectStructure(int dims,
                                           std::vector<std::vector<int>> groups)
    : dims_(dims), groups_(std::move(groups)) {
  if (dims_ < 1 || dims_ > kMaxDims)
    throw DimensionMismatchError("bad dimension count " +
                                 std::to_string(dims_));
  for (auto& g : groups_) {
    if (g.empty())
      throw InvalidParameterError("fixed-effect group must be nonempty");
    std::sort(g.begin(), g.end());
    if (std::adjacent_find(g.begin(), g.end()) != g.end())
      throw InvalidParameterError("fixed-effect group repeats a dimension");
    if (g.front() < 1 || g.back() > dims_)
      throw DimensionMismatchError("fixed-effect group dimension out of range");
    if (static_cast<int>(g.size()) >= dims_)
      throw InvalidParameterError(
          "fixed-effect group must be a proper subset of the dimensions");
  }
  for (size_t a = 0; a < groups_.size(); ++a)
    for (size_t b = a + 1; b < groups_.size(); ++b)
      if (groups_[a] == groups_[b])
        throw InvalidParameterError("duplicate fixed-effect group");
}

FixedEffectStructure FixedEffectStructure::max_structure(int dims) {
  if (dims < 2)
    throw DimensionMismatchError("max structure needs at least 2 dimensions");
  std::vector<std::vector<int>> groups;
  for (int skip = 1; skip <= dims; ++skip) {
    std::vector<int> g;
    for (int d = 1; d <= dims; ++d)
      if (d != skip) g.push_back(d);
    groups.push_back(std::move(g));
  }
  return FixedEffectStructure(dims, std::move(groups));
}

EdgeIndex FixedEffectStructure::project(size_t g, const EdgeIndex& i) const {
  if (g >= groups_.size())
    throw DimensionMismatchError("fixed-effect group index out of range");
  if (i.dims() != dims_)
    throw DimensionMismatchError("index dimension mismatch: " + i.str());
  const auto& dims = groups_[g];
  EdgeIndex key = EdgeIndex::zeros(static_cast<int>(dims.size()));
  for (size_t k = 0; k < dims.size(); ++k) key.set(static_cast<int>(k),
                                                   i[dims[k] - 1]);
  return key;
}

}  // namespace polyads
