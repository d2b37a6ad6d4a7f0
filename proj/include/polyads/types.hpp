#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace polyads {

inline constexpr int kMaxDims = 8;

// Bad user input: files, flags, malformed structures. CLI maps this to exit 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatchError : public InputError {
 public:
  using InputError::InputError;
};

class InvalidParameterError : public InputError {
 public:
  using InputError::InputError;
};

// A transform step would produce a negative count.
class NegativeCountError : public InputError {
 public:
  using InputError::InputError;
};

// Iteration budget exhausted. CLI maps this to exit 3.
class NonConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configured size cap was exceeded. CLI maps this to exit 4.
class ResourceGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Index of one cell of the D-way count array. Coordinates are dense 1-based
// node ids. Also used for projected tuples (level keys, adjacency tails),
// where dims() is the tuple length rather than the full D.
class EdgeIndex {
 public:
  EdgeIndex() = default;

  EdgeIndex(std::initializer_list<int32_t> coords) {
    if (coords.size() > static_cast<size_t>(kMaxDims))
      throw DimensionMismatchError("index has more than " +
                                   std::to_string(kMaxDims) + " dimensions");
    for (int32_t c : coords) c_[dims_++] = c;
  }

  static EdgeIndex of(const std::vector<int32_t>& coords) {
    if (coords.size() > static_cast<size_t>(kMaxDims))
      throw DimensionMismatchError("index has more than " +
                                   std::to_string(kMaxDims) + " dimensions");
    EdgeIndex e;
    for (int32_t c : coords) e.c_[e.dims_++] = c;
    return e;
  }

  static EdgeIndex zeros(int dims) {
    if (dims < 0 || dims > kMaxDims)
      throw DimensionMismatchError("bad dimension count " +
                                   std::to_string(dims));
    EdgeIndex e;
    e.dims_ = dims;
    return e;
  }

  int dims() const { return dims_; }

  int32_t operator[](int d) const { return c_[d]; }

  void set(int d, int32_t v) { c_[d] = v; }

  // Drops the first coordinate.
  EdgeIndex tail() const {
    EdgeIndex e;
    e.dims_ = dims_ - 1;
    for (int d = 1; d < dims_; ++d) e.c_[d - 1] = c_[d];
    return e;
  }

  // Prepends a coordinate.
  EdgeIndex with_front(int32_t head) const {
    if (dims_ + 1 > kMaxDims)
      throw DimensionMismatchError("index would exceed max dimensions");
    EdgeIndex e;
    e.dims_ = dims_ + 1;
    e.c_[0] = head;
    for (int d = 0; d < dims_; ++d) e.c_[d + 1] = c_[d];
    return e;
  }

  bool operator==(const EdgeIndex& o) const {
    if (dims_ != o.dims_) return false;
    for (int d = 0; d < dims_; ++d)
      if (c_[d] != o.c_[d]) return false;
    return true;
  }

  // Lexicographic. Shorter tuples order first when prefixes tie.
  std::strong_ordering operator<=>(const EdgeIndex& o) const {
    int n = dims_ < o.dims_ ? dims_ : o.dims_;
    for (int d = 0; d < n; ++d)
      if (auto cmp = c_[d] <=> o.c_[d]; cmp != 0) return cmp;
    return dims_ <=> o.dims_;
  }

  uint64_t hash() const {
    uint64_t h = 14695981039346656037ull;
    auto mix = [&h](uint64_t v) {
      h ^= v;
      h *= 1099511628211ull;
    };
    mix(static_cast<uint64_t>(dims_));
    for (int d = 0; d < dims_; ++d) mix(static_cast<uint64_t>(
        static_cast<uint32_t>(c_[d])));
    return h;
  }

  std::string str() const {
    std::string s = "(";
    for (int d = 0; d < dims_; ++d) {
      if (d) s += ",";
      s += std::to_string(c_[d]);
    }
    s += ")";
    return s;
  }

 private:
  std::array<int32_t, kMaxDims> c_{};
  int32_t dims_ = 0;
};

struct EdgeIndexHash {
  size_t operator()(const EdgeIndex& e) const {
    return static_cast<size_t>(e.hash());
  }
};

// Which proper subsets of dimensions carry fixed effects. Dimensions are
// 1-based in group definitions.
class FixedEffectStructure {
 public:
  FixedEffectStructure() = default;

  FixedEffectStructure(int dims, std::vector<std::vector<int>> groups);

  // All D subsets of cardinality D-1, ordered by the excluded dimension.
  static FixedEffectStructure max_structure(int dims);

  int dims() const { return dims_; }
  const std::vector<std::vector<int>>& groups() const { return groups_; }
  bool empty() const { return groups_.empty(); }

  // Level key of cell i under group g: the coordinates of i restricted to
  // the group's dimensions.
  EdgeIndex project(size_t g, const EdgeIndex& i) const;

 private:
  int dims_ = 0;
  std::vector<std::vector<int>> groups_;
};

}  // namespace polyads
