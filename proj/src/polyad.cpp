#include "polyads/polyad.hpp"

#include <bit>

namespace polyads {

Polyad::Polyad(EdgeIndex top, EdgeIndex bottom)
    : top_(top), bottom_(bottom) {
  if (top_.dims() != bottom_.dims() || top_.dims() < 1)
    throw DimensionMismatchError("polyad rows must share dimensions");
  for (int d = 0; d < top_.dims(); ++d)
    if (top_[d] == bottom_[d])
      throw InvalidParameterError("polyad rows agree in column " +
                                  std::to_string(d + 1) + ": " + str());
}

EdgeIndex Polyad::edge(uint32_t selector) const {
  EdgeIndex e = EdgeIndex::zeros(dims());
  for (int d = 0; d < dims(); ++d)
    e.set(d, (selector >> d & 1u) ? bottom_[d] : top_[d]);
  return e;
}

int Polyad::selector_sign(uint32_t selector) {
  return (std::popcount(selector) & 1) ? -1 : 1;
}

int Polyad::sign(const EdgeIndex& i) const {
  if (i.dims() != dims())
    throw DimensionMismatchError("index dimension mismatch: " + i.str());
  int s = 1;
  for (int d = 0; d < dims(); ++d) {
    if (i[d] == top_[d]) continue;
    if (i[d] == bottom_[d]) {
      s = -s;
      continue;
    }
    return 0;
  }
  return s;
}

Polyad Polyad::permutation(uint32_t mask) const {
  EdgeIndex t = top_, b = bottom_;
  for (int d = 0; d < dims(); ++d) {
    if (mask >> d & 1u) {
      t.set(d, bottom_[d]);
      b.set(d, top_[d]);
    }
  }
  return Polyad(t, b);
}

OrbitBounds orbit_bounds(const SparseCountGraph& graph, const Polyad& p) {
  if (graph.dims() != p.dims())
    throw DimensionMismatchError("polyad dimension mismatch");
  int64_t m = INT64_MAX, M = INT64_MAX;
  uint32_t n = 1u << p.dims();
  for (uint32_t sel = 0; sel < n; ++sel) {
    int64_t y = graph.count(p.edge(sel));
    if (Polyad::selector_sign(sel) > 0)
      m = std::min(m, y);
    else
      M = std::min(M, y);
  }
  return {m, M};
}

SparseCountGraph apply_transform(const SparseCountGraph& graph,
                                 const Polyad& p, int64_t r) {
  auto [m, M] = orbit_bounds(graph, p);
  uint32_t n = 1u << p.dims();
  if (r < -m || r > M) {
    // Name the first edge that would go negative.
    for (uint32_t sel = 0; sel < n; ++sel) {
      int s = Polyad::selector_sign(sel);
      EdgeIndex e = p.edge(sel);
      if (graph.count(e) + r * s < 0)
        throw NegativeCountError("transform step " + std::to_string(r) +
                                 " drives edge " + e.str() + " negative");
    }
  }
  auto entries = graph.entries();
  std::unordered_map<EdgeIndex, int64_t, EdgeIndexHash> delta;
  for (uint32_t sel = 0; sel < n; ++sel)
    delta[p.edge(sel)] = r * Polyad::selector_sign(sel);
  for (auto& [e, y] : entries) {
    auto it = delta.find(e);
    if (it != delta.end()) {
      y += it->second;
      it->second = 0;
    }
  }
  for (const auto& [e, d] : delta)
    if (d != 0) entries.emplace_back(e, d);
  return SparseCountGraph(graph.sizes(), entries, graph.mode());
}

Eigen::VectorXd did_feature(const Polyad& p, const CovariateProvider& cov) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(cov.width());
  Eigen::VectorXd x(cov.width());
  uint32_t n = 1u << p.dims();
  for (uint32_t sel = 0; sel < n; ++sel) {
    cov.load(p.edge(sel), x.data());
    if (Polyad::selector_sign(sel) > 0)
      acc += x;
    else
      acc -= x;
  }
  return acc;
}

}  // namespace polyads
