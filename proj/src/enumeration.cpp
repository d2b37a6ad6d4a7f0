#include "polyads/enumeration.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>

#include "polyads/parallel.hpp"

namespace polyads {

namespace {

// Candidate tails must rise strictly in every column.
bool tail_below(const EdgeIndex& a, const EdgeIndex& b) {
  for (int d = 0; d < a.dims(); ++d)
    if (a[d] >= b[d]) return false;
  return true;
}

struct RowScan {
  std::vector<ActivePolyadRecord> records;
  uint64_t inner = 0;
};

// Inner body of the scan for one ordered pair (i1, i1b). The candidate tail
// pair comes from E_{i1} x E', where E' is E_{i1b} when D is even and E_{i1}
// when D is odd: the all-bottom edge carries sign (-1)^D, so only for even D
// must the bottom row itself be a positive edge.
void scan_pair(const SparseCountGraph& graph, int32_t i1, int32_t i1b,
               RowScan& out) {
  const int dims = graph.dims();
  const uint32_t nsel = 1u << dims;
  const uint32_t all = nsel - 1;
  const bool even = dims % 2 == 0;
  // The candidate row itself is one of the polyad's edges: the all-bottom
  // edge when D is even, the bottom-tails-top-head edge when D is odd.
  const uint32_t candidate_sel = even ? all : (all & ~1u);
  const auto& row_top = graph.row(i1);
  const auto& row_candidates = even ? graph.row(i1b) : graph.row(i1);
  std::vector<int64_t> counts(nsel);
  for (const auto& top_entry : row_top) {
    for (const auto& bot_entry : row_candidates) {
      ++out.inner;
      if (!tail_below(top_entry.tail, bot_entry.tail)) continue;
      Polyad p(top_entry.tail.with_front(i1), bot_entry.tail.with_front(i1b));
      // Positive-sign edges first; any zero kills the candidate.
      int64_t m = INT64_MAX, M = INT64_MAX;
      bool dead = false;
      for (uint32_t sel = 0; sel < nsel && !dead; ++sel) {
        if (Polyad::selector_sign(sel) < 0) continue;
        int64_t y;
        if (sel == 0)
          y = top_entry.count;
        else if (sel == candidate_sel)
          y = bot_entry.count;
        else
          y = graph.count(p.edge(sel));
        counts[sel] = y;
        if (y == 0) dead = true;
        m = std::min(m, y);
      }
      if (dead) continue;
      for (uint32_t sel = 0; sel < nsel; ++sel) {
        if (Polyad::selector_sign(sel) > 0) continue;
        int64_t y = sel == candidate_sel ? bot_entry.count
                                         : graph.count(p.edge(sel));
        counts[sel] = y;
        M = std::min(M, y);
      }
      if (M > 0 && i1 >= i1b) continue;
      out.records.push_back({p, m, M, counts, Eigen::VectorXd()});
    }
  }
}

}  // namespace

EnumerationResult enumerate_active_structural(const SparseCountGraph& graph,
                                              const EnumerationOptions& options) {
  const int32_t n1 = graph.size(0);
  const int dims = graph.dims();
  size_t nblocks_hint = static_cast<size_t>(n1);
  std::vector<RowScan> partials(nblocks_hint);
  std::atomic<uint64_t> emitted{0};

  parallel_blocks(
      static_cast<size_t>(n1), 1, options.workers,
      [&](size_t begin, size_t /*end*/, size_t block) {
        int32_t i1 = static_cast<int32_t>(begin) + 1;
        RowScan& scan = partials[block];
        if (graph.row(i1).empty() && dims % 2 != 0) return;
        for (int32_t i1b = 1; i1b <= n1; ++i1b) {
          if (i1b == i1) continue;
          scan_pair(graph, i1, i1b, scan);
        }
        uint64_t total =
            emitted.fetch_add(scan.records.size(), std::memory_order_relaxed) +
            scan.records.size();
        if (total > options.max_records)
          throw ResourceGuardError(
              "active polyad count exceeds max_records = " +
              std::to_string(options.max_records));
      });

  EnumerationResult result;
  size_t total = 0;
  for (const auto& s : partials) total += s.records.size();
  result.records.reserve(total);
  for (auto& s : partials) {
    result.inner_loop_count += s.inner;
    std::move(s.records.begin(), s.records.end(),
              std::back_inserter(result.records));
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const ActivePolyadRecord& a, const ActivePolyadRecord& b) {
              return a.polyad < b.polyad;
            });
  result.n_active =
      static_cast<uint64_t>(result.records.size()) << dims;
  return result;
}

void attach_covariates(std::vector<ActivePolyadRecord>& records,
                       const CovariateProvider& cov, int workers) {
  if (records.empty()) return;
  const int dims = records.front().dims();
  const uint32_t nsel = 1u << dims;
  const int p = cov.width();

  // Coverage first, so the error carries the full set of gaps.
  std::set<EdgeIndex> missing;
  std::mutex missing_mu;
  parallel_blocks(records.size(), 4096, workers,
                  [&](size_t begin, size_t end, size_t) {
                    std::vector<double> scratch(static_cast<size_t>(p));
                    std::set<EdgeIndex> local;
                    for (size_t r = begin; r < end; ++r)
                      for (uint32_t sel = 0; sel < nsel; ++sel) {
                        EdgeIndex e = records[r].polyad.edge(sel);
                        if (!cov.try_load(e, scratch.data())) local.insert(e);
                      }
                    if (!local.empty()) {
                      std::lock_guard<std::mutex> lk(missing_mu);
                      missing.merge(local);
                    }
                  });
  if (!missing.empty()) {
    std::vector<EdgeIndex> list(missing.begin(), missing.end());
    std::string what = "covariates missing for " +
                       std::to_string(list.size()) + " polyad edge(s):";
    size_t shown = std::min<size_t>(list.size(), 100);
    for (size_t k = 0; k < shown; ++k) what += " " + list[k].str();
    if (shown < list.size()) what += " ...";
    throw MissingCovariateError(std::move(what), std::move(list));
  }

  parallel_blocks(records.size(), 4096, workers,
                  [&](size_t begin, size_t end, size_t) {
                    Eigen::VectorXd x(p);
                    for (size_t r = begin; r < end; ++r) {
                      Eigen::VectorXd acc = Eigen::VectorXd::Zero(p);
                      for (uint32_t sel = 0; sel < nsel; ++sel) {
                        cov.load(records[r].polyad.edge(sel), x.data());
                        if (Polyad::selector_sign(sel) > 0)
                          acc += x;
                        else
                          acc -= x;
                      }
                      records[r].did = std::move(acc);
                    }
                  });
}

EnumerationResult enumerate_active(const SparseCountGraph& graph,
                                   const CovariateProvider& cov,
                                   const EnumerationOptions& options) {
  EnumerationResult result = enumerate_active_structural(graph, options);
  attach_covariates(result.records, cov, options.workers);
  return result;
}

PolyadIncidence build_incidence(
    const std::vector<ActivePolyadRecord>& records) {
  PolyadIncidence inc;
  if (records.empty()) return inc;
  for (uint32_t r = 0; r < records.size(); ++r) {
    const Polyad& p = records[r].polyad;
    const uint32_t nsel = 1u << p.dims();
    const uint32_t all = nsel - 1;
    for (uint32_t mask = 0; mask < nsel; ++mask) {
      // The permutation flipping the columns of mask has top row edge(mask)
      // and bottom row the complementary edge.
      inc.by_edge[p.edge(mask)].push_back({p.edge(~mask & all), r});
    }
  }
  inc.sorted_keys.reserve(inc.by_edge.size());
  for (const auto& [key, partners] : inc.by_edge)
    inc.sorted_keys.push_back(key);
  std::sort(inc.sorted_keys.begin(), inc.sorted_keys.end());
  return inc;
}

}  // namespace polyads
